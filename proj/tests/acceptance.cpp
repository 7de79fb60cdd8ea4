// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include "generators.hpp"
#include "koopgeo/errors.hpp"
#include "koopgeo/hannay.hpp"
#include "koopgeo/moving_frame.hpp"
#include "koopgeo/runner.hpp"
#include "koopgeo/scenario.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace koopgeo;
using nlohmann::json;
using oracle::circular_distance;

namespace {

const std::filesystem::path scenario_dir = KOOPGEO_SCENARIO_DIR;
const double r2 = 1.0 / std::sqrt(2.0);

// Collects failed checks for one criterion.
struct Checker {
    std::vector<std::string> failures;
    double worst = 0.0;

    void expect(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    // Records err against its bound; worst holds the largest err / bound seen.
    void within(double err, double bound, const std::string& what) {
        worst = std::max(worst, err / bound);
        if (!(err <= bound)) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " (err %.3g > %.3g)", err, bound);
            failures.push_back(what + buf);
        }
    }
};

int failed_criteria = 0;

void criterion(int id, const char* title, const std::function<void(Checker&)>& body) {
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool ok = c.failures.empty();
    if (!ok) ++failed_criteria;
    std::printf("criterion %d %-40s %s  worst err/tol %.3g  %.2fs\n", id, title, ok ? "PASS" : "FAIL", c.worst, secs);
    for (std::size_t i = 0; i < c.failures.size() && i < 5; ++i) std::printf("    %s\n", c.failures[i].c_str());
    std::fflush(stdout);
}

std::vector<std::filesystem::path> shipped() {
    std::vector<std::filesystem::path> out;
    for (const auto& e : std::filesystem::directory_iterator(scenario_dir))
        if (e.path().extension() == ".json" && e.path().filename() != "batch.json") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<KetVector> triangle() {
    return {KetVector::basis({1, 0}), KetVector(2, {{ModeIndex{1, 0}, r2}, {ModeIndex{0, 1}, r2}}),
            KetVector(2, {{ModeIndex{1, 0}, r2}, {ModeIndex{0, 1}, complex(0, r2)}})};
}

const double circle_thetas[] = {pi / 6, pi / 3, pi / 2};

std::vector<std::vector<KetVector>> random_loops() {
    std::mt19937_64 rng(4);
    std::vector<std::vector<KetVector>> out;
    for (int i = 0; i < 500; ++i) out.push_back(gen::loop_kets(rng, gen::four_modes()));
    return out;
}

// Every numeric leaf of a and b, paired by position.
void numeric_drift(const json& a, const json& b, double& drift, bool& same_shape) {
    if (a.is_number() && b.is_number()) {
        drift = std::max(drift, std::abs(a.get<double>() - b.get<double>()));
    } else if (a.is_structured() && b.is_structured() && a.size() == b.size() && a.type() == b.type()) {
        if (a.is_object())
            for (auto it = a.begin(); it != a.end(); ++it) {
                if (!b.contains(it.key())) same_shape = false;
                else numeric_drift(*it, b[it.key()], drift, same_shape);
            }
        else
            for (std::size_t i = 0; i < a.size(); ++i) numeric_drift(a[i], b[i], drift, same_shape);
    } else if (a != b) {
        same_shape = false;
    }
}

}  // namespace

int main() {
    criterion(1, "koopman fidelity", [](Checker& c) {
        const KetVector moved = apply(uncoupled_oscillators(1.0, 3.0, 1.0), KetVector::basis({1, 2}));
        c.expect(moved.terms().size() == 1, "translation keeps the support");
        c.within(std::abs(moved.amplitude({1, 2}) - std::polar(1.0, 7.0)), 1e-15, "translation amplitude exp(7i)");
        const KoopmanOperator cat = arnold_cat_operator();
        c.expect(apply(cat, KetVector::basis({1, 0})) == KetVector::basis({1, 1}), "cat maps |(1,0)> to |(1,1)>");
        std::mt19937_64 rng(1);
        std::vector<KetVector> sample;
        for (int i = 0; i < 100; ++i) sample.push_back(gen::ket(rng, 2, 1 + i % 6, 6));
        c.expect(unitarity_defect(cat, sample) == 0.0, "cat unitarity defect exactly 0");
    });

    criterion(2, "two-mode circle holonomy", [](Checker& c) {
        for (double theta : circle_thetas) {
            const auto t0 = std::chrono::steady_clock::now();
            const HolonomyResult h = holonomy_at(two_mode_circle(theta, {0}, {1}), 1e-6);
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            c.within(circular_distance(h.phase, oracle::two_state_phase(theta)), 1e-5, "phase at theta " + std::to_string(theta));
            c.within(secs, 1.0, "runtime at theta " + std::to_string(theta));
        }
    });

    criterion(3, "bargmann triangle", [](Checker& c) {
        c.within(std::abs(pancharatnam_phase(triangle()).phase + pi / 4), 1e-8, "triangle phase -pi/4");
        const Report rep = run(load_scenario(scenario_dir / "holonomy_triangle.json"));
        c.expect(rep.ok, "triangle scenario runs");
        if (rep.ok) c.within(std::abs(rep.document["results"]["phase"].get<double>() + pi / 4), 1e-8, "triangle scenario phase");
    });

    criterion(4, "gauge, cyclic and reversal invariance", [](Checker& c) {
        std::mt19937_64 rng(5);
        for (const auto& kets : random_loops()) {
            const double phase = pancharatnam_phase(kets).phase;
            c.within(circular_distance(pancharatnam_phase(gen::regauged(rng, kets)).phase, phase), 1e-12, "gauge");
            const RayLoop loop = RayLoop::from_kets(kets);
            for (std::size_t s = 1; s < loop.size(); ++s)
                c.within(circular_distance(pancharatnam_phase(loop.rotated(s)).phase, phase), 1e-12, "cyclic");
            c.within(circular_distance(pancharatnam_phase(loop.reversed()).phase, -phase), 1e-12, "reversal");
        }
    });

    criterion(5, "estimator identity", [](Checker& c) {
        const auto agree = [&](std::span<const KetVector> kets, const std::string& what) {
            c.within(circular_distance(pancharatnam_phase(kets).phase, parallel_transport_phase(kets).phase), 1e-12, what);
        };
        for (double theta : circle_thetas) {
            const LoopCurve curve = two_mode_circle(theta, {0}, {1});
            for (std::size_t K = 32; K <= 4096; K *= 2) {
                const RayLoop loop = sample_loop(curve, K);
                std::vector<KetVector> kets;
                for (const Ray& r : loop.nodes()) kets.push_back(r.representative());
                agree(kets, "circle K=" + std::to_string(K));
            }
            const double b = holonomy_at(curve, 1e-6, {}, Estimator::bargmann).phase;
            const double p = holonomy_at(curve, 1e-6, {}, Estimator::parallel_transport).phase;
            c.within(circular_distance(b, p), 1e-12, "converged circle");
        }
        agree(triangle(), "triangle");
        for (const auto& kets : random_loops()) agree(kets, "random loop");
    });

    criterion(6, "moving-frame round trip", [](Checker& c) {
        const Frame osc_frame = Frame::basis({ModeIndex{1, 2}, ModeIndex{0, 1}, ModeIndex{2, 0}});
        const Frame cat_frame = Frame::basis({ModeIndex{1, 0}, ModeIndex{0, 1}, ModeIndex{1, 1}});
        const KoopmanOperator osc = uncoupled_oscillators(1.0, 3.0, 1.0);
        const KoopmanOperator cat = arnold_cat_operator();

        const auto ex3 = excursion_net_state(osc, osc_frame, phase_injection_excursion(osc_frame.member(0), pi / 2), 0);
        c.within(std::abs(ex3.geometric_phase - pi / 2), 1e-12, "oscillator example phase");
        c.within(distance(ex3.total, KetVector::basis({1, 2}).scaled(std::polar(1.0, 7.0 + pi / 2))), 1e-10,
                 "oscillator example state");
        const auto ex4 = excursion_net_state(cat, cat_frame, phase_injection_excursion(cat_frame.member(0), pi), 0);
        c.within(circular_distance(ex4.geometric_phase, pi), 1e-12, "cat example phase");
        c.within(distance(ex4.total, KetVector::basis({1, 1}).scaled(-1.0)), 1e-10, "cat example state");

        std::mt19937_64 rng(6);
        std::uniform_int_distribution<int> comp(-4, 4);
        const std::pair<const KoopmanOperator*, const Frame*> systems[] = {{&osc, &osc_frame}, {&cat, &cat_frame}};
        for (const auto& [op, frame] : systems) {
            for (int trial = 0; trial < 100; ++trial) {
                const std::size_t m = static_cast<std::size_t>(trial) % frame->size();
                const Ray& member = frame->member(m);
                const KetVector& n_ket = member.representative();
                const double theta = gen::angle(rng);
                ModeIndex aux{comp(rng), comp(rng)};
                if (n_ket.amplitude(aux) != complex(0.0)) aux = aux + ModeIndex{7, 0};
                const auto rec = excursion_net_state(*op, *frame, phase_injection_excursion(member, theta, aux), m);
                c.within(circular_distance(extract_geometric_phase(rec.total, *op, n_ket), theta), 1e-10, "injected holonomy");
            }
        }
    });

    criterion(7, "hannay pullback", [](Checker& c) {
        const double rtol = 1e-8;
        const KetVector v(1, {{ModeIndex{0}, 1.0}, {ModeIndex{4}, complex(0.0, 2.0)}});
        c.within(std::abs(hannay_phase(constant_family(v), ParamLoop::circle(8), rtol).phase), rtol, "constant family");
        const auto chi = pure_phase_family({1, 1}, [](const ParameterPoint& p) { return 3.0 * p.coords[0] + std::sin(p.coords[0]); });
        c.within(std::abs(hannay_phase(chi, ParamLoop::circle(8), rtol).phase), rtol, "pure-phase family");

        const auto ring = [](double r) { return coherent_ring_family(r, required_k_cut(r) + 4); };
        for (double r : {0.5, 1.0, 2.0}) {
            const double exact = oracle::wrap(oracle::coherent_ring_phase(r));
            c.within(circular_distance(hannay_phase(ring(r), ParamLoop::circle(16), 1e-6).phase, exact), 1e-5,
                     "coherent ring r=" + std::to_string(r));
        }

        const EigenFamily f = ring(1.0);
        const double converged = hannay_phase(f, ParamLoop::circle(8), 1e-9).phase;
        const double coarse = hannay_phase(f, ParamLoop::circle(8), 1e-9, PullbackRefinement::ray_geodesic).phase;
        c.expect(circular_distance(coarse, converged) > 1e-2, "geodesic refinement disagrees at K=8");
        const double fine = hannay_phase(f, ParamLoop::circle(4096), 1e-9, PullbackRefinement::ray_geodesic).phase;
        c.within(circular_distance(fine, converged), 1e-6, "refinement modes agree at K=4096");
    });

    criterion(8, "convergence order", [](Checker& c) {
        Scenario s = load_scenario(scenario_dir / "holonomy_circle.json");
        apply_overrides(s, std::nullopt, 1e-10);
        const Report rep = run(s);
        c.expect(rep.ok, "circle scenario converges");
        if (!rep.ok) return;
        const std::filesystem::path path = std::filesystem::temp_directory_path() / "koopgeo_acceptance_table.csv";
        emit_convergence_table(rep, path);
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        c.expect(line == "level,nodes,phase,delta", "table header");
        std::vector<std::pair<unsigned long, double>> rows;
        while (std::getline(in, line)) {
            std::stringstream ls(line);
            std::string level, nodes, phase, delta;
            std::getline(ls, level, ',');
            std::getline(ls, nodes, ',');
            std::getline(ls, phase, ',');
            std::getline(ls, delta, ',');
            rows.emplace_back(std::stoul(nodes), std::abs(std::stod(delta)));
        }
        std::filesystem::remove(path);
        int ratios = 0;
        // rows[i].second is the change from rows[i-1].first to rows[i].first nodes.
        for (std::size_t i = 2; i < rows.size(); ++i) {
            if (rows[i - 1].first <= 64) continue;
            ++ratios;
            const double ratio = rows[i - 1].second / rows[i].second;
            c.expect(ratio >= 3.5, "ratio " + std::to_string(ratio) + " at K=" + std::to_string(rows[i].first));
        }
        c.expect(ratios >= 3, "at least three doublings beyond K=64");
    });

    criterion(9, "cli determinism and schema round trip", [](Checker& c) {
        for (const auto& path : shipped()) {
            const std::string name = path.filename().string();
            const Scenario s = load_scenario(path);
            c.expect(parse_scenario(serialize(s)) == s, name + " round trip");
            c.expect(parse_scenario_text(serialize(s).dump(2)) == s, name + " text round trip");
            const Report a = run(s);
            const Report b = run(s);
            c.expect(a.ok && b.ok, name + " runs");
            double drift = 0.0;
            bool same_shape = true;
            numeric_drift(a.document, b.document, drift, same_shape);
            c.expect(same_shape, name + " same report shape");
            c.within(drift, 1e-12, name + " drift");
        }
    });

    std::printf("%s: %d criteria failed\n", failed_criteria == 0 ? "PASS" : "FAIL", failed_criteria);
    return failed_criteria == 0 ? 0 : 1;
}
