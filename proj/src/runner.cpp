#include "koopgeo/runner.hpp"

#include "koopgeo/errors.hpp"
#include "koopgeo/hannay.hpp"
#include "koopgeo/koopman.hpp"
#include "koopgeo/moving_frame.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace koopgeo {

using nlohmann::json;

namespace {

json history_json(const std::vector<RefinementLevel>& history) {
    json rows = json::array();
    for (const auto& h : history)
        rows.push_back({{"level", h.level}, {"nodes", h.nodes}, {"phase", h.phase}, {"delta", h.delta}});
    return rows;
}

void require_finite(const json& j, const std::string& path) {
    if (j.is_number_float() && !std::isfinite(j.get<double>()))
        throw NumericalError("non-finite value in results at " + path);
    if (j.is_object())
        for (const auto& item : j.items()) require_finite(item.value(), path + "." + item.key());
    if (j.is_array())
        for (std::size_t i = 0; i < j.size(); ++i) require_finite(j[i], path + "[" + std::to_string(i) + "]");
}

struct Outcome {
    json results;
    std::optional<std::vector<RefinementLevel>> convergence;
};

Outcome run_unitarity(const UnitarityParams& p, const KoopmanOperator& op) {
    const std::vector<ModeIndex> box = box_modes(op.dim(), p.mode_box);
    std::mt19937_64 rng(p.seed);
    std::vector<KetVector> sample;
    sample.reserve(static_cast<std::size_t>(p.sample_size));
    std::vector<std::size_t> idx(box.size());
    for (int s = 0; s < p.sample_size; ++s) {
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<ModeIndex> support;
        for (int k = 0; k < p.support; ++k) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(k), idx.size() - 1);
            std::swap(idx[static_cast<std::size_t>(k)], idx[pick(rng)]);
            support.push_back(box[idx[static_cast<std::size_t>(k)]]);
        }
        sample.push_back(haar_random_ket(support, rng));
    }
    return {{{"max_defect", unitarity_defect(op, sample)}, {"sample_size", p.sample_size}}, std::nullopt};
}

Outcome holonomy_outcome(const HolonomyResult& h) {
    return {{{"phase", h.phase},
             {"min_overlap", h.min_overlap},
             {"refinement_error", h.refinement_error},
             {"nodes", h.nodes},
             {"convergence", history_json(h.history)}},
            h.history};
}

Outcome run_holonomy(const HolonomyParams& p, const Tolerances& tol) {
    const HolonomyResult h = std::visit(
        [&](const auto& loop) -> HolonomyResult {
            using L = std::decay_t<decltype(loop)>;
            if constexpr (std::is_same_v<L, CircleLoopSpec>) {
                return holonomy_at(two_mode_circle(loop.theta, loop.first, loop.second, loop.initial_nodes), p.rtol,
                                   tol, p.estimator);
            } else if constexpr (std::is_same_v<L, PolygonLoopSpec>) {
                return holonomy_at(RayLoop::from_kets(loop.nodes, tol), p.rtol, tol, p.estimator);
            } else {
                const Ray r = to_ray(loop.ket);
                return holonomy_at(RayLoop(std::vector<Ray>(loop.nodes, r), tol), p.rtol, tol, p.estimator);
            }
        },
        p.loop);
    Outcome out = holonomy_outcome(h);
    out.results["estimator"] = p.estimator == Estimator::bargmann ? "bargmann" : "parallel_transport";
    return out;
}

Outcome run_moving_frame(const MovingFrameParams& p, const KoopmanOperator& op, const Tolerances& tol) {
    const Frame frame = Frame::basis(p.frame_modes);
    const Ray& member = frame.member(p.member);
    const FrameExcursion exc = std::visit(
        [&](const auto& e) -> FrameExcursion {
            using E = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<E, InjectionExcursion>)
                return phase_injection_excursion(member, e.theta, e.aux);
            else if constexpr (std::is_same_v<E, PolygonExcursion>)
                return FrameExcursion(RayLoop::from_kets(e.nodes, tol));
            else
                return FrameExcursion::stationary(member);
        },
        p.excursion);
    const auto records = frame_net_states(op, frame, exc, p.member, p.rtol, tol);

    json members = json::array();
    for (std::size_t i = 0; i < records.size(); ++i) {
        const KetVector n_ket = KetVector::basis(p.frame_modes[i]);
        members.push_back({{"mode", to_json(p.frame_modes[i])},
                           {"geometric_phase", records[i].geometric_phase},
                           {"extracted_phase", extract_geometric_phase(records[i].total, op, n_ket, tol)}});
    }
    const NetPhaseRecord& moved = records[p.member];
    return {{{"geometric_phase", moved.geometric_phase},
             {"extracted_phase", members[p.member]["extracted_phase"]},
             {"total", to_json(moved.total)},
             {"dynamical_part", to_json(moved.dynamical_part)},
             {"members", members},
             {"convergence", history_json(moved.holonomy.history)}},
            moved.holonomy.history};
}

EigenFamily build_family(const FamilySpec& spec) {
    return std::visit(
        [](const auto& f) -> EigenFamily {
            using F = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<F, CoherentRingSpec>) {
                return coherent_ring_family(f.r, f.k_cut);
            } else if constexpr (std::is_same_v<F, ConstantFamilySpec>) {
                return constant_family(f.ket);
            } else if constexpr (std::is_same_v<F, PurePhaseSpec>) {
                const double w = static_cast<double>(f.winding);
                return pure_phase_family(f.mode, [w](const ParameterPoint& p) { return w * p.coords.at(0); });
            } else {
                std::ifstream in(f.file);
                if (!in) throw IoError("cannot open family file " + f.file);
                return tabulated_family(read_tabulated_family(in, f.mode_dim, f.period), f.label);
            }
        },
        spec);
}

ParamLoop build_param_loop(const ParamLoopSpec& spec) {
    return std::visit(
        [](const auto& l) -> ParamLoop {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, CircleParamLoop>)
                return ParamLoop::circle(l.samples);
            else
                return ParamLoop(l.points, l.closure);
        },
        spec);
}

Outcome run_hannay(const HannayParams& p, const std::optional<KoopmanOperator>& system, const Tolerances& tol) {
    const EigenFamily family = build_family(p.family);
    const ParamLoop loop = build_param_loop(p.loop);
    const HannayRecord rec = hannay_phase(family, loop, p.rtol, p.refinement, tol);
    Outcome out{{{"phase", rec.phase},
                 {"mode", to_json(rec.mode)},
                 {"loop_resolution", rec.loop_resolution},
                 {"refinement_error", rec.refinement_error},
                 {"refinement", p.refinement == PullbackRefinement::parameter_space ? "parameter_space" : "ray_geodesic"},
                 {"convergence", history_json(rec.history)}},
                rec.history};
    if (system) {
        const KoopmanOperator op = *system;
        out.results["adiabatic_residual"] =
            adiabatic_eigen_check(family, [op](const ParameterPoint&) { return op; }, loop);
    }
    return out;
}

Outcome run_sample(const HolonomySampleParams& p, const Tolerances& tol) {
    const Ray base = to_ray(p.basepoint);
    const auto loops = sample_holonomy_loops(base, p.n_loops, p.seed, p.modes, tol);
    std::vector<double> phases;
    double reversal = 0.0;
    for (const auto& loop : loops) {
        const double ph = pancharatnam_phase(loop, tol).phase;
        phases.push_back(ph);
        reversal = std::max(reversal, std::abs(wrap_phase(ph + pancharatnam_phase(loop.reversed(), tol).phase)));
    }
    // Largest empty arc of the sampled subgroup of U(1).
    std::vector<double> sorted = phases;
    std::sort(sorted.begin(), sorted.end());
    double gap = two_pi - (sorted.back() - sorted.front());
    for (std::size_t i = 1; i < sorted.size(); ++i) gap = std::max(gap, sorted[i] - sorted[i - 1]);
    return {{{"phases", phases},
             {"n_loops", phases.size()},
             {"largest_gap", gap},
             {"reversal_residual", reversal},
             {"trivial_loop_phase", phases.front()}},
            std::nullopt};
}

json provenance(const Scenario& s) {
    json prov = {{"tool", tool_name}, {"version", tool_version}, {"tolerances", to_json(s.tolerances)}};
    std::visit(
        [&](const auto& p) {
            if constexpr (requires { p.seed; }) prov["seed"] = p.seed;
            if constexpr (requires { p.rtol; }) prov["rtol"] = p.rtol;
        },
        s.params);
    return prov;
}

}  // namespace

ErrorInfo classify(const std::exception_ptr& error) {
    try {
        std::rethrow_exception(error);
    } catch (const ConfigError& e) {
        return {"ConfigError", e.what(), exit_code::config};
    } catch (const DimensionError& e) {
        return {"DimensionError", e.what(), exit_code::config};
    } catch (const DomainError& e) {
        return {"DomainError", e.what(), exit_code::config};
    } catch (const ConvergenceError& e) {
        return {"ConvergenceError", e.what(), exit_code::numerical};
    } catch (const NumericalError& e) {
        return {"NumericalError", e.what(), exit_code::numerical};
    } catch (const RangeError& e) {
        return {"RangeError", e.what(), exit_code::numerical};
    } catch (const IoError& e) {
        return {"IoError", e.what(), exit_code::io};
    } catch (const std::exception& e) {
        return {"InternalError", e.what(), exit_code::internal};
    } catch (...) {
        return {"InternalError", "unknown exception", exit_code::internal};
    }
}

Report failed_report(const ErrorInfo& error) {
    Report r;
    r.ok = false;
    r.exit_code = error.exit_code;
    r.document = {{"schema_version", report_schema_version},
                  {"status", "failed"},
                  {"error", {{"kind", error.kind}, {"message", error.message}}},
                  {"provenance", {{"tool", tool_name}, {"version", tool_version}}}};
    return r;
}

Report run(const Scenario& s) {
    Report r;
    r.document = {{"schema_version", report_schema_version}, {"scenario", serialize(s)}, {"provenance", provenance(s)}};
    try {
        const Outcome out = std::visit(
            [&](const auto& p) -> Outcome {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, UnitarityParams>)
                    return run_unitarity(p, s.system.value());
                else if constexpr (std::is_same_v<P, HolonomyParams>)
                    return run_holonomy(p, s.tolerances);
                else if constexpr (std::is_same_v<P, MovingFrameParams>)
                    return run_moving_frame(p, s.system.value(), s.tolerances);
                else if constexpr (std::is_same_v<P, HannayParams>)
                    return run_hannay(p, s.system, s.tolerances);
                else
                    return run_sample(p, s.tolerances);
            },
            s.params);
        require_finite(out.results, "results");
        r.ok = true;
        r.exit_code = exit_code::ok;
        r.document["status"] = "ok";
        r.document["results"] = out.results;
        r.convergence = out.convergence;
    } catch (...) {
        const ErrorInfo e = classify(std::current_exception());
        r.ok = false;
        r.exit_code = e.exit_code;
        r.document["status"] = "failed";
        r.document["error"] = {{"kind", e.kind}, {"message", e.message}};
    }
    return r;
}

std::string report_text(const Report& report) { return report.document.dump(2) + "\n"; }

void write_report(const Report& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report_text(report);
    if (!out) throw IoError("failed writing report " + path.string());
}

std::string convergence_table(const Report& report) {
    if (!report.ok) throw DomainError("no convergence table for a failed run");
    if (!report.convergence) throw DomainError("report carries no refinement sequence");
    std::string out = "level,nodes,phase,delta\n";
    char line[128];
    for (const auto& h : *report.convergence) {
        std::snprintf(line, sizeof line, "%d,%zu,%.17g,%.17g\n", h.level, h.nodes, h.phase, h.delta);
        out += line;
    }
    return out;
}

void emit_convergence_table(const Report& report, const std::filesystem::path& path) {
    const std::string table = convergence_table(report);
    std::ofstream out(path);
    if (!out) throw IoError("cannot write convergence table " + path.string());
    out << table;
    if (!out) throw IoError("failed writing convergence table " + path.string());
}

}  // namespace koopgeo
