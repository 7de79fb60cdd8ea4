#include "koopgeo/hannay.hpp"

#include "koopgeo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace koopgeo {

namespace {

constexpr double section_norm_tol = 1e-9;
constexpr double closure_tol = 1e-9;
constexpr double purity_tol = 1e-14;

ParameterPoint lerp(const ParameterPoint& a, const ParameterPoint& b, double t) {
    ParameterPoint out{a.coords};
    for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] += t * (b.coords[i] - a.coords[i]);
    return out;
}

KetVector query(const EigenFamily& family, const ParameterPoint& p, std::size_t k) {
    KetVector v = family.section(p);
    if (std::abs(v.squared_norm() - 1.0) > section_norm_tol)
        throw DomainError("section of family '" + family.name + "' not normalized at sample " + std::to_string(k) +
                          " (‖v‖² = " + std::to_string(v.squared_norm()) + ")");
    return v;
}

[[noreturn]] void rethrow_discontinuous(const NumericalError& e) {
    throw NumericalError(std::string("family discontinuous at loop resolution; refine ParamLoop (") + e.what() + ")");
}

}  // namespace

// --------------------------------------------------------------- ParamLoop

ParamLoop::ParamLoop(std::vector<ParameterPoint> samples, std::optional<ParameterPoint> closure)
    : samples_(std::move(samples)) {
    if (samples_.empty()) throw DomainError("ParamLoop: at least one sample required");
    closure_ = closure ? *closure : samples_.front();
    const std::size_t d = samples_.front().coords.size();
    if (d == 0) throw DimensionError("ParamLoop: parameter points need at least one coordinate");
    auto check = [d](const ParameterPoint& p) {
        if (p.coords.size() != d) throw DimensionError("ParamLoop: inconsistent chart dimension");
        for (double c : p.coords)
            if (!std::isfinite(c)) throw DomainError("ParamLoop: non-finite coordinate");
    };
    for (const auto& p : samples_) check(p);
    check(closure_);
}

ParamLoop ParamLoop::circle(std::size_t samples) {
    if (samples < 1) throw DomainError("ParamLoop::circle: at least one sample required");
    std::vector<ParameterPoint> pts;
    pts.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) pts.push_back({{two_pi * static_cast<double>(k) / static_cast<double>(samples)}});
    return ParamLoop(std::move(pts), ParameterPoint{{two_pi}});
}

ParamLoop ParamLoop::from_curve(const std::function<ParameterPoint(double)>& curve, std::size_t samples) {
    if (samples < 1) throw DomainError("ParamLoop::from_curve: at least one sample required");
    std::vector<ParameterPoint> pts;
    pts.reserve(samples);
    for (std::size_t k = 0; k < samples; ++k) pts.push_back(curve(static_cast<double>(k) / static_cast<double>(samples)));
    return ParamLoop(std::move(pts), curve(1.0));
}

ParamLoop ParamLoop::subdivided(int factor) const {
    if (factor < 1) throw DomainError("ParamLoop::subdivided: factor must be >= 1");
    if (factor == 1) return *this;
    std::vector<ParameterPoint> pts;
    pts.reserve(samples_.size() * static_cast<std::size_t>(factor));
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const ParameterPoint& a = samples_[k];
        const ParameterPoint& b = (k + 1 < samples_.size()) ? samples_[k + 1] : closure_;
        pts.push_back(a);
        for (int j = 1; j < factor; ++j) pts.push_back(lerp(a, b, static_cast<double>(j) / factor));
    }
    return ParamLoop(std::move(pts), closure_);
}

ParamLoop ParamLoop::reversed() const {
    std::vector<ParameterPoint> pts;
    pts.reserve(samples_.size());
    pts.push_back(closure_);
    for (std::size_t k = samples_.size() - 1; k > 0; --k) pts.push_back(samples_[k]);
    return ParamLoop(std::move(pts), samples_.front());
}

ParamLoop ParamLoop::rotated(std::size_t shift) const {
    shift %= samples_.size();
    if (shift == 0) return *this;
    auto shifted = [&](const ParameterPoint& p) {
        ParameterPoint out{p.coords};
        for (std::size_t i = 0; i < out.coords.size(); ++i)
            out.coords[i] += closure_.coords[i] - samples_.front().coords[i];
        return out;
    };
    std::vector<ParameterPoint> pts(samples_.begin() + static_cast<std::ptrdiff_t>(shift), samples_.end());
    for (std::size_t k = 0; k < shift; ++k) pts.push_back(shifted(samples_[k]));
    return ParamLoop(std::move(pts), shifted(samples_[shift]));
}

// ---------------------------------------------------------------- pull-back

RayLoop pullback_ray_loop(const EigenFamily& family, const ParamLoop& loop, const Tolerances& tol) {
    if (!family.section) throw DomainError("family '" + family.name + "' has no section");
    std::vector<Ray> rays;
    rays.reserve(loop.size());
    for (std::size_t k = 0; k < loop.size(); ++k) rays.push_back(to_ray(query(family, loop.samples()[k], k)));

    const Ray again = to_ray(family.section(loop.basepoint()));
    if (!again.equals(rays.front(), purity_tol))
        throw NumericalError("section of family '" + family.name + "' is not pure: re-query at the basepoint differs");
    const Ray closing = to_ray(query(family, loop.closure(), loop.size()));
    if (!closing.equals(rays.front(), closure_tol))
        throw DomainError("parameter loop does not close: section at the closure point is a different ray");

    if (rays.size() == 1) rays.push_back(rays.front());
    try {
        return RayLoop(std::move(rays), tol);
    } catch (const NumericalError& e) {
        rethrow_discontinuous(e);
    }
}

HannayRecord hannay_phase(const EigenFamily& family, const ParamLoop& loop, double rtol, PullbackRefinement mode,
                          const Tolerances& tol) {
    if (!(rtol > 0.0)) throw DomainError("rtol must be > 0");
    const RayLoop coarse = pullback_ray_loop(family, loop, tol);
    HolonomyResult hol;
    if (mode == PullbackRefinement::ray_geodesic) {
        hol = holonomy_at(coarse, rtol, tol);
    } else {
        auto level_phase = [&](int level) -> HolonomyResult {
            if (level == 0) return pancharatnam_phase(coarse, tol);
            const ParamLoop fine = loop.subdivided(1 << level);
            try {
                return pancharatnam_phase(
                    fine.size(), [&](std::size_t k) { return query(family, fine.samples()[k], k); }, tol);
            } catch (const NumericalError& e) {
                rethrow_discontinuous(e);
            }
        };
        hol = converge_levels(level_phase, rtol, tol.max_doublings);
    }
    HannayRecord rec;
    rec.phase = hol.phase;
    rec.mode = family.mode;
    rec.loop_resolution = hol.nodes;
    rec.refinement_error = hol.refinement_error;
    rec.history = std::move(hol.history);
    return rec;
}

double adiabatic_eigen_check(const EigenFamily& family,
                             const std::function<KoopmanOperator(const ParameterPoint&)>& op_at,
                             const ParamLoop& loop) {
    double worst = 0.0;
    for (std::size_t k = 0; k < loop.size(); ++k) {
        const ParameterPoint& p = loop.samples()[k];
        const KetVector psi = query(family, p, k);
        const KetVector image = op_at(p).apply(psi);
        const complex eigen = inner(psi, image);
        worst = std::max(worst, (image - eigen * psi).norm());
    }
    return worst;
}

// ----------------------------------------------------------------- families

EigenFamily constant_family(const KetVector& v) {
    const KetVector unit = normalize(v);
    return EigenFamily{unit.terms().front().first, [unit](const ParameterPoint&) { return unit; }, "constant"};
}

EigenFamily pure_phase_family(const ModeIndex& n, std::function<double(const ParameterPoint&)> chi) {
    return EigenFamily{n,
                       [n, chi = std::move(chi)](const ParameterPoint& p) {
                           return KetVector(n.dim(), {{n, std::polar(1.0, chi(p))}});
                       },
                       "pure_phase"};
}

int required_k_cut(double r) {
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("coherent ring: r must be > 0");
    // Terms r^{2k}/(k!)^2 decay factorially once k > r.
    std::vector<double> terms;
    double t = 1.0;
    for (int k = 0;; ++k) {
        if (k > 0) t *= (r / k) * (r / k);
        terms.push_back(t);
        if (k > r && t < 1e-40) break;
        if (k > 100000) throw DomainError("coherent ring: r too large");
    }
    double tail = 0.0;
    int cut = static_cast<int>(terms.size()) - 1;
    for (int k = static_cast<int>(terms.size()) - 1; k >= 0; --k) {
        if (tail >= 1e-16) break;
        cut = k;
        tail += terms[static_cast<std::size_t>(k)];
    }
    return cut;
}

EigenFamily coherent_ring_family(double r, int k_cut) {
    const int need = required_k_cut(r);
    if (k_cut < need)
        throw DomainError("coherent ring: k_cut = " + std::to_string(k_cut) + " too small for r = " +
                          std::to_string(r) + "; need k_cut >= " + std::to_string(need));
    auto section = [r, k_cut](const ParameterPoint& p) {
        if (p.coords.size() != 1) throw DimensionError("coherent ring: chart is the circle angle beta only");
        const double beta = p.coords[0];
        std::vector<KetVector::Term> terms;
        terms.reserve(static_cast<std::size_t>(k_cut) + 1);
        double magnitude = 1.0;
        for (int k = 0; k <= k_cut; ++k) {
            if (k > 0) magnitude *= r / k;
            terms.emplace_back(ModeIndex{k}, std::polar(magnitude, k * beta));
        }
        return normalize(KetVector(1, std::move(terms)));
    };
    return EigenFamily{ModeIndex{0}, section, "coherent_ring"};
}

EigenFamily tabulated_family(TabulatedFamily table, const ModeIndex& label) {
    auto& s = table.samples;
    if (s.empty()) throw DomainError("tabulated family: no samples");
    if (!(table.period > 0.0)) throw DomainError("tabulated family: period must be > 0");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].second.dim() != s.front().second.dim()) throw DimensionError("tabulated family: mixed torus dimensions");
        s[i].second = normalize(s[i].second);
        if (i > 0 && !(s[i].first > s[i - 1].first))
            throw DomainError("tabulated family: parameter values must be strictly increasing");
    }
    if (!(s.back().first - s.front().first < table.period))
        throw DomainError("tabulated family: samples span more than one period");

    auto section = [table = std::move(table)](const ParameterPoint& p) {
        if (p.coords.size() != 1) throw DimensionError("tabulated family: one-dimensional chart expected");
        const auto& samples = table.samples;
        const double origin = samples.front().first;
        double x = std::fmod(p.coords[0] - origin, table.period);
        if (x < 0) x += table.period;
        x += origin;
        auto it = std::upper_bound(samples.begin(), samples.end(), x,
                                   [](double v, const auto& sample) { return v < sample.first; });
        const std::size_t i = static_cast<std::size_t>(std::distance(samples.begin(), it)) - 1;
        const KetVector& a = samples[i].second;
        const double t0 = samples[i].first;
        const bool wraps = i + 1 == samples.size();
        const double t1 = wraps ? origin + table.period : samples[i + 1].first;
        const double t = (x - t0) / (t1 - t0);
        if (t == 0.0 || samples.size() == 1) return a;
        const KetVector& b = samples[wraps ? 0 : i + 1].second;
        const complex u = inner(a, b);
        const complex align = std::abs(u) > 0.0 ? std::conj(u) / std::abs(u) : complex(1.0, 0.0);
        const KetVector mixed = complex(1.0 - t) * a + (t * align) * b;
        if (mixed.norm() < 1e-12) throw NumericalError("tabulated family: interpolation through the null vector");
        return normalize(mixed);
    };
    return EigenFamily{label, section, "tabulated"};
}

TabulatedFamily read_tabulated_family(std::istream& in, std::size_t mode_dim, double period) {
    if (mode_dim == 0) throw DimensionError("tabulated family: mode dimension must be >= 1");
    TabulatedFamily table;
    table.period = period;
    std::vector<KetVector::Term> pending;
    std::optional<double> pending_beta;
    auto flush = [&] {
        if (pending_beta) table.samples.emplace_back(*pending_beta, KetVector(mode_dim, std::move(pending)));
        pending.clear();
    };
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream fields(line);
        std::vector<double> values;
        double v;
        while (fields >> v) values.push_back(v);
        if (!fields.eof()) throw ConfigError("family_file:" + std::to_string(line_no), "non-numeric field");
        if (values.empty()) continue;
        if (values.size() != mode_dim + 3)
            throw ConfigError("family_file:" + std::to_string(line_no),
                              "expected " + std::to_string(mode_dim + 3) + " columns, got " + std::to_string(values.size()));
        std::vector<std::int64_t> comps;
        for (std::size_t i = 0; i < mode_dim; ++i) {
            const double c = values[1 + i];
            if (c != std::floor(c) || std::abs(c) > 1e15)
                throw ConfigError("family_file:" + std::to_string(line_no), "mode index components must be integers");
            comps.push_back(static_cast<std::int64_t>(c));
        }
        if (!pending_beta || *pending_beta != values[0]) {
            flush();
            pending_beta = values[0];
        }
        pending.emplace_back(ModeIndex(std::move(comps)), complex(values[mode_dim + 1], values[mode_dim + 2]));
    }
    if (in.bad()) throw IoError("tabulated family: read failure");
    flush();
    if (table.samples.empty()) throw ConfigError("family_file", "no samples");
    return table;
}

void write_tabulated_family(std::ostream& out, const TabulatedFamily& table) {
    out << "# beta n_1..n_d re im\n" << std::setprecision(17);
    for (const auto& [beta, ket] : table.samples)
        for (const auto& [n, c] : ket.terms()) {
            out << beta;
            for (auto comp : n.components()) out << ' ' << comp;
            out << ' ' << c.real() << ' ' << c.imag() << '\n';
        }
}

}  // namespace koopgeo
