#include "koopgeo/holonomy.hpp"

#include "koopgeo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace koopgeo {

namespace {

[[noreturn]] void throw_orthogonal(std::size_t i, std::size_t j, double overlap) {
    throw NumericalError("loop too coarse: orthogonal neighbors (nodes " + std::to_string(i) + " and " +
                         std::to_string(j) + ", overlap " + std::to_string(overlap) + ")");
}

// Normalized overlap <a|b> / (‖a‖‖b‖).
complex unit_overlap(const KetVector& a, const KetVector& b) {
    return inner(a, b) / (a.norm() * b.norm());
}

// Streaming Bargmann product over K nodes produced by node(k).
template <class Node>
HolonomyResult bargmann_stream(std::size_t K, Node&& node, const Tolerances& tol) {
    if (K < 2) throw DomainError("loop needs at least 2 nodes");
    HolonomyResult out;
    out.nodes = K;
    out.min_overlap = std::numeric_limits<double>::infinity();
    const KetVector first = node(0);
    KetVector prev = first;
    complex product{1.0, 0.0};
    for (std::size_t k = 1; k <= K; ++k) {
        KetVector cur = (k == K) ? first : KetVector(node(k));
        const complex z = unit_overlap(prev, cur);
        const double m = std::abs(z);
        if (!(m > tol.overlap)) throw_orthogonal(k - 1, k % K, m);
        product *= z / m;
        out.min_overlap = std::min(out.min_overlap, m);
        prev = std::move(cur);
    }
    out.min_overlap = std::min(out.min_overlap, 1.0);
    out.phase = wrap_phase(-std::arg(product));
    return out;
}

template <class Node>
HolonomyResult transport_stream(std::size_t K, Node&& node, const Tolerances& tol) {
    if (K < 2) throw DomainError("loop needs at least 2 nodes");
    HolonomyResult out;
    out.nodes = K;
    out.min_overlap = std::numeric_limits<double>::infinity();
    const KetVector phi0 = normalize(node(0));
    KetVector phi = phi0;
    auto step = [&](const KetVector& psi, std::size_t i, std::size_t j) {
        const complex u = inner(phi, psi);
        const double m = std::abs(u);
        if (!(m > tol.overlap)) throw_orthogonal(i, j, m);
        out.min_overlap = std::min(out.min_overlap, m);
        return psi.scaled(std::conj(u) / m);
    };
    for (std::size_t k = 1; k < K; ++k) phi = step(normalize(node(k)), k - 1, k);
    const KetVector closing = step(phi0, K - 1, 0);
    out.min_overlap = std::min(out.min_overlap, 1.0);
    out.phase = wrap_phase(std::arg(inner(phi0, closing)));
    return out;
}

HolonomyResult evaluate(std::span<const KetVector> reps, const Tolerances& tol, Estimator est) {
    auto node = [&](std::size_t k) -> const KetVector& { return reps[k]; };
    return est == Estimator::bargmann ? bargmann_stream(reps.size(), node, tol)
                                      : transport_stream(reps.size(), node, tol);
}

std::vector<KetVector> representatives(const RayLoop& loop) {
    std::vector<KetVector> reps;
    reps.reserve(loop.size());
    for (const auto& r : loop.nodes()) reps.push_back(r.representative());
    return reps;
}

}  // namespace

// ------------------------------------------------------------------ RayLoop

RayLoop::RayLoop(std::vector<Ray> nodes, const Tolerances& tol) : nodes_(std::move(nodes)) {
    if (nodes_.size() < 2) throw DomainError("RayLoop: at least 2 nodes required");
    const std::size_t d = nodes_.front().dim();
    for (const auto& r : nodes_)
        if (r.dim() != d) throw DimensionError("RayLoop: nodes live on different tori");
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
        const std::size_t j = (k + 1) % nodes_.size();
        const double m = overlap_modulus(nodes_[k], nodes_[j]);
        if (!(m > tol.overlap)) throw_orthogonal(k, j, m);
    }
}

RayLoop RayLoop::from_kets(std::span<const KetVector> kets, const Tolerances& tol) {
    std::vector<Ray> rays;
    rays.reserve(kets.size());
    for (const auto& k : kets) rays.push_back(to_ray(k));
    return RayLoop(std::move(rays), tol);
}

RayLoop RayLoop::reversed() const {
    std::vector<Ray> out;
    out.reserve(nodes_.size());
    out.push_back(nodes_.front());
    for (std::size_t k = nodes_.size() - 1; k > 0; --k) out.push_back(nodes_[k]);
    RayLoop loop = *this;
    loop.nodes_ = std::move(out);
    return loop;
}

RayLoop RayLoop::rotated(std::size_t shift) const {
    RayLoop loop = *this;
    std::rotate(loop.nodes_.begin(), loop.nodes_.begin() + static_cast<std::ptrdiff_t>(shift % size()),
                loop.nodes_.end());
    return loop;
}

bool RayLoop::is_constant(double tol) const {
    return std::all_of(nodes_.begin(), nodes_.end(), [&](const Ray& r) { return r.equals(nodes_.front(), tol); });
}

// --------------------------------------------------------------- estimators

HolonomyResult pancharatnam_phase(std::span<const KetVector> reps, const Tolerances& tol) {
    return evaluate(reps, tol, Estimator::bargmann);
}

HolonomyResult pancharatnam_phase(const RayLoop& loop, const Tolerances& tol) {
    return pancharatnam_phase(representatives(loop), tol);
}

HolonomyResult pancharatnam_phase(std::size_t nodes, const std::function<KetVector(std::size_t)>& node,
                                  const Tolerances& tol) {
    return bargmann_stream(nodes, node, tol);
}

HolonomyResult parallel_transport_phase(std::span<const KetVector> reps, const Tolerances& tol) {
    return evaluate(reps, tol, Estimator::parallel_transport);
}

HolonomyResult parallel_transport_phase(const RayLoop& loop, const Tolerances& tol) {
    return parallel_transport_phase(representatives(loop), tol);
}

// --------------------------------------------------------------- refinement

KetVector geodesic_point(const KetVector& a, const KetVector& b, double t, const Tolerances& tol) {
    const KetVector ua = normalize(a);
    const KetVector ub = normalize(b);
    const complex u = inner(ua, ub);
    const double m = std::abs(u);
    if (!(m > tol.overlap)) throw NumericalError("no unique geodesic between orthogonal rays");
    const KetVector aligned = ub.scaled(std::conj(u) / m);
    const double angle = std::acos(std::min(1.0, m));
    if (angle < 1e-12) return normalize(complex(1.0 - t) * ua + complex(t) * aligned);
    const double s = std::sin(angle);
    return normalize(complex(std::sin((1.0 - t) * angle) / s) * ua + complex(std::sin(t * angle) / s) * aligned);
}

RayLoop refine(const RayLoop& loop, int factor, const Tolerances& tol) {
    if (factor < 2) throw DomainError("refine: factor must be >= 2");
    std::vector<Ray> out;
    out.reserve(loop.size() * static_cast<std::size_t>(factor));
    const auto& nodes = loop.nodes();
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        const KetVector& a = nodes[k].representative();
        const KetVector& b = nodes[(k + 1) % nodes.size()].representative();
        out.push_back(nodes[k]);
        for (int j = 1; j < factor; ++j)
            out.push_back(to_ray(geodesic_point(a, b, static_cast<double>(j) / factor, tol)));
    }
    return RayLoop(std::move(out), tol);
}

RayLoop sample_loop(const LoopCurve& curve, std::size_t nodes, const Tolerances& tol) {
    if (nodes < 2) throw DomainError("sample_loop: at least 2 nodes required");
    std::vector<Ray> rays;
    rays.reserve(nodes);
    for (std::size_t k = 0; k < nodes; ++k)
        rays.push_back(to_ray(curve.at(static_cast<double>(k) / static_cast<double>(nodes))));
    return RayLoop(std::move(rays), tol);
}

HolonomyResult converge_levels(const std::function<HolonomyResult(int)>& level_phase, double rtol,
                               int max_doublings) {
    if (!(rtol > 0.0)) throw DomainError("rtol must be > 0");
    std::vector<RefinementLevel> history;
    HolonomyResult prev = level_phase(0);
    history.push_back({0, prev.nodes, prev.phase, 0.0});
    for (int level = 1; level <= max_doublings; ++level) {
        HolonomyResult cur = level_phase(level);
        const double delta = phase_difference(cur.phase, prev.phase);
        history.push_back({level, cur.nodes, cur.phase, delta});
        if (std::abs(delta) < rtol) {
            cur.refinement_error = std::abs(delta);
            cur.history = std::move(history);
            return cur;
        }
        prev = std::move(cur);
    }
    const double last = history.back().phase;
    const double before = history[history.size() - 2].phase;
    throw ConvergenceError("holonomy did not converge within " + std::to_string(max_doublings) +
                               " doublings (last two phases " + std::to_string(before) + ", " +
                               std::to_string(last) + ")",
                           before, last);
}

HolonomyResult holonomy_at(const RayLoop& loop, double rtol, const Tolerances& tol, Estimator est) {
    if (!(rtol > 0.0)) throw DomainError("rtol must be > 0");
    if (loop.is_constant(tol.ray_equality)) {
        HolonomyResult r = est == Estimator::bargmann ? pancharatnam_phase(loop, tol) : parallel_transport_phase(loop, tol);
        r.history.push_back({0, r.nodes, r.phase, 0.0});
        return r;
    }
    RayLoop current = loop;
    auto level_phase = [&](int level) {
        if (level > 0) current = refine(current, 2, tol);
        return evaluate(representatives(current), tol, est);
    };
    return converge_levels(level_phase, rtol, tol.max_doublings);
}

HolonomyResult holonomy_at(const LoopCurve& curve, double rtol, const Tolerances& tol, Estimator est) {
    if (!(rtol > 0.0)) throw DomainError("rtol must be > 0");
    if (curve.initial_nodes < 2) throw DomainError("curve needs at least 2 initial nodes");
    auto level_phase = [&](int level) {
        const std::size_t K = curve.initial_nodes << level;
        auto node = [&](std::size_t k) { return curve.at(static_cast<double>(k) / static_cast<double>(K)); };
        return est == Estimator::bargmann ? bargmann_stream(K, node, tol) : transport_stream(K, node, tol);
    };
    return converge_levels(level_phase, rtol, tol.max_doublings);
}

LoopCurve two_mode_circle(double theta, const ModeIndex& a, const ModeIndex& b, std::size_t initial_nodes) {
    if (a.dim() != b.dim()) throw DimensionError("two_mode_circle: modes live on different tori");
    if (a == b) throw DomainError("two_mode_circle: modes must differ");
    const double c = std::cos(theta / 2.0);
    const double s = std::sin(theta / 2.0);
    LoopCurve curve;
    curve.initial_nodes = initial_nodes;
    curve.at = [=](double u) {
        return KetVector(a.dim(), {{a, complex(c, 0.0)}, {b, std::polar(s, two_pi * u)}});
    };
    return curve;
}

// ------------------------------------------------------------ group sampling

std::vector<RayLoop> sample_holonomy_loops(const Ray& basepoint, int n_loops, std::uint64_t seed,
                                           std::span<const ModeIndex> modes, const Tolerances& tol) {
    if (n_loops < 1) throw DomainError("holonomy_group_sample: n_loops must be >= 1");
    std::vector<ModeIndex> span_modes;
    if (modes.empty()) {
        for (const auto& t : basepoint.representative().terms()) span_modes.push_back(t.first);
    } else {
        span_modes.assign(modes.begin(), modes.end());
        std::sort(span_modes.begin(), span_modes.end());
        span_modes.erase(std::unique(span_modes.begin(), span_modes.end()), span_modes.end());
        for (const auto& t : basepoint.representative().terms())
            if (!std::binary_search(span_modes.begin(), span_modes.end(), t.first))
                throw DomainError("holonomy_group_sample: basepoint mode " + to_string(t.first) +
                                  " outside the sampled subspace");
    }
    for (const auto& n : span_modes)
        if (n.dim() != basepoint.dim()) throw DimensionError("holonomy_group_sample: mode dimension mismatch");
    if (span_modes.size() < 2) throw DomainError("holonomy trivial: one-dimensional ray space is a point");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> vertex_count(2, 4);
    std::vector<RayLoop> loops;
    loops.reserve(static_cast<std::size_t>(n_loops));
    loops.emplace_back(std::vector<Ray>{basepoint, basepoint}, tol);
    while (loops.size() < static_cast<std::size_t>(n_loops)) {
        std::vector<Ray> nodes{basepoint};
        const int extra = vertex_count(rng);
        for (int v = 0; v < extra; ++v) nodes.push_back(to_ray(haar_random_ket(span_modes, rng)));
        try {
            loops.emplace_back(std::move(nodes), tol);
        } catch (const NumericalError&) {
            // Orthogonal draw, measure zero in practice; redraw.
        }
    }
    return loops;
}

std::vector<double> holonomy_group_sample(const Ray& basepoint, int n_loops, std::uint64_t seed,
                                          std::span<const ModeIndex> modes, const Tolerances& tol) {
    std::vector<double> phases;
    for (const auto& loop : sample_holonomy_loops(basepoint, n_loops, seed, modes, tol))
        phases.push_back(pancharatnam_phase(loop, tol).phase);
    return phases;
}

}  // namespace koopgeo
