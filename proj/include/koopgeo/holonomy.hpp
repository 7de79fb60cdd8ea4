#pragma once

// Holonomy of the Stiefel connection on the U(1) bundle S(H) -> PH, computed
// for discrete loops of rays.
//
// The discrete connection is the Bargmann product: for nodes psi_0..psi_{K-1}
// (closing back to psi_0) the holonomy angle is
//
//     theta = -arg prod_k <psi_k | psi_{k+1 mod K}>
//
// which is independent of the unit representative chosen for each node. A
// second route builds the discrete horizontal lift explicitly and reads the
// phase mismatch at the basepoint; the two agree to rounding.

#include "koopgeo/mode_space.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace koopgeo {

class RayLoop {
public:
    // Node K-1 connects back to node 0. Throws NumericalError when any
    // consecutive pair (closing pair included) has overlap <= tol.overlap.
    explicit RayLoop(std::vector<Ray> nodes, const Tolerances& tol = {});

    static RayLoop from_kets(std::span<const KetVector> kets, const Tolerances& tol = {});

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t dim() const noexcept { return nodes_.front().dim(); }
    const std::vector<Ray>& nodes() const noexcept { return nodes_; }
    const Ray& basepoint() const noexcept { return nodes_.front(); }

    // Same basepoint, opposite orientation.
    RayLoop reversed() const;
    // Node `shift` becomes the new basepoint.
    RayLoop rotated(std::size_t shift) const;

    // Every node is the basepoint ray.
    bool is_constant(double tol = Tolerances{}.ray_equality) const;

private:
    std::vector<Ray> nodes_;
};

struct RefinementLevel {
    int level;
    std::size_t nodes;
    double phase;
    double delta;  // phase_difference(phase, previous level's phase); 0 at level 0
};

struct HolonomyResult {
    double phase = 0.0;            // in (-pi, pi]
    double min_overlap = 1.0;      // smallest neighbour overlap at the final level
    double refinement_error = 0.0; // |delta| of the final level
    std::size_t nodes = 0;
    std::vector<RefinementLevel> history;
};

enum class Estimator { bargmann, parallel_transport };

// Smooth closed curve s in [0,1) -> ket, with at(0) and the limit s -> 1
// representing the same ray. Refinement re-samples the curve.
struct LoopCurve {
    std::function<KetVector(double)> at;
    std::size_t initial_nodes = 32;
};

// Bargmann-product estimator. `reps` are arbitrary unit representatives.
HolonomyResult pancharatnam_phase(std::span<const KetVector> reps, const Tolerances& tol = {});
HolonomyResult pancharatnam_phase(const RayLoop& loop, const Tolerances& tol = {});
// Same, over `nodes` kets generated on demand by node(k).
HolonomyResult pancharatnam_phase(std::size_t nodes, const std::function<KetVector(std::size_t)>& node,
                                  const Tolerances& tol = {});

// Discrete horizontal lift: phi_0 = psi_0, each phi_{k+1} rephased so that
// <phi_k|phi_{k+1}> > 0, and the closing step transported onto node 0 gives
// phi_K = e^{i theta} phi_0.
HolonomyResult parallel_transport_phase(std::span<const KetVector> reps, const Tolerances& tol = {});
HolonomyResult parallel_transport_phase(const RayLoop& loop, const Tolerances& tol = {});

// Unit vector on the Fubini-Study geodesic from a to b, fraction t in [0,1].
KetVector geodesic_point(const KetVector& a, const KetVector& b, double t, const Tolerances& tol = {});

// Inserts factor-1 geodesic points per segment; original nodes keep their
// positions at multiples of factor.
RayLoop refine(const RayLoop& loop, int factor, const Tolerances& tol = {});

RayLoop sample_loop(const LoopCurve& curve, std::size_t nodes, const Tolerances& tol = {});

// Doubling refinement until |phase_L - phase_{L-1}| < rtol, capped at
// tol.max_doublings levels. Throws ConvergenceError at the cap.
// A RayLoop is refined along geodesics; a curve is re-sampled.
HolonomyResult holonomy_at(const RayLoop& loop, double rtol, const Tolerances& tol = {},
                           Estimator est = Estimator::bargmann);
HolonomyResult holonomy_at(const LoopCurve& curve, double rtol, const Tolerances& tol = {},
                           Estimator est = Estimator::bargmann);

// Evaluate a loop level by level: `level_phase(level)` returns the estimator
// result at that resolution. Shared by the RayLoop, curve and pull-back
// refinement schemes.
HolonomyResult converge_levels(const std::function<HolonomyResult(int)>& level_phase, double rtol,
                               int max_doublings);

// cos(theta/2)|a> + sin(theta/2) e^{2 pi i s}|b>; holonomy -pi(1 - cos theta).
LoopCurve two_mode_circle(double theta, const ModeIndex& a, const ModeIndex& b, std::size_t initial_nodes = 32);

// Random geodesic polygons through `basepoint`, vertices Haar-distributed on
// the unit sphere of span(modes). The first loop is always the trivial one.
// `modes` defaults to the basepoint's support and must contain it.
std::vector<RayLoop> sample_holonomy_loops(const Ray& basepoint, int n_loops, std::uint64_t seed,
                                           std::span<const ModeIndex> modes = {}, const Tolerances& tol = {});

std::vector<double> holonomy_group_sample(const Ray& basepoint, int n_loops, std::uint64_t seed,
                                          std::span<const ModeIndex> modes = {}, const Tolerances& tol = {});

}  // namespace koopgeo
