#pragma once

// A frame of orthogonal projectors {|n><n|} used to read observables. When
// one member is carried around a loop in PH during the unit time interval
// while the dynamics acts, the member observed at t = 1 is
//
//     |n(1)> = e^{i theta} U |n>,
//
// theta being the holonomy of the loop. The phase is applied after the
// dynamics for non-eigen members too.

#include "koopgeo/holonomy.hpp"
#include "koopgeo/koopman.hpp"
#include "koopgeo/mode_space.hpp"

#include <optional>
#include <variant>
#include <vector>

namespace koopgeo {

class Frame {
public:
    // Members must be pairwise orthogonal within tol.frame_orthogonality.
    explicit Frame(std::vector<Ray> members, const Tolerances& tol = {});

    // {|n>} for the given modes.
    static Frame basis(const std::vector<ModeIndex>& modes);

    std::size_t size() const noexcept { return members_.size(); }
    const Ray& member(std::size_t i) const;
    const std::vector<Ray>& members() const noexcept { return members_; }

private:
    std::vector<Ray> members_;
};

// Loop followed by one frame member over [0, 1]. Either a discrete geodesic
// polygon or a smooth curve (re-sampled during refinement).
class FrameExcursion {
public:
    explicit FrameExcursion(RayLoop loop);
    FrameExcursion(LoopCurve curve, const Tolerances& tol = {});

    // The unmoved frame: a constant loop at `member`.
    static FrameExcursion stationary(const Ray& member);

    const Ray& basepoint() const noexcept { return basepoint_; }
    HolonomyResult holonomy(double rtol, const Tolerances& tol = {}) const;

private:
    std::variant<RayLoop, LoopCurve> path_;
    Ray basepoint_;
};

// Geodesic polygon through `member` whose holonomy is exactly `theta`.
// The loop moves in the plane spanned by the member and |aux>; `aux`
// defaults to a mode just outside the member's support.
FrameExcursion phase_injection_excursion(const Ray& member, double theta,
                                         std::optional<ModeIndex> aux = std::nullopt);

struct NetPhaseRecord {
    KetVector total;          // observed member at t = 1
    double geometric_phase;   // holonomy of the excursion
    KetVector dynamical_part; // U|n>, the unmoved-frame prediction
    HolonomyResult holonomy;
};

inline constexpr double default_excursion_rtol = 1e-10;

NetPhaseRecord excursion_net_state(const KoopmanOperator& op, const Frame& frame, const FrameExcursion& exc,
                                   std::size_t member, double rtol = default_excursion_rtol,
                                   const Tolerances& tol = {});

// Records for every member; only `member` follows the excursion.
std::vector<NetPhaseRecord> frame_net_states(const KoopmanOperator& op, const Frame& frame,
                                             const FrameExcursion& exc, std::size_t member,
                                             double rtol = default_excursion_rtol, const Tolerances& tol = {});

// arg <U n | observed>, in (-pi, pi].
double extract_geometric_phase(const KetVector& observed, const KoopmanOperator& op, const KetVector& n_ket,
                               const Tolerances& tol = {});

// Haar integral of the observable, i.e. its zero-mode amplitude.
complex heisenberg_state_expectation(const KetVector& v);

}  // namespace koopgeo
