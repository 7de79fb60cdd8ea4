#pragma once

// Hannay phase as the holonomy of the pull-back of the Stiefel connection
// along an eigenfamily map f_n : M -> PH, R -> |n,R><n,R|.
//
// The pulled-back connection lives over the parameter manifold M, so
// refinement subdivides the parameter loop and re-queries the section.
// Geodesic refinement in PH is available for comparison only; at finite
// resolution it measures a different polygon.

#include "koopgeo/holonomy.hpp"
#include "koopgeo/koopman.hpp"
#include "koopgeo/mode_space.hpp"

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace koopgeo {

struct ParameterPoint {
    std::vector<double> coords;
    bool operator==(const ParameterPoint&) const = default;
};

// Closed loop in a chart of M. `closure` is the endpoint of the last segment;
// it must represent the same point of M as samples()[0] but may differ in
// coordinates (a periodic chart: beta = 2 pi closes beta = 0).
class ParamLoop {
public:
    explicit ParamLoop(std::vector<ParameterPoint> samples, std::optional<ParameterPoint> closure = std::nullopt);

    // beta_k = 2 pi k / K on the unit circle chart, closing at 2 pi.
    static ParamLoop circle(std::size_t samples);
    // curve(k / K) for k = 0..K-1, closing at curve(1).
    static ParamLoop from_curve(const std::function<ParameterPoint(double)>& curve, std::size_t samples);

    std::size_t size() const noexcept { return samples_.size(); }
    std::size_t dim() const noexcept { return samples_.front().coords.size(); }
    const std::vector<ParameterPoint>& samples() const noexcept { return samples_; }
    const ParameterPoint& closure() const noexcept { return closure_; }
    const ParameterPoint& basepoint() const noexcept { return samples_.front(); }

    // Inserts factor-1 chart-linear points per segment.
    ParamLoop subdivided(int factor) const;
    ParamLoop reversed() const;
    // Sample `shift` becomes the basepoint; assumes the chart offset
    // closure - basepoint is a period of the section.
    ParamLoop rotated(std::size_t shift) const;

private:
    std::vector<ParameterPoint> samples_;
    ParameterPoint closure_;
};

struct EigenFamily {
    ModeIndex mode;
    // Normalized ket |n,R> for every queried R. Must be pure.
    std::function<KetVector(const ParameterPoint&)> section;
    std::string name;
};

struct HannayRecord {
    double phase = 0.0;
    ModeIndex mode;
    std::size_t loop_resolution = 0;
    double refinement_error = 0.0;
    std::vector<RefinementLevel> history;
};

enum class PullbackRefinement { parameter_space, ray_geodesic };

RayLoop pullback_ray_loop(const EigenFamily& family, const ParamLoop& loop, const Tolerances& tol = {});

HannayRecord hannay_phase(const EigenFamily& family, const ParamLoop& loop, double rtol,
                          PullbackRefinement mode = PullbackRefinement::parameter_space, const Tolerances& tol = {});

// max_R ‖U(R)psi(R) - <psi(R)|U(R)psi(R)> psi(R)‖ over the loop samples.
double adiabatic_eigen_check(const EigenFamily& family,
                             const std::function<KoopmanOperator(const ParameterPoint&)>& op_at,
                             const ParamLoop& loop);

// ---------------------------------------------------------------- families

// section(R) = v / ‖v‖ everywhere.
EigenFamily constant_family(const KetVector& v);

// section(R) = e^{i chi(R)} |n>.
EigenFamily pure_phase_family(const ModeIndex& n, std::function<double(const ParameterPoint&)> chi);

// Over the circle chart beta: c_k(beta) ∝ (r e^{i beta})^k / k!, k = 0..k_cut,
// on one-dimensional modes. Rejects k_cut whose neglected tail exceeds 1e-16.
EigenFamily coherent_ring_family(double r, int k_cut);

// Smallest k_cut with sum_{k > k_cut} r^{2k} / (k!)^2 < 1e-16.
int required_k_cut(double r);

// Samples (beta_i, ket_i) on a periodic one-dimensional chart, beta_i strictly
// increasing within one period. Between samples the amplitudes are
// interpolated linearly after phase-aligning the right sample to the left
// one, then normalized.
struct TabulatedFamily {
    double period = two_pi;
    std::vector<std::pair<double, KetVector>> samples;
};

EigenFamily tabulated_family(TabulatedFamily table, const ModeIndex& label);

// Rows "beta n_1 .. n_d re im" (whitespace or comma separated, '#' comments);
// consecutive rows with equal beta form one sample ket.
TabulatedFamily read_tabulated_family(std::istream& in, std::size_t mode_dim, double period = two_pi);
void write_tabulated_family(std::ostream& out, const TabulatedFamily& table);

}  // namespace koopgeo
