#include "koopgeo/moving_frame.hpp"

#include "koopgeo/errors.hpp"

#include <cmath>
#include <string>

namespace koopgeo {

// -------------------------------------------------------------------- Frame

Frame::Frame(std::vector<Ray> members, const Tolerances& tol) : members_(std::move(members)) {
    if (members_.empty()) throw DomainError("Frame: at least one member required");
    for (std::size_t i = 0; i < members_.size(); ++i) {
        if (members_[i].dim() != members_.front().dim()) throw DimensionError("Frame: members live on different tori");
        for (std::size_t j = i + 1; j < members_.size(); ++j) {
            const double m = overlap_modulus(members_[i], members_[j]);
            if (m > tol.frame_orthogonality)
                throw DomainError("Frame: members " + std::to_string(i) + " and " + std::to_string(j) +
                                  " are not orthogonal (|<a|b>| = " + std::to_string(m) + ")");
        }
    }
}

Frame Frame::basis(const std::vector<ModeIndex>& modes) {
    std::vector<Ray> rays;
    rays.reserve(modes.size());
    for (const auto& n : modes) rays.push_back(to_ray(KetVector::basis(n)));
    return Frame(std::move(rays));
}

const Ray& Frame::member(std::size_t i) const {
    if (i >= members_.size())
        throw DomainError("Frame: member index " + std::to_string(i) + " out of range (size " +
                          std::to_string(members_.size()) + ")");
    return members_[i];
}

// ----------------------------------------------------------- FrameExcursion

FrameExcursion::FrameExcursion(RayLoop loop) : path_(loop), basepoint_(loop.basepoint()) {}

FrameExcursion::FrameExcursion(LoopCurve curve, const Tolerances&)
    : path_(curve), basepoint_(to_ray(curve.at(0.0))) {}

FrameExcursion FrameExcursion::stationary(const Ray& member) {
    return FrameExcursion(RayLoop({member, member}));
}

HolonomyResult FrameExcursion::holonomy(double rtol, const Tolerances& tol) const {
    return std::visit([&](const auto& p) { return holonomy_at(p, rtol, tol); }, path_);
}

FrameExcursion phase_injection_excursion(const Ray& member, double theta, std::optional<ModeIndex> aux) {
    const KetVector& psi = member.representative();
    if (!aux) {
        std::vector<std::int64_t> c(psi.terms().back().first.components().begin(),
                                    psi.terms().back().first.components().end());
        c[0] += 1;
        aux = ModeIndex(std::move(c));
    }
    const KetVector e = KetVector::basis(*aux);
    const KetVector chi_raw = e - inner(psi, e) * psi;
    if (chi_raw.norm() < 1e-6) throw DomainError("phase_injection_excursion: auxiliary mode parallel to member");
    const KetVector chi = normalize(chi_raw);

    // Nodes (psi + e^{i phi_j} chi)/sqrt2; each hop contributes -dphi/2 exactly.
    const double sweep = -2.0 * wrap_phase(theta);
    const int hops = std::max(1, static_cast<int>(std::ceil(std::abs(sweep) / (pi / 2.0))));
    std::vector<Ray> nodes{member};
    for (int j = 0; j <= hops; ++j) {
        const double phi = sweep * j / hops;
        nodes.push_back(to_ray(psi + std::polar(1.0, phi) * chi));
    }
    return FrameExcursion(RayLoop(std::move(nodes)));
}

// ------------------------------------------------------------- net phases

double extract_geometric_phase(const KetVector& observed, const KoopmanOperator& op, const KetVector& n_ket,
                               const Tolerances& tol) {
    const KetVector predicted = op.apply(n_ket);
    const complex z = inner(predicted, observed);
    const double scale = predicted.norm() * observed.norm();
    if (!(scale > 0.0) || !(std::abs(z) / scale > tol.overlap))
        throw NumericalError("observed state inconsistent with dynamics");
    return wrap_phase(std::arg(z));
}

NetPhaseRecord excursion_net_state(const KoopmanOperator& op, const Frame& frame, const FrameExcursion& exc,
                                   std::size_t member, double rtol, const Tolerances& tol) {
    const Ray& ray = frame.member(member);
    if (!ray.equals(exc.basepoint(), tol.ray_equality))
        throw DomainError("excursion basepoint does not match frame member " + std::to_string(member));
    HolonomyResult hol = exc.holonomy(rtol, tol);
    const KetVector& n_ket = ray.representative();
    KetVector dynamical = op.apply(n_ket);
    KetVector total = std::polar(1.0, hol.phase) * dynamical;
    if (std::abs(phase_difference(extract_geometric_phase(total, op, n_ket, tol), hol.phase)) > 1e-10)
        throw NumericalError("net phase decomposition failed to round-trip");
    return NetPhaseRecord{std::move(total), hol.phase, std::move(dynamical), std::move(hol)};
}

std::vector<NetPhaseRecord> frame_net_states(const KoopmanOperator& op, const Frame& frame,
                                             const FrameExcursion& exc, std::size_t member, double rtol,
                                             const Tolerances& tol) {
    frame.member(member);
    std::vector<NetPhaseRecord> out;
    out.reserve(frame.size());
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (i == member)
            out.push_back(excursion_net_state(op, frame, exc, i, rtol, tol));
        else
            out.push_back(excursion_net_state(op, frame, FrameExcursion::stationary(frame.member(i)), i, rtol, tol));
    }
    return out;
}

complex heisenberg_state_expectation(const KetVector& v) { return v.amplitude(ModeIndex::zero(v.dim())); }

}  // namespace koopgeo
