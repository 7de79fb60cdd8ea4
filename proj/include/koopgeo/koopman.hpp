#pragma once

// Koopman unitaries (U_T f)(phi) = f(T phi) on L²(T^d, Haar) for
//   - torus translations  T_t(phi) = phi + omega t   : |n> -> exp(i n.omega t) |n>
//   - toral automorphisms T(phi)   = C phi (mod 1)    : |n> -> |C n>
//
// Mode convention for automorphisms: the action relocates amplitude from n
// to C n. Pulling exp(i n.phi) back through phi -> C phi literally gives
// mode C^T n; the two coincide for symmetric C such as the Arnold cat
// matrix. Pass the transpose explicitly to get the pull-back convention.

#include "koopgeo/mode_space.hpp"

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

namespace koopgeo {

// Components past this bound are rejected as out of range.
inline constexpr std::int64_t max_mode_component = std::int64_t{1} << 62;

class TorusTranslation {
public:
    TorusTranslation(std::vector<double> omega, double t);

    std::size_t dim() const noexcept { return omega_.size(); }
    const std::vector<double>& omega() const noexcept { return omega_; }
    double time() const noexcept { return t_; }

    // n.omega t, not reduced.
    double phase_of(const ModeIndex& n) const;

    bool operator==(const TorusTranslation&) const = default;

private:
    std::vector<double> omega_;
    double t_;
};

using IntMatrix = std::vector<std::vector<std::int64_t>>;

class ToralAutomorphism {
public:
    // Rejects non-square matrices and |det| != 1.
    explicit ToralAutomorphism(IntMatrix matrix);

    static ToralAutomorphism arnold_cat();
    static ToralAutomorphism identity(std::size_t dim);

    std::size_t dim() const noexcept { return matrix_.size(); }
    const IntMatrix& matrix() const noexcept { return matrix_; }
    std::int64_t determinant() const noexcept { return det_; }

    ToralAutomorphism inverse() const;
    ToralAutomorphism transpose() const;

    // C n; throws RangeError when a component leaves [-2^62, 2^62].
    ModeIndex act(const ModeIndex& n) const;

    bool operator==(const ToralAutomorphism& o) const { return matrix_ == o.matrix_; }

private:
    IntMatrix matrix_;
    std::int64_t det_;
};

// Exact integer determinant (fraction-free elimination).
std::int64_t integer_determinant(const IntMatrix& m);

class KoopmanOperator;

struct ComposedOperator {
    // Applied right to left: factors.back() acts first.
    std::vector<KoopmanOperator> factors;
    bool operator==(const ComposedOperator&) const;
};

class KoopmanOperator {
public:
    using Kind = std::variant<TorusTranslation, ToralAutomorphism, ComposedOperator>;

    KoopmanOperator(TorusTranslation t) : kind_(std::move(t)) {}
    KoopmanOperator(ToralAutomorphism a) : kind_(std::move(a)) {}
    // Throws on an empty factor list or mixed dimensions.
    static KoopmanOperator composed(std::vector<KoopmanOperator> factors);

    const Kind& kind() const noexcept { return kind_; }
    std::size_t dim() const;

    KetVector apply(const KetVector& v) const;
    KoopmanOperator inverse() const;

    bool operator==(const KoopmanOperator& o) const { return kind_ == o.kind_; }

private:
    explicit KoopmanOperator(ComposedOperator c) : kind_(std::move(c)) {}
    Kind kind_;
};

inline KetVector apply(const KoopmanOperator& op, const KetVector& v) { return op.apply(v); }

// Dynamical phase n.omega t of mode n, reduced to (-pi, pi].
double eigenphase(const TorusTranslation& op, const ModeIndex& n);

struct Orbit {
    std::vector<ModeIndex> modes;  // n, C n, ..., up to the first repeat or C^{k_max} n
    bool cycle = false;
    std::size_t cycle_length = 0;  // period when `cycle` is set
};

Orbit orbit(const ToralAutomorphism& op, const ModeIndex& n, std::size_t k_max);

// max over sample pairs of |<Ua|Ub> - <a|b>|.
double unitarity_defect(const KoopmanOperator& op, std::span<const KetVector> sample);

// Angle-variable flow of two uncoupled oscillators, frequencies (omega1, omega2).
KoopmanOperator uncoupled_oscillators(double omega1, double omega2, double t);

// The cat map C = ((1,1),(1,2)).
KoopmanOperator arnold_cat_operator();

}  // namespace koopgeo
