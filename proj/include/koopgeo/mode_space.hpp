#pragma once

// Truncated Fourier Hilbert space of the d-torus.
//
// A KetVector is a finitely supported set of Fourier coefficients c_n of an
// observable f(phi) = sum_n c_n exp(i n.phi), stored sparsely over the full
// lattice Z^d. No box truncation is applied to storage; only enumeration
// helpers such as box_modes() use a cut-off.

#include <compare>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace koopgeo {

using complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Numerical thresholds shared across modules. Every operation that consults a
// threshold takes one of these; the defaults are the library defaults.
struct Tolerances {
    double dropout = 1e-15;             // amplitudes with modulus <= this are not stored
    double normalization = 1e-12;       // |‖v‖² - 1| bound for normalized vectors
    double ray_equality = 1e-12;        // norm distance between equal ray representatives
    double overlap = 1e-8;              // neighbour overlap below this is an orthogonal jump
    double frame_orthogonality = 1e-10; // max |<a|b>| between frame members
    int max_doublings = 16;             // refinement level cap

    bool operator==(const Tolerances&) const = default;
};

// Reduce an angle to (-pi, pi].
double wrap_phase(double angle);

// Shortest signed difference a - b on the circle, in (-pi, pi].
double phase_difference(double a, double b);

class ModeIndex {
public:
    ModeIndex() = default;
    ModeIndex(std::initializer_list<std::int64_t> components);
    explicit ModeIndex(std::vector<std::int64_t> components);

    static ModeIndex zero(std::size_t dim);

    std::size_t dim() const noexcept { return components_.size(); }
    std::int64_t operator[](std::size_t i) const { return components_[i]; }
    std::span<const std::int64_t> components() const noexcept { return components_; }
    bool is_zero() const noexcept;

    ModeIndex operator+(const ModeIndex& other) const;
    ModeIndex operator-() const;

    // Lexicographic order on components.
    auto operator<=>(const ModeIndex&) const = default;
    bool operator==(const ModeIndex&) const = default;

private:
    std::vector<std::int64_t> components_;
};

std::ostream& operator<<(std::ostream& os, const ModeIndex& n);
std::string to_string(const ModeIndex& n);

class KetVector {
public:
    using Term = std::pair<ModeIndex, complex>;

    // The zero observable on T^dim.
    explicit KetVector(std::size_t dim);

    // Duplicate modes are summed; terms at or below `dropout` are discarded.
    KetVector(std::size_t dim, std::vector<Term> terms, double dropout = Tolerances{}.dropout);

    static KetVector basis(const ModeIndex& n);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t support_size() const noexcept { return terms_.size(); }
    bool is_zero() const noexcept { return terms_.empty(); }

    // Terms sorted by ModeIndex.
    std::span<const Term> terms() const noexcept { return terms_; }
    complex amplitude(const ModeIndex& n) const;

    double squared_norm() const noexcept;
    double norm() const noexcept;
    bool is_normalized(double tol = Tolerances{}.normalization) const noexcept;

    KetVector scaled(complex factor) const;

    friend KetVector operator*(complex factor, const KetVector& v) { return v.scaled(factor); }
    friend KetVector operator+(const KetVector& a, const KetVector& b);
    friend KetVector operator-(const KetVector& a, const KetVector& b);

    // Exact equality of dimension and stored terms.
    bool operator==(const KetVector&) const = default;

private:
    std::size_t dim_;
    std::vector<Term> terms_;
};

// <a|b> = sum_n conj(a_n) b_n.
complex inner(const KetVector& a, const KetVector& b);

// ‖a - b‖.
double distance(const KetVector& a, const KetVector& b);

KetVector normalize(const KetVector& a);

// A point of projective Hilbert space, held as the unit representative whose
// amplitude on the lexicographically smallest supported mode is real positive.
class Ray {
public:
    const KetVector& representative() const noexcept { return rep_; }
    std::size_t dim() const noexcept { return rep_.dim(); }

    bool equals(const Ray& other, double tol = Tolerances{}.ray_equality) const;
    friend bool operator==(const Ray& a, const Ray& b) { return a.equals(b); }

private:
    explicit Ray(KetVector rep) : rep_(std::move(rep)) {}
    friend Ray to_ray(const KetVector& a);

    KetVector rep_;
};

Ray to_ray(const KetVector& a);

// |<psi1|psi2>| for unit representatives.
double overlap_modulus(const Ray& a, const Ray& b);

// arccos |<psi1|psi2>|, in [0, pi/2].
double fubini_study_distance(const Ray& a, const Ray& b);

// All modes with |n_i| <= n_max, in lexicographic order.
std::vector<ModeIndex> box_modes(std::size_t dim, std::int64_t n_max);

// Unit vector drawn uniformly from the sphere of span{modes}.
KetVector haar_random_ket(std::span<const ModeIndex> modes, std::mt19937_64& rng);

}  // namespace koopgeo
