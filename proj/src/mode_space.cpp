#include "koopgeo/mode_space.hpp"

#include "koopgeo/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <sstream>

namespace koopgeo {

namespace {

// Correctly rounded floating-point sum (Shewchuk's non-overlapping partials).
// The result depends only on the multiset of addends, not their order, so
// inner products are invariant under relabelling of modes.
class ExactSum {
public:
    void add(double x) {
        std::size_t used = 0;
        for (std::size_t i = 0; i < count_; ++i) {
            double y = partials_[i];
            if (std::abs(x) < std::abs(y)) std::swap(x, y);
            const double hi = x + y;
            const double lo = y - (hi - x);
            if (lo != 0.0) partials_[used++] = lo;
            x = hi;
        }
        partials_[used++] = x;
        count_ = used;
    }

    double value() const {
        if (count_ == 0) return 0.0;
        std::size_t n = count_;
        double hi = partials_[--n];
        double lo = 0.0;
        while (n > 0) {
            const double x = hi;
            const double y = partials_[--n];
            hi = x + y;
            lo = y - (hi - x);
            if (lo != 0.0) break;
        }
        // Half-way case: round according to the next partial.
        if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
            const double y = lo * 2.0;
            const double x = hi + y;
            if (y == x - hi) hi = x;
        }
        return hi;
    }

private:
    // Non-overlapping partials of doubles never exceed ~40.
    std::array<double, 64> partials_{};
    std::size_t count_ = 0;
};

}  // namespace

double wrap_phase(double angle) {
    double r = std::remainder(angle, two_pi);
    if (r <= -pi) r += two_pi;
    if (r == 0.0) r = 0.0;  // no negative zero
    return r;
}

double phase_difference(double a, double b) { return wrap_phase(a - b); }

// ----------------------------------------------------------------- ModeIndex

ModeIndex::ModeIndex(std::initializer_list<std::int64_t> components) : components_(components) {
    if (components_.empty()) throw DimensionError("ModeIndex: torus dimension must be >= 1");
}

ModeIndex::ModeIndex(std::vector<std::int64_t> components) : components_(std::move(components)) {
    if (components_.empty()) throw DimensionError("ModeIndex: torus dimension must be >= 1");
}

ModeIndex ModeIndex::zero(std::size_t dim) {
    return ModeIndex(std::vector<std::int64_t>(dim, 0));
}

bool ModeIndex::is_zero() const noexcept {
    return std::all_of(components_.begin(), components_.end(), [](std::int64_t c) { return c == 0; });
}

ModeIndex ModeIndex::operator+(const ModeIndex& other) const {
    if (dim() != other.dim()) throw DimensionError("ModeIndex: incompatible torus dimensions");
    std::vector<std::int64_t> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        if (__builtin_add_overflow(components_[i], other.components_[i], &out[i]))
            throw RangeError("ModeIndex: component overflow");
    }
    return ModeIndex(std::move(out));
}

ModeIndex ModeIndex::operator-() const {
    std::vector<std::int64_t> out(components_);
    for (auto& c : out) c = -c;
    return ModeIndex(std::move(out));
}

std::ostream& operator<<(std::ostream& os, const ModeIndex& n) {
    os << '(';
    for (std::size_t i = 0; i < n.dim(); ++i) {
        if (i) os << ',';
        os << n[i];
    }
    return os << ')';
}

std::string to_string(const ModeIndex& n) {
    std::ostringstream ss;
    ss << n;
    return ss.str();
}

// ----------------------------------------------------------------- KetVector

KetVector::KetVector(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw DimensionError("KetVector: torus dimension must be >= 1");
}

KetVector::KetVector(std::size_t dim, std::vector<Term> terms, double dropout) : dim_(dim) {
    if (dim == 0) throw DimensionError("KetVector: torus dimension must be >= 1");
    for (const auto& [n, c] : terms) {
        if (n.dim() != dim) throw DimensionError("KetVector: mode " + to_string(n) + " does not live on T^" + std::to_string(dim));
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw DomainError("KetVector: non-finite amplitude on mode " + to_string(n));
    }
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.first < b.first; });
    terms_.reserve(terms.size());
    for (auto& t : terms) {
        if (!terms_.empty() && terms_.back().first == t.first)
            terms_.back().second += t.second;
        else
            terms_.push_back(std::move(t));
    }
    std::erase_if(terms_, [dropout](const Term& t) { return std::abs(t.second) <= dropout; });
}

KetVector KetVector::basis(const ModeIndex& n) {
    return KetVector(n.dim(), {{n, complex(1.0, 0.0)}});
}

complex KetVector::amplitude(const ModeIndex& n) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), n,
                               [](const Term& t, const ModeIndex& m) { return t.first < m; });
    if (it != terms_.end() && it->first == n) return it->second;
    return {0.0, 0.0};
}

double KetVector::squared_norm() const noexcept {
    ExactSum s;
    for (const auto& t : terms_) s.add(std::norm(t.second));
    return s.value();
}

double KetVector::norm() const noexcept { return std::sqrt(squared_norm()); }

bool KetVector::is_normalized(double tol) const noexcept {
    return std::abs(squared_norm() - 1.0) <= tol;
}

KetVector KetVector::scaled(complex factor) const {
    std::vector<Term> out(terms_);
    for (auto& t : out) t.second *= factor;
    return KetVector(dim_, std::move(out));
}

namespace {

KetVector combine(const KetVector& a, const KetVector& b, double sign) {
    if (a.dim() != b.dim()) throw DimensionError("KetVector: incompatible torus dimensions");
    std::vector<KetVector::Term> out(a.terms().begin(), a.terms().end());
    out.reserve(a.support_size() + b.support_size());
    for (const auto& [n, c] : b.terms()) out.emplace_back(n, sign * c);
    return KetVector(a.dim(), std::move(out));
}

}  // namespace

KetVector operator+(const KetVector& a, const KetVector& b) { return combine(a, b, 1.0); }
KetVector operator-(const KetVector& a, const KetVector& b) { return combine(a, b, -1.0); }

complex inner(const KetVector& a, const KetVector& b) {
    if (a.dim() != b.dim())
        throw DimensionError("inner: incompatible torus dimensions T^" + std::to_string(a.dim()) +
                             " and T^" + std::to_string(b.dim()));
    // Merge over the two sorted supports.
    ExactSum re;
    ExactSum im;
    auto ia = a.terms().begin();
    auto ib = b.terms().begin();
    while (ia != a.terms().end() && ib != b.terms().end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            const complex p = std::conj(ia->second) * ib->second;
            re.add(p.real());
            im.add(p.imag());
            ++ia;
            ++ib;
        }
    }
    return {re.value(), im.value()};
}

double distance(const KetVector& a, const KetVector& b) {
    if (a.dim() != b.dim()) throw DimensionError("distance: incompatible torus dimensions");
    // Computed on raw terms, so differences below the dropout threshold still count.
    double s = 0.0;
    auto ia = a.terms().begin();
    auto ib = b.terms().begin();
    while (ia != a.terms().end() || ib != b.terms().end()) {
        if (ib == b.terms().end() || (ia != a.terms().end() && ia->first < ib->first)) {
            s += std::norm(ia->second);
            ++ia;
        } else if (ia == a.terms().end() || ib->first < ia->first) {
            s += std::norm(ib->second);
            ++ib;
        } else {
            s += std::norm(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return std::sqrt(s);
}

KetVector normalize(const KetVector& a) {
    const double n = a.norm();
    if (!(n > 0.0)) throw DomainError("cannot normalize null observable");
    return a.scaled(1.0 / n);
}

// ----------------------------------------------------------------------- Ray

bool Ray::equals(const Ray& other, double tol) const {
    if (dim() != other.dim()) return false;
    return distance(rep_, other.rep_) <= tol;
}

Ray to_ray(const KetVector& a) {
    KetVector unit = normalize(a);
    const complex lead = unit.terms().front().second;
    const complex gauge = std::conj(lead) / std::abs(lead);
    std::vector<KetVector::Term> terms(unit.terms().begin(), unit.terms().end());
    for (auto& t : terms) t.second *= gauge;
    terms.front().second = complex(std::abs(lead), 0.0);
    return Ray(KetVector(a.dim(), std::move(terms)));
}

double overlap_modulus(const Ray& a, const Ray& b) {
    return std::min(1.0, std::abs(inner(a.representative(), b.representative())));
}

double fubini_study_distance(const Ray& a, const Ray& b) {
    return std::acos(overlap_modulus(a, b));
}

// -------------------------------------------------------------- enumeration

std::vector<ModeIndex> box_modes(std::size_t dim, std::int64_t n_max) {
    if (dim == 0) throw DimensionError("box_modes: torus dimension must be >= 1");
    if (n_max < 0) throw DomainError("box_modes: n_max must be >= 0");
    std::vector<ModeIndex> out;
    std::vector<std::int64_t> cur(dim, -n_max);
    while (true) {
        out.emplace_back(cur);
        std::size_t i = dim;
        while (i > 0) {
            --i;
            if (cur[i] < n_max) {
                ++cur[i];
                break;
            }
            cur[i] = -n_max;
            if (i == 0) return out;
        }
    }
}

KetVector haar_random_ket(std::span<const ModeIndex> modes, std::mt19937_64& rng) {
    if (modes.empty()) throw DomainError("haar_random_ket: empty mode set");
    std::normal_distribution<double> gauss(0.0, 1.0);
    while (true) {
        std::vector<KetVector::Term> terms;
        terms.reserve(modes.size());
        for (const auto& n : modes) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            terms.emplace_back(n, complex(re, im));
        }
        KetVector v(modes.front().dim(), std::move(terms));
        if (v.norm() > 1e-6) return normalize(v);
    }
}

}  // namespace koopgeo
