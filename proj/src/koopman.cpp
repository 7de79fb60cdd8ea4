#include "koopgeo/koopman.hpp"

#include "koopgeo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>

namespace koopgeo {

namespace {

__extension__ typedef __int128 wide;

wide abs_wide(wide x) { return x < 0 ? -x : x; }

std::int64_t checked_component(wide x) {
    if (abs_wide(x) > max_mode_component)
        throw RangeError("mode component exceeds 2^62; orbit left the representable lattice");
    return static_cast<std::int64_t>(x);
}

IntMatrix minor_of(const IntMatrix& m, std::size_t row, std::size_t col) {
    IntMatrix out;
    out.reserve(m.size() - 1);
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (i == row) continue;
        std::vector<std::int64_t> r;
        r.reserve(m.size() - 1);
        for (std::size_t j = 0; j < m.size(); ++j)
            if (j != col) r.push_back(m[i][j]);
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

// ---------------------------------------------------------- TorusTranslation

TorusTranslation::TorusTranslation(std::vector<double> omega, double t) : omega_(std::move(omega)), t_(t) {
    if (omega_.empty()) throw DimensionError("TorusTranslation: omega must have length >= 1");
    for (double w : omega_)
        if (!std::isfinite(w)) throw DomainError("TorusTranslation: omega must be finite");
    if (!std::isfinite(t_)) throw DomainError("TorusTranslation: t must be finite");
}

double TorusTranslation::phase_of(const ModeIndex& n) const {
    if (n.dim() != dim()) throw DimensionError("TorusTranslation: incompatible torus dimensions");
    double s = 0.0;
    for (std::size_t i = 0; i < dim(); ++i) s += static_cast<double>(n[i]) * omega_[i];
    return s * t_;
}

double eigenphase(const TorusTranslation& op, const ModeIndex& n) { return wrap_phase(op.phase_of(n)); }

// --------------------------------------------------------- ToralAutomorphism

std::int64_t integer_determinant(const IntMatrix& m) {
    const std::size_t d = m.size();
    if (d == 0) throw DimensionError("determinant of an empty matrix");
    // Bareiss: every intermediate entry is a minor of m, hence exact.
    std::vector<std::vector<wide>> a(d, std::vector<wide>(d));
    for (std::size_t i = 0; i < d; ++i) {
        if (m[i].size() != d) throw DimensionError("matrix must be square");
        for (std::size_t j = 0; j < d; ++j) a[i][j] = m[i][j];
    }
    wide sign = 1;
    wide prev = 1;
    for (std::size_t k = 0; k + 1 < d; ++k) {
        if (a[k][k] == 0) {
            std::size_t p = k + 1;
            while (p < d && a[p][k] == 0) ++p;
            if (p == d) return 0;
            std::swap(a[k], a[p]);
            sign = -sign;
        }
        for (std::size_t i = k + 1; i < d; ++i) {
            for (std::size_t j = k + 1; j < d; ++j) {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
                if (abs_wide(a[i][j]) > (wide{1} << 100))
                    throw RangeError("determinant: intermediate overflow");
            }
        }
        prev = a[k][k];
    }
    wide det = sign * a[d - 1][d - 1];
    if (abs_wide(det) > max_mode_component) throw RangeError("determinant out of range");
    return static_cast<std::int64_t>(det);
}

ToralAutomorphism::ToralAutomorphism(IntMatrix matrix) : matrix_(std::move(matrix)) {
    if (matrix_.empty()) throw DimensionError("ToralAutomorphism: matrix must be at least 1x1");
    for (const auto& row : matrix_)
        if (row.size() != matrix_.size()) throw DimensionError("ToralAutomorphism: matrix must be square");
    det_ = integer_determinant(matrix_);
    if (det_ != 1 && det_ != -1)
        throw DomainError("ToralAutomorphism: determinant ±1 required (det = " + std::to_string(det_) + ")");
}

ToralAutomorphism ToralAutomorphism::arnold_cat() { return ToralAutomorphism(IntMatrix{{1, 1}, {1, 2}}); }

ToralAutomorphism ToralAutomorphism::identity(std::size_t dim) {
    IntMatrix m(dim, std::vector<std::int64_t>(dim, 0));
    for (std::size_t i = 0; i < dim; ++i) m[i][i] = 1;
    return ToralAutomorphism(std::move(m));
}

ToralAutomorphism ToralAutomorphism::inverse() const {
    // C^{-1} = adj(C) / det, integral since det = ±1.
    const std::size_t d = dim();
    if (d == 1) return ToralAutomorphism(IntMatrix{{det_}});
    IntMatrix inv(d, std::vector<std::int64_t>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const std::int64_t cof = integer_determinant(minor_of(matrix_, j, i));
            inv[i][j] = ((i + j) % 2 == 0 ? cof : -cof) * det_;
        }
    }
    return ToralAutomorphism(std::move(inv));
}

ToralAutomorphism ToralAutomorphism::transpose() const {
    const std::size_t d = dim();
    IntMatrix t(d, std::vector<std::int64_t>(d));
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) t[i][j] = matrix_[j][i];
    return ToralAutomorphism(std::move(t));
}

ModeIndex ToralAutomorphism::act(const ModeIndex& n) const {
    if (n.dim() != dim()) throw DimensionError("ToralAutomorphism: incompatible torus dimensions");
    std::vector<std::int64_t> out(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
        wide s = 0;
        for (std::size_t j = 0; j < dim(); ++j) s += wide{matrix_[i][j]} * wide{n[j]};
        out[i] = checked_component(s);
    }
    return ModeIndex(std::move(out));
}

// ----------------------------------------------------------- KoopmanOperator

bool ComposedOperator::operator==(const ComposedOperator& o) const { return factors == o.factors; }

KoopmanOperator KoopmanOperator::composed(std::vector<KoopmanOperator> factors) {
    if (factors.empty()) throw DomainError("composed operator needs at least one factor");
    const std::size_t d = factors.front().dim();
    for (const auto& f : factors)
        if (f.dim() != d) throw DimensionError("composed operator: factors act on different tori");
    return KoopmanOperator(ComposedOperator{std::move(factors)});
}

std::size_t KoopmanOperator::dim() const {
    return std::visit(
        [](const auto& k) -> std::size_t {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, ComposedOperator>)
                return k.factors.front().dim();
            else
                return k.dim();
        },
        kind_);
}

KetVector KoopmanOperator::apply(const KetVector& v) const {
    if (v.dim() != dim())
        throw DimensionError("apply: operator acts on T^" + std::to_string(dim()) + ", ket lives on T^" +
                             std::to_string(v.dim()));
    return std::visit(
        [&](const auto& k) -> KetVector {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, TorusTranslation>) {
                std::vector<KetVector::Term> out(v.terms().begin(), v.terms().end());
                for (auto& [n, c] : out) c *= std::polar(1.0, k.phase_of(n));
                return KetVector(v.dim(), std::move(out));
            } else if constexpr (std::is_same_v<K, ToralAutomorphism>) {
                std::vector<KetVector::Term> out;
                out.reserve(v.support_size());
                for (const auto& [n, c] : v.terms()) out.emplace_back(k.act(n), c);
                return KetVector(v.dim(), std::move(out), 0.0);
            } else {
                KetVector cur = v;
                for (auto it = k.factors.rbegin(); it != k.factors.rend(); ++it) cur = it->apply(cur);
                return cur;
            }
        },
        kind_);
}

KoopmanOperator KoopmanOperator::inverse() const {
    return std::visit(
        [](const auto& k) -> KoopmanOperator {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, TorusTranslation>) {
                return TorusTranslation(k.omega(), -k.time());
            } else if constexpr (std::is_same_v<K, ToralAutomorphism>) {
                return k.inverse();
            } else {
                std::vector<KoopmanOperator> inv;
                for (auto it = k.factors.rbegin(); it != k.factors.rend(); ++it) inv.push_back(it->inverse());
                return KoopmanOperator::composed(std::move(inv));
            }
        },
        kind_);
}

// ------------------------------------------------------------------- orbits

Orbit orbit(const ToralAutomorphism& op, const ModeIndex& n, std::size_t k_max) {
    Orbit out;
    std::map<ModeIndex, std::size_t> seen;
    ModeIndex cur = n;
    for (std::size_t k = 0; k <= k_max; ++k) {
        if (auto it = seen.find(cur); it != seen.end()) {
            out.cycle = true;
            out.cycle_length = k - it->second;
            return out;
        }
        seen.emplace(cur, k);
        out.modes.push_back(cur);
        if (k == k_max) break;
        cur = op.act(cur);
    }
    // A repeat exactly one step past k_max still counts as a cycle.
    if (!out.modes.empty()) {
        const ModeIndex next = op.act(out.modes.back());
        if (auto it = seen.find(next); it != seen.end()) {
            out.cycle = true;
            out.cycle_length = out.modes.size() - it->second;
        }
    }
    return out;
}

double unitarity_defect(const KoopmanOperator& op, std::span<const KetVector> sample) {
    if (sample.empty()) throw DomainError("unitarity_defect: empty sample");
    std::vector<KetVector> image;
    image.reserve(sample.size());
    for (const auto& v : sample) image.push_back(op.apply(v));
    double worst = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i)
        for (std::size_t j = i; j < sample.size(); ++j)
            worst = std::max(worst, std::abs(inner(image[i], image[j]) - inner(sample[i], sample[j])));
    return worst;
}

KoopmanOperator uncoupled_oscillators(double omega1, double omega2, double t) {
    return TorusTranslation({omega1, omega2}, t);
}

KoopmanOperator arnold_cat_operator() { return ToralAutomorphism::arnold_cat(); }

}  // namespace koopgeo
