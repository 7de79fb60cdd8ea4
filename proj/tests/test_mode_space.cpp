#include "doctest.h"

#include "generators.hpp"
#include "koopgeo/errors.hpp"
#include "koopgeo/mode_space.hpp"

#include <cmath>

using namespace koopgeo;

namespace {

const double r2 = 1.0 / std::sqrt(2.0);

KetVector plus01() { return KetVector(1, {{ModeIndex{0}, r2}, {ModeIndex{1}, r2}}); }

}  // namespace

TEST_CASE("inner product of basis kets") {
    const KetVector n = KetVector::basis({2, -1});
    CHECK(inner(n, n) == complex(1.0));
    CHECK(inner(KetVector::basis({1, 0}), KetVector::basis({0, 1})) == complex(0.0));
    CHECK(std::abs(inner(plus01(), KetVector::basis({1})) - complex(r2)) < 1e-15);
}

TEST_CASE("inner is conjugate linear in the first slot") {
    const KetVector a = plus01();
    const KetVector b = KetVector(1, {{ModeIndex{0}, complex(0.3, 0.1)}, {ModeIndex{1}, complex(-0.2, 0.5)}});
    const complex z(0.4, -1.7);
    CHECK(std::abs(inner(a.scaled(z), b) - std::conj(z) * inner(a, b)) < 1e-15);
    CHECK(std::abs(inner(a, b.scaled(z)) - z * inner(a, b)) < 1e-15);
}

TEST_CASE("dimension mismatch is rejected") {
    CHECK_THROWS_AS(inner(KetVector::basis({1}), KetVector::basis({1, 0})), DimensionError);
    CHECK_THROWS_AS(KetVector(2, {{ModeIndex{1}, 1.0}}), DimensionError);
    CHECK_THROWS_AS((ModeIndex{1} + ModeIndex({1, 2})), DimensionError);
}

TEST_CASE("normalize") {
    const KetVector v = normalize(KetVector::basis({1, 1}).scaled(2.0));
    CHECK(v == KetVector::basis({1, 1}));

    const KetVector w = normalize(KetVector(2, {{ModeIndex{0, 0}, complex(3, 4)}}));
    CHECK(std::abs(w.amplitude({0, 0}) - complex(0.6, 0.8)) < 1e-15);

    const KetVector u = normalize(KetVector(1, {{ModeIndex{0}, 1.0}, {ModeIndex{1}, 1.0}}));
    CHECK(distance(u, plus01()) < 1e-15);
    CHECK(u.is_normalized());

    CHECK_THROWS_WITH_AS(normalize(KetVector(3)), "cannot normalize null observable", DomainError);
}

TEST_CASE("storage drops amplitudes at or below the threshold and merges duplicates") {
    const KetVector v(1, {{ModeIndex{3}, 1e-16}, {ModeIndex{0}, 0.5}, {ModeIndex{0}, 0.25}, {ModeIndex{-2}, 1.0}});
    REQUIRE(v.support_size() == 2);
    CHECK(v.terms()[0].first == ModeIndex{-2});
    CHECK(v.amplitude({0}) == complex(0.75));
    CHECK(v.amplitude({3}) == complex(0.0));
    CHECK((plus01() - plus01()).is_zero());
}

TEST_CASE("to_ray fixes the gauge") {
    const Ray a = to_ray(KetVector::basis({2, 5}).scaled(std::polar(1.0, 1.3)));
    CHECK(a.representative() == KetVector::basis({2, 5}));

    const Ray b = to_ray(plus01().scaled(-1.0));
    CHECK(distance(b.representative(), plus01()) < 1e-15);

    // i (|0> - i|1>)/sqrt2 = (i|0> + |1>)/sqrt2, fixed by -i to (|0> - i|1>)/sqrt2
    const KetVector minus_i(1, {{ModeIndex{0}, r2}, {ModeIndex{1}, complex(0, -r2)}});
    const Ray c = to_ray(minus_i.scaled(complex(0, 1)));
    CHECK(distance(c.representative(), minus_i) < 1e-15);
    CHECK(c.representative().terms().front().second.imag() == 0.0);
    CHECK(c.representative().terms().front().second.real() > 0.0);

    CHECK_THROWS_AS(to_ray(KetVector(2)), DomainError);
}

TEST_CASE("fubini-study distance examples") {
    const Ray e0 = to_ray(KetVector::basis({0}));
    CHECK(fubini_study_distance(e0, e0) == 0.0);
    CHECK(fubini_study_distance(e0, to_ray(KetVector::basis({1}))) == doctest::Approx(pi / 2).epsilon(1e-15));
    CHECK(fubini_study_distance(e0, to_ray(plus01())) == doctest::Approx(pi / 4).epsilon(1e-14));
}

TEST_CASE("wrap_phase maps onto (-pi, pi]") {
    CHECK(wrap_phase(pi) == pi);
    CHECK(wrap_phase(-pi) == pi);
    CHECK(wrap_phase(3 * pi) == doctest::Approx(pi));
    CHECK(wrap_phase(7.0) == doctest::Approx(7.0 - 2 * pi).epsilon(1e-15));
    CHECK(!std::signbit(wrap_phase(-0.0)));
    CHECK(phase_difference(pi - 0.1, -pi + 0.1) == doctest::Approx(-0.2));
}

TEST_CASE("box_modes enumerates the box in lexicographic order") {
    const auto modes = box_modes(3, 2);
    CHECK(modes.size() == 125);
    CHECK(std::is_sorted(modes.begin(), modes.end()));
    CHECK(modes.front() == ModeIndex{-2, -2, -2});
    CHECK(modes.back() == ModeIndex{2, 2, 2});
}

TEST_CASE("property: Cauchy-Schwarz and positivity on random kets") {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const KetVector a = gen::ket(rng, 2, 5, 2);
        const KetVector b = gen::ket(rng, 2, 5, 2);
        const complex aa = inner(a, a);
        CHECK(aa.imag() == 0.0);
        CHECK(aa.real() >= 0.0);
        CHECK(std::norm(inner(a, b)) <= aa.real() * inner(b, b).real() * (1 + 1e-14));
    }
}

TEST_CASE("property: to_ray is phase invariant and idempotent") {
    std::mt19937_64 rng(2);
    const KetVector a = gen::ket(rng, 2, 6);
    const Ray base = to_ray(a);
    CHECK(to_ray(base.representative()) == base);
    for (int trial = 0; trial < 100; ++trial) {
        const Ray r = to_ray(a.scaled(std::polar(1.0, gen::angle(rng))));
        CHECK(distance(r.representative(), base.representative()) <= 1e-12);
    }
}

TEST_CASE("property: fubini-study distance is a symmetric metric") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const Ray a = to_ray(gen::ket(rng, 1, 3, 1));
        const Ray b = to_ray(gen::ket(rng, 1, 3, 1));
        const Ray c = to_ray(gen::ket(rng, 1, 3, 1));
        const double ab = fubini_study_distance(a, b);
        CHECK(ab == fubini_study_distance(b, a));
        CHECK(ab >= 0.0);
        CHECK(ab <= pi / 2 + 1e-15);
        CHECK(fubini_study_distance(a, c) <= ab + fubini_study_distance(b, c) + 1e-10);
    }
}

TEST_CASE("haar_random_ket is normalized and supported on the given modes") {
    std::mt19937_64 rng(4);
    const auto modes = gen::four_modes();
    for (int i = 0; i < 20; ++i) {
        const KetVector v = haar_random_ket(modes, rng);
        CHECK(v.is_normalized());
        for (const auto& [n, c] : v.terms()) CHECK(std::find(modes.begin(), modes.end(), n) != modes.end());
    }
}
