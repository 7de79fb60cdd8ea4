#include "doctest.h"

#include "generators.hpp"
#include "koopgeo/errors.hpp"
#include "koopgeo/holonomy.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cmath>

using namespace koopgeo;
using oracle::circular_distance;

namespace {

const double r2 = 1.0 / std::sqrt(2.0);

std::vector<KetVector> triangle() {
    return {KetVector::basis({1, 0}), KetVector(2, {{ModeIndex{1, 0}, r2}, {ModeIndex{0, 1}, r2}}),
            KetVector(2, {{ModeIndex{1, 0}, r2}, {ModeIndex{0, 1}, complex(0, r2)}})};
}

std::vector<oracle::dense> dense_triangle() {
    return {{1.0, 0.0}, {r2, r2}, {r2, oracle::cplx(0, r2)}};
}

std::vector<KetVector> great_circle() {
    return {KetVector::basis({0}), KetVector(1, {{ModeIndex{0}, r2}, {ModeIndex{1}, r2}}), KetVector::basis({1}),
            KetVector(1, {{ModeIndex{0}, r2}, {ModeIndex{1}, -r2}})};
}

RayLoop constant_loop(std::size_t K) { return RayLoop(std::vector<Ray>(K, to_ray(KetVector::basis({3, 1})))); }

}  // namespace

TEST_CASE("constant loops have trivial holonomy") {
    CHECK(pancharatnam_phase(constant_loop(5)).phase == 0.0);
    CHECK(parallel_transport_phase(constant_loop(5)).phase == 0.0);
    CHECK(pancharatnam_phase(constant_loop(5)).min_overlap == 1.0);
}

TEST_CASE("bargmann triangle") {
    const double expected = oracle::bargmann(dense_triangle());
    CHECK(expected == doctest::Approx(-pi / 4).epsilon(1e-15));
    const HolonomyResult b = pancharatnam_phase(triangle());
    const HolonomyResult p = parallel_transport_phase(triangle());
    CHECK(std::abs(b.phase + pi / 4) < 1e-14);
    CHECK(std::abs(p.phase + pi / 4) < 1e-14);
    CHECK(b.min_overlap == doctest::Approx(r2));
    CHECK(b.nodes == 3);
}

TEST_CASE("real great circle picks up pi") {
    const auto loop = great_circle();
    CHECK(circular_distance(pancharatnam_phase(loop).phase, pi) < 1e-14);
    CHECK(circular_distance(parallel_transport_phase(loop).phase, pi) < 1e-14);
    CHECK(circular_distance(oracle::bargmann({{1, 0}, {r2, r2}, {0, 1}, {r2, -r2}}), pi) < 1e-14);
}

TEST_CASE("orthogonal neighbors are rejected") {
    const std::vector<KetVector> jump{KetVector::basis({0}), KetVector::basis({1})};
    CHECK_THROWS_WITH_AS(pancharatnam_phase(jump), doctest::Contains("loop too coarse: orthogonal neighbors"),
                         NumericalError);
    CHECK_THROWS_WITH_AS(parallel_transport_phase(jump), doctest::Contains("loop too coarse: orthogonal neighbors"),
                         NumericalError);
    CHECK_THROWS_AS(RayLoop::from_kets(jump), NumericalError);
    CHECK_THROWS_AS(geodesic_point(jump[0], jump[1], 0.5), NumericalError);
    CHECK_THROWS_AS(RayLoop({to_ray(KetVector::basis({0}))}), DomainError);
    CHECK_THROWS_AS(RayLoop({to_ray(KetVector::basis({0})), to_ray(KetVector::basis({0, 0}))}), DimensionError);
}

TEST_CASE("two-mode circle at K = 4096 sits on the analytic phase") {
    const RayLoop loop = sample_loop(two_mode_circle(pi / 2, {0}, {1}), 4096);
    CHECK(circular_distance(pancharatnam_phase(loop).phase, -pi) < 1e-5);
}

TEST_CASE("independent dense product matches the analytic two-state phase") {
    for (double theta : {pi / 6, pi / 3, 2.0}) {
        const double dense =
            oracle::bargmann_curve([&](double s) { return oracle::two_mode_circle(theta, s); }, 100000);
        CHECK(circular_distance(dense, oracle::two_state_phase(theta)) < 1e-8);
        const RayLoop loop = sample_loop(two_mode_circle(theta, {0}, {1}), 100000);
        CHECK(circular_distance(pancharatnam_phase(loop).phase, dense) < 1e-10);
    }
}

TEST_CASE("refine keeps the original nodes and interpolates along geodesics") {
    const RayLoop c = refine(constant_loop(3), 4);
    CHECK(c.size() == 12);
    CHECK(c.is_constant());

    const RayLoop two = RayLoop::from_kets(std::vector<KetVector>{
        KetVector::basis({0}), KetVector(1, {{ModeIndex{0}, r2}, {ModeIndex{1}, r2}})});
    const RayLoop fine = refine(two, 2);
    REQUIRE(fine.size() == 4);
    CHECK(fine.nodes()[0] == two.nodes()[0]);
    CHECK(fine.nodes()[2] == two.nodes()[1]);
    CHECK(fubini_study_distance(fine.nodes()[0], fine.nodes()[1]) == doctest::Approx(pi / 8).epsilon(1e-14));
    CHECK(fubini_study_distance(fine.nodes()[1], fine.nodes()[2]) == doctest::Approx(pi / 8).epsilon(1e-14));
    CHECK_THROWS_AS(refine(two, 1), DomainError);
}

TEST_CASE("geodesic refinement of K = 64 polygon changes the phase by O(1/K^2)") {
    const RayLoop coarse = sample_loop(two_mode_circle(pi / 3, {0}, {1}), 64);
    const double p64 = pancharatnam_phase(coarse).phase;
    const double p4096 = pancharatnam_phase(refine(coarse, 64)).phase;
    CHECK(std::abs(p4096 - p64) <= 1.0 / (64.0 * 64.0));
}

TEST_CASE("holonomy_at examples") {
    const HolonomyResult c = holonomy_at(constant_loop(4), 1e-9);
    CHECK(c.phase == 0.0);
    REQUIRE(c.history.size() == 1);
    CHECK(c.history[0].level == 0);
    CHECK(c.history[0].delta == 0.0);

    const HolonomyResult circle = holonomy_at(two_mode_circle(pi / 2, {0}, {1}, 32), 1e-6);
    CHECK(circular_distance(circle.phase, -pi) < 1e-5);

    const HolonomyResult tri = holonomy_at(RayLoop::from_kets(triangle()), 1e-9);
    CHECK(std::abs(tri.phase + pi / 4) < 1e-8);
    CHECK(tri.refinement_error < 1e-9);

    CHECK_THROWS_AS(holonomy_at(constant_loop(4), 0.0), DomainError);
    CHECK_THROWS_AS(holonomy_at(constant_loop(4), -1e-3), DomainError);
}

TEST_CASE("refinement cap raises a convergence error carrying the last two phases") {
    Tolerances tol;
    tol.max_doublings = 2;
    try {
        holonomy_at(two_mode_circle(pi / 3, {0}, {1}, 8), 1e-12, tol);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        const double p16 = pancharatnam_phase(sample_loop(two_mode_circle(pi / 3, {0}, {1}), 16)).phase;
        const double p32 = pancharatnam_phase(sample_loop(two_mode_circle(pi / 3, {0}, {1}), 32)).phase;
        CHECK(e.previous_phase == doctest::Approx(p16).epsilon(1e-14));
        CHECK(e.last_phase == doctest::Approx(p32).epsilon(1e-14));
    }
}

TEST_CASE("convergence order of the two-mode circle is two") {
    for (double theta : {pi / 6, pi / 3, 1.0}) {
        std::vector<double> phases;
        for (std::size_t K = 32; K <= 8192; K *= 2)
            phases.push_back(pancharatnam_phase(sample_loop(two_mode_circle(theta, {0}, {1}), K)).phase);
        // deltas[i] = phase(32*2^(i+1)) - phase(32*2^i); K >= 64 from i = 1 on.
        std::vector<double> deltas;
        for (std::size_t i = 1; i < phases.size(); ++i) deltas.push_back(std::abs(phases[i] - phases[i - 1]));
        for (std::size_t i = 2; i < deltas.size(); ++i) {
            CAPTURE(theta);
            CAPTURE(i);
            CHECK(deltas[i - 1] / deltas[i] >= 3.5);
        }
    }
}

TEST_CASE("the equatorial circle is exact at every resolution") {
    for (std::size_t K : {4u, 32u, 1000u})
        CHECK(circular_distance(pancharatnam_phase(sample_loop(two_mode_circle(pi / 2, {0}, {1}), K)).phase, pi) <
              1e-12);
}

TEST_CASE("two-mode circles run well under a second") {
    for (double theta : {pi / 6, pi / 3, pi / 2}) {
        const auto t0 = std::chrono::steady_clock::now();
        const HolonomyResult h = holonomy_at(two_mode_circle(theta, {0}, {1}), 1e-6);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        CHECK(circular_distance(h.phase, oracle::two_state_phase(theta)) < 1e-5);
        CHECK(secs < 1.0);
    }
}

TEST_CASE("holonomy group sample") {
    const Ray base = to_ray(KetVector::basis({0}));
    const std::vector<ModeIndex> three{ModeIndex{0}, ModeIndex{1}, ModeIndex{2}};
    CHECK(holonomy_group_sample(base, 1, 42, three) == std::vector<double>{0.0});

    std::vector<double> phases = holonomy_group_sample(base, 200, 42, three);
    CHECK(phases.size() == 200);
    CHECK(phases.front() == 0.0);
    std::sort(phases.begin(), phases.end());
    double gap = 2 * pi - (phases.back() - phases.front());
    for (std::size_t i = 1; i < phases.size(); ++i) gap = std::max(gap, phases[i] - phases[i - 1]);
    CHECK(gap < 0.5);

    for (const auto& loop : sample_holonomy_loops(base, 200, 42, three)) {
        CHECK(loop.basepoint() == base);
        const double a = pancharatnam_phase(loop).phase;
        CHECK(circular_distance(pancharatnam_phase(loop.reversed()).phase, -a) <= 1e-12);
    }

    CHECK(holonomy_group_sample(base, 50, 7, three) == holonomy_group_sample(base, 50, 7, three));
    CHECK_THROWS_WITH_AS(holonomy_group_sample(base, 5, 1),
                         "holonomy trivial: one-dimensional ray space is a point", DomainError);
    CHECK_THROWS_AS(holonomy_group_sample(base, 0, 1, three), DomainError);
    CHECK_THROWS_AS(holonomy_group_sample(base, 5, 1, std::vector<ModeIndex>{ModeIndex{1}, ModeIndex{2}}),
                    DomainError);
}

TEST_CASE("property: gauge, cyclic and reversal invariance on random loops") {
    std::mt19937_64 rng(12);
    const auto modes = gen::four_modes();
    for (int trial = 0; trial < 500; ++trial) {
        const auto kets = gen::loop_kets(rng, modes);
        const double phase = pancharatnam_phase(kets).phase;

        const auto gauged = gen::regauged(rng, kets);
        CHECK(circular_distance(pancharatnam_phase(gauged).phase, phase) <= 1e-12);
        CHECK(circular_distance(parallel_transport_phase(gauged).phase, phase) <= 1e-12);

        const RayLoop loop = RayLoop::from_kets(kets);
        for (std::size_t s = 1; s < loop.size(); ++s)
            CHECK(circular_distance(pancharatnam_phase(loop.rotated(s)).phase, phase) <= 1e-12);
        CHECK(circular_distance(pancharatnam_phase(loop.reversed()).phase, -phase) <= 1e-12);

        std::vector<oracle::dense> dense;
        for (const auto& k : kets) {
            oracle::dense v;
            for (const auto& n : modes) v.push_back(k.amplitude(n));
            dense.push_back(v);
        }
        CHECK(circular_distance(oracle::bargmann(dense), phase) <= 1e-12);
    }
}

TEST_CASE("property: the two estimators agree") {
    std::mt19937_64 rng(13);
    const auto modes = gen::four_modes();
    for (int trial = 0; trial < 500; ++trial) {
        const RayLoop loop = RayLoop::from_kets(gen::loop_kets(rng, modes));
        CHECK(circular_distance(pancharatnam_phase(loop).phase, parallel_transport_phase(loop).phase) <= 1e-12);
    }
    for (double theta : {pi / 6, pi / 3, pi / 2}) {
        const RayLoop loop = sample_loop(two_mode_circle(theta, {0}, {1}), 512);
        CHECK(circular_distance(pancharatnam_phase(loop).phase, parallel_transport_phase(loop).phase) <= 1e-12);
    }
}

TEST_CASE("property: real loops have phase 0 or pi") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<KetVector> nodes;
        const int k = 3 + trial % 6;
        for (int i = 0; i < k; ++i)
            nodes.push_back(KetVector(1, {{ModeIndex{0}, g(rng)}, {ModeIndex{1}, g(rng)}, {ModeIndex{2}, g(rng)}}));
        HolonomyResult h;
        try {
            h = pancharatnam_phase(nodes);
        } catch (const NumericalError&) {
            continue;
        }
        CHECK(std::min(circular_distance(h.phase, 0.0), circular_distance(h.phase, pi)) <= 1e-9);
    }
}
