#include <doctest.h>

#include <cmath>
#include <random>

#include "efg/dispersion.hpp"
#include "efg/errors.hpp"
#include "efg/probes.hpp"

using namespace efg;

namespace {

std::vector<Vec3> random_directions(int count, unsigned seed) {
    std::vector<Vec3> out;
    for (const auto& p : probe_points({{-1, 1}, {-1, 1}, {-1, 1}}, count, seed)) {
        if (p[0] * p[0] + p[1] * p[1] + p[2] * p[2] < 0.05) continue;
        out.push_back({p[0], p[1], p[2]});
    }
    return out;
}

}  // namespace

TEST_CASE("phonon dispersion") {
    PhononSpec s;
    CHECK(phonon_omega_squared({0, 0, 0}, s) == 0.0);
    s.c_s = 1.0;
    s.m0 = 0.5;
    s.hbar = 1.0;
    CHECK(phonon_omega_squared({1, 0, 0}, s) == doctest::Approx(2.0).epsilon(1e-15));
    s.hbar = 0.0;
    s.c_s = 1.7;
    const Vec3 k{0.3, -0.4, 1.2};
    CHECK(std::sqrt(phonon_omega_squared(k, s)) == doctest::Approx(1.7 * 1.3).epsilon(1e-14));
}

TEST_CASE("displayed Finsler dispersion") {
    DispersionSpec s;
    s.c = 2.0;
    const Vec3 k{0.5, 1.0, -0.5};
    const double Q = 0.25 + 1.0 + 0.25;
    CHECK(finsler_omega_squared(k, s) == doctest::Approx(4.0 * Q * Q).epsilon(1e-15));
    s.set_q({0, 0}, 0.01);
    CHECK(finsler_omega_squared({1, 0, 0}, s) == doctest::Approx(4.0 * (1.0 - 0.01)).epsilon(1e-15));
    CHECK_THROWS_AS(finsler_omega_squared({0, 0, 0}, s), DomainError);

    // The q-ratio scales as beta^{-2r} under k -> beta k.
    std::mt19937_64 rng(3);
    auto t = random_dispersion(rng, 1, 0.1);
    auto ratio = [&](const Vec3& v) {
        const double Qv = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        return t.contract(v) / (t.r * Qv * Qv);
    };
    CHECK(ratio({2 * k[0], 2 * k[1], 2 * k[2]}) == doctest::Approx(ratio(k) / 4.0).epsilon(1e-14));
}

TEST_CASE("symmetric q storage") {
    DispersionSpec s;
    s.r = 2;
    s.set_q({2, 0, 1, 0}, 0.5);
    CHECK(s.q_at({0, 0, 1, 2}) == 0.5);
    CHECK(s.q_at({1, 0, 2, 0}) == 0.5);
    CHECK(s.q.size() == 1);
    // 12 orderings of (0, 0, 1, 2)
    CHECK(s.contract({1, 1, 1}) == doctest::Approx(6.0).epsilon(1e-15));
    CHECK(s.q_norm() == doctest::Approx(std::sqrt(12 * 0.25)).epsilon(1e-15));
    CHECK_THROWS_AS(s.set_q({0, 1}, 1.0), ShapeError);
    std::mt19937_64 rng(5);
    auto r = random_dispersion(rng, 2, 0.3);
    CHECK(r.q.size() == 15);
    CHECK(r.q_norm() == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("isotropic r = 1 data reproduces the phonon relation") {
    PhononSpec p{0.8, 1.3, 0.6};
    auto s = phonon_as_dispersion(p, 3.0);
    for (const auto& k : random_directions(10, 7)) {
        const Vec3 big{3 * k[0], 3 * k[1], 3 * k[2]};
        CHECK(finsler_omega_squared(k, s) == doctest::Approx(phonon_omega_squared(k, p)).epsilon(1e-13));
        CHECK(finsler_omega_squared(big, s) == doctest::Approx(phonon_omega_squared(big, p)).epsilon(1e-13));
    }
}

TEST_CASE("generating function from q") {
    std::mt19937_64 rng(11);
    const auto pts = probe_points({{-1, 1}, {-1, 1}, {-1, 1}, {-1, 1}, {-2, 2}, {-2, 2}, {-2, 2}, {-2, 2}}, 20, 13);
    const double betas[] = {0.5, 2.0, 3.7};
    for (int r : {1, 2}) {
        auto s = random_dispersion(rng, r, 1e-3);
        s.ghat << 1.2, 0.1, 0.0, 0.1, 0.9, 0.05, 0.0, 0.05, 1.1;
        auto gf = generating_from_q(s, pts);
        CHECK(check_homogeneity(gf, pts, betas).max_deviation < 1e-10);
    }
    SUBCASE("q = 0 gives the block metric") {
        DispersionSpec s;
        s.ghat << 2.0, 0.3, 0.0, 0.3, 1.0, 0.0, 0.0, 0.0, 1.5;
        auto gf = generating_from_q(s);
        const auto g = hessian_metric(gf, pts[0]);
        CHECK(g(0, 0) == doctest::Approx(-1.0).epsilon(1e-15));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) CHECK(g(1 + i, 1 + j) == doctest::Approx(s.ghat(i, j)).epsilon(1e-14).scale(1.0));
    }
    SUBCASE("the Hessian moves at first order in q") {
        auto base = random_dispersion(rng, 2, 1.0);
        std::vector<double> dev;
        for (double n : {1e-3, 5e-4}) {
            auto s = base.scaled_q(n);
            DispersionSpec flat;
            const auto d = hessian_metric(generating_from_q(s), pts[1]) - hessian_metric(generating_from_q(flat), pts[1]);
            dev.push_back(d.cwiseAbs().maxCoeff());
        }
        CHECK(dev[0] / dev[1] == doctest::Approx(2.0).epsilon(1e-6));
    }
    SUBCASE("a large deformation is rejected") {
        DispersionSpec s;
        s.set_q({0, 0}, -2.0);
        CHECK_THROWS_WITH_AS(generating_from_q(s, {{0, 0, 0, 0, 0, 1, 0, 0}}), doctest::Contains("too large"),
                             ParameterError);
    }
}

TEST_CASE("dispersion roundtrip through the null cone") {
    const auto probes = random_directions(12, 17);
    SUBCASE("q = 0 is exact") {
        DispersionSpec s;
        s.ghat << 1.3, 0.2, 0.0, 0.2, 0.8, 0.1, 0.0, 0.1, 1.0;
        auto rep = roundtrip_check(s, probes);
        CHECK(rep.max_discrepancy < 1e-13);
    }
    SUBCASE("second-order agreement for r = 1 and r = 2") {
        std::mt19937_64 rng(19);
        for (int r : {1, 2}) {
            auto s = random_dispersion(rng, r, 1e-4);
            auto rep = roundtrip_check(s, probes);
            CHECK(rep.max_discrepancy < 1e-7);
            auto coarse = roundtrip_check(s.scaled_q(100.0), probes);
            CHECK(coarse.ratio == doctest::Approx(4.0).epsilon(0.1));
        }
    }
    SUBCASE("log-log slope") {
        std::mt19937_64 rng(23);
        auto s = random_dispersion(rng, 1, 1.0);
        auto rep = discrepancy_slope(s, {1e-2, 5e-3, 2.5e-3, 1.25e-3}, probes);
        CHECK(rep.slope > 1.8);
        CHECK(rep.slope < 2.2);
    }
}
