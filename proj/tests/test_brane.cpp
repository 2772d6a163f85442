#include <doctest.h>

#include <cmath>
#include <random>

#include "efg/brane.hpp"
#include "efg/errors.hpp"
#include "efg/probes.hpp"

using namespace efg;

namespace {

BraneParams params(int m, double a, double eps = 1.0, double lambda = 0.3) {
    BraneParams p;
    p.m = m;
    p.a = a;
    p.eps = eps;
    p.lambda = lambda;
    p.M = 1.2;
    p.lP = 0.8;
    p.y5_max = 500.0 * eps;
    return p;
}

double curvature_oracle(double y, const BraneParams& p) {
    const double e2 = p.eps * p.eps, d = 3 * e2 + y * y;
    return 18.0 * e2 * (p.a - 1.0) * (e2 - y * y) / (d * d * d);
}

}  // namespace

TEST_CASE("brane profile normalization and asymptotics") {
    for (double a : {0.3, 1.0, 2.5})
        for (double eps : {0.5, 1.0, 3.0}) {
            auto p = params(2, a, eps);
            CHECK(std::fabs(phi_squared(0.0, p) - 1.0) < 1e-14);
            CHECK(std::fabs(p.lP * std::sqrt(hbar_profile(0.0, p)) - 1.0) < 1e-14);
            CHECK(std::fabs(phi_squared(100.0 * eps, p) - a) < 1e-3 * std::max(1.0, std::fabs(a)));
            CHECK(p.lP * std::sqrt(hbar_profile(std::sqrt(3.0) * eps, p)) == doctest::Approx(0.25).epsilon(1e-14));
            double prev = hbar_profile(0.0, p);
            for (double y = 0.1 * eps; y < 5 * eps; y += 0.1 * eps) {
                const double h = hbar_profile(y, p);
                CHECK(h < prev);
                prev = h;
            }
        }
}

TEST_CASE("phi^2 is inflected at the width while phi is not") {
    for (double a : {0.2, 3.0}) {
        auto p = params(3, a, 1.7);
        const auto f = expr_field(phi_squared_expr(p, ex::var(0)), 1);
        CHECK(std::fabs(f->local_jet(std::vector<double>{p.eps}, 2).d2(0, 0)) < 1e-10);
        for (double y : {0.0, 0.4, 2.5, 6.0})
            CHECK(f->local_jet(std::vector<double>{y}, 2).d2(0, 0) ==
                  doctest::Approx(curvature_oracle(y, p)).epsilon(1e-12).scale(1.0));
        CHECK(std::fabs(phi_second_derivative(p.eps, p)) > 1e-3);
    }
}

TEST_CASE("source values at the brane center and parity") {
    for (int m = 1; m <= 4; ++m)
        for (double a : {0.5, 1.0, 2.0}) {
            auto p = params(m, a, 1.3);
            const double expect = std::pow(p.M, m + 2) * (p.lambda - 2.0 * m * (m - 3 * a + 2) / (3 * p.eps * p.eps));
            CHECK(brane_sources(0.0, p).k1 == doctest::Approx(expect).epsilon(1e-13).scale(1.0));
            for (double y : {0.3, 1.1, 4.0}) {
                CHECK(brane_sources(-y, p).k1 == brane_sources(y, p).k1);
                CHECK(brane_sources(-y, p).k2 == brane_sources(y, p).k2);
            }
        }
    // a = 1, m = 1 removes the constant term of the K1 bracket.
    auto p = params(1, 1.0, 1.0, 0.0);
    CHECK(std::fabs(brane_sources(0.0, p).k1) < 1e-15);
}

TEST_CASE("m = 2 width relation") {
    CHECK(width_for_m2(1.0, 40.0 / 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(width_for_m2(2.0, 5.0) == doctest::Approx(4.0 * width_for_m2(1.0, 5.0)).epsilon(1e-14));
    CHECK(width_for_m2(1.0, 10.0) == doctest::Approx(width_for_m2(1.0, 5.0) / std::sqrt(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(width_for_m2(1.0, 0.0), ParameterError);
}

TEST_CASE("conservation diagnostic: exact derivatives against central differences") {
    const std::pair<int, double> cases[] = {{1, 0.5}, {2, 1.5}, {3, 2.0}, {4, 0.8}, {2, 1.0}};
    for (auto [m, a] : cases) {
        auto p = params(m, a, 0.9);
        CHECK(std::fabs(conservation_residual(0.0, p)) < 1e-10);
        for (int k = 0; k <= 40; ++k) {
            const double y = 10.0 * p.eps * k / 40.0;
            const double exact = conservation_residual(y, p);
            const double fd = conservation_residual_fd(y, p, 1e-4 * p.eps);
            CHECK(std::fabs(exact - fd) < 1e-6 * std::max(1.0, std::fabs(exact)));
        }
    }
    // a = 1: phi is constant, so only dK1/dy5 remains.
    auto p = params(2, 1.0);
    const auto k1 = expr_field(k1_expr(p, ex::var(0)), 1);
    CHECK(conservation_residual(0.7, p) == doctest::Approx(k1->local_jet(std::vector<double>{0.7}, 1).d(0)).epsilon(1e-14));
}

TEST_CASE("diagonal brane metric") {
    auto p = params(2, 1.7, 1.1);
    p.sigma7 = 1;
    auto metric = assemble_diagonal_brane(p);
    auto entries = diagonal_brane_entries(p);
    for (double y : {0.0, 0.5, 2.0}) {
        const std::vector<double> pt{0.1, 0.2, 0.3, 0.4, y, 0.5, 0.6, 0.7};
        const auto g = entries.values(pt);
        const double phi2 = phi_squared(y, p), fib = p.lP * p.lP * hbar_profile(y, p);
        CHECK(g(0, 0) == doctest::Approx(phi2).epsilon(1e-14));
        CHECK(g(1, 1) == doctest::Approx(-phi2).epsilon(1e-14));
        CHECK(g(4, 4) == doctest::Approx(-fib).epsilon(1e-14));
        CHECK(g(6, 6) == doctest::Approx(fib).epsilon(1e-14));  // sigma7 = +1
        CHECK(g(7, 7) == doctest::Approx(-fib).epsilon(1e-14));
        CHECK(g.determinant() == doctest::Approx(-std::pow(phi2, 4) * std::pow(fib, 4) * p.sigma7 * p.sigma8).epsilon(1e-12));
        // Profiles read back from the metric.
        CHECK(std::fabs(g(0, 0) - phi2) < 1e-13);
        CHECK(std::fabs(-g(5, 5) / (p.lP * p.lP) - hbar_profile(y, p)) < 1e-13 * std::max(1.0, hbar_profile(y, p)));
        if (y == 0.0) CHECK(std::fabs(-g(4, 4) - 1.0) < 1e-14);
    }
    const double r = levi_civita_residual_norm(p, 0.5);
    CHECK(std::isfinite(r));
}

TEST_CASE("brane parameter validation") {
    auto p = params(5, 1.0);
    CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("m <= 4"), ParameterError);
    p = params(2, 1.0);
    p.eps = -1;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = params(2, 1.0);
    CHECK_THROWS_AS(phi_squared(2 * p.y5_max, p), DomainError);
}

TEST_CASE("parameter scan flags the sign change of the central K1 bracket") {
    ScanSpec s;
    s.base = params(2, 1.0, 1.0, 0.0);
    s.m = {2};
    s.eps = {1.0};
    s.lambda = {0.0};
    s.M = {1.0};
    s.y5 = {0.0, 0.5};
    for (int k = 0; k < 8; ++k) s.a.push_back(1.0 + 0.1 * k);  // crossing at a = 4/3
    s.quantity = ScanQuantity::K1;
    auto t = parameter_scan(s);
    REQUIRE(t.rows.size() == 16);
    CHECK(t.columns[6] == "K1");
    int flagged = 0;
    for (const auto& row : t.rows)
        if (row[5] == 0.0 && row[8] == 1.0) {
            ++flagged;
            CHECK(row[3] > 4.0 / 3.0);
            CHECK(row[3] < 4.0 / 3.0 + 0.1 + 1e-12);
        }
    CHECK(flagged == 1);
    CHECK(to_csv(parameter_scan(s)) == to_csv(t));

    s.a.clear();
    auto empty = parameter_scan(s);
    CHECK(empty.rows.empty());
    CHECK(to_csv(empty) == "m,eps,Lambda,a,M,y5,K1,zero_y5,zero_param\n");
}

TEST_CASE("off-diagonal brane assembly") {
    std::mt19937_64 rng(97);
    auto gen = random_eight_d_set(rng);
    auto p = params(2, 1.4, 0.9);
    auto a = assemble_finsler_brane(gen, p);
    CHECK(a.lP == p.lP);
    auto r = certify_eight_d(a, probe_points({{-1, 1}, {-1, 1}, {0.1, 1.5}, {0.2, 1.2}, {0.2, 1.2}}, 3, 101));
    CHECK(r.max_residual < 1e-6);

    // Without N-coefficients the fiber block is the diagonal profile times the level coefficients.
    auto bare = a;
    for (auto* L : {&bare.level1, &bare.level2})
        for (int i = 0; i < 2; ++i) {
            L->w[static_cast<std::size_t>(i)] = zero_field(L->arity);
            L->n[static_cast<std::size_t>(i)] = zero_field(L->arity);
        }
    auto data = eight_d_sasaki(bare);
    const std::vector<double> pt{0.2, -0.3, 0.7, 0.1, 0.6, 0.2, 0.9, -0.4};
    const auto A = assemble_coordinate_metric(data, pt);
    const double scale = p.lP * p.lP * hbar_profile(0.6, p) / phi_squared(0.6, p);
    const std::vector<double> x5{0.2, -0.3, 0.6};
    CHECK(A(4, 4) == doctest::Approx(scale * bare.level1.ha->value(x5)).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
        for (int b = 4; b < 8; ++b) CHECK(A(i, b) == 0.0);
}
