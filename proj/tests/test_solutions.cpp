#include <doctest.h>

#include <cmath>
#include <random>

#include "efg/errors.hpp"
#include "efg/probes.hpp"
#include "efg/solutions.hpp"

using namespace efg;

namespace {

const std::vector<std::pair<double, double>> kBox{{-1, 1}, {-1, 1}, {0.1, 1.5}, {-1, 1}};

FieldPtr c2(double v) { return constant_field(2, v); }

std::vector<double> xv_of(const std::vector<double>& p) { return {p[0], p[1], p[2]}; }

// f = v, f0 = 0, no fiber source: h3 is constant and h4 = eps4 v^2.
GeneratingSet desk_set() {
    GeneratingSet g;
    g.psi = expr_field(0.3 * ex::sin(ex::var(0)) * ex::cos(ex::var(1)), 2, "psi");
    g.f = expr_field(ex::var(2), 3, "v");
    g.f0 = c2(0.0);
    g.h0 = c2(1.5);
    g.s0 = c2(2.0);
    g.w0 = {c2(0.0), c2(0.0)};
    g.n0 = {c2(0.2), c2(-0.1)};
    g.v_lambda = zero_field(3);
    return g;
}

std::vector<std::vector<double>> xv_samples(int count, unsigned seed) {
    std::vector<std::vector<double>> out;
    for (const auto& p : probe_points({{-1, 1}, {-1, 1}, {0.1, 1.5}}, count, seed)) out.push_back(p);
    return out;
}

}  // namespace

TEST_CASE("desk generating function gives constant h3 and h4 proportional to v^2") {
    const auto gen = desk_set();
    auto s = construct_killing_solution(gen, xv_samples(6, 3));
    CHECK(s.regime == Regime::Case1);
    for (const auto& p : probe_points(kBox, 8, 11)) {
        const auto xv = xv_of(p);
        const Jet h3 = s.ansatz.h3->local_jet(xv, 2);
        CHECK(h3.value() == doctest::Approx(-1.5 * 2.0).epsilon(1e-14));
        CHECK(std::fabs(h3.d(2)) < 1e-14);
        CHECK(s.ansatz.h4->value(xv) == doctest::Approx(-p[2] * p[2]).epsilon(1e-14));
    }
    auto r = certify_solution(s, probe_points(kBox, 8, 12), true);
    CHECK(r.equations.at(1).max < 1e-12);  // vv
    CHECK(r.max_residual < 1e-12);
    CHECK(r.agreement_gap < 1e-12);
}

TEST_CASE("vanishing fiber source keeps varsigma at its integration function") {
    std::mt19937_64 rng(5);
    auto gen = random_generating_set(rng);
    gen.v_lambda = zero_field(3);
    auto s = construct_killing_solution(gen);
    for (const auto& p : probe_points(kBox, 5, 13))
        CHECK(s.varsigma->value(xv_of(p)) == doctest::Approx(gen.s0->value(std::vector<double>{p[0], p[1]})).epsilon(1e-14));
}

TEST_CASE("varsigma matches the closed-form antiderivative for f = e^v") {
    const double lam = 0.03, h0 = 0.7, s0 = -1.2;
    GeneratingSet g = desk_set();
    g.f = expr_field(ex::exp(ex::var(2)), 3, "e^v");
    g.h0 = c2(h0);
    g.s0 = c2(s0);
    g.v_lambda = constant_field(3, lam);
    g.quad.abs_tol = g.quad.rel_tol = 1e-13;
    auto s = construct_killing_solution(g);
    const int eps_a = g.eps[2];
    for (double v : {0.2, 0.9, 1.4}) {
        const double I = lam * (std::exp(2 * v) - 1) / 2;
        const double expect = 1.0 / (1.0 / s0 + 2.0 * -1.0 * eps_a * h0 * I);
        CHECK(s.varsigma->value(std::vector<double>{0.3, -0.2, v}) == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("fiber cascade agrees with nested quadrature") {
    std::mt19937_64 rng(17);
    QuadOptions q;
    q.abs_tol = q.rel_tol = 1e-11;
    auto gen = random_generating_set(rng, q);
    auto s = construct_killing_solution(gen);
    const auto hp = construct_h_pair(gen.f, gen.f0, gen.h0, gen.s0, gen.v_lambda, gen.eps[2], gen.eps[3],
                                     gen.v_lower, q);
    const auto blocks = level_blocks(hp.ha, hp.hb, s.ansatz.g1, s.ansatz.g2, 3);
    const auto w = construct_w(blocks, gen.w0, gen.v_lower, q);
    const auto n = construct_n(blocks, gen.n0, gen.v_lower, q);
    const std::vector<double> p{0.3, -0.4, 0.8};
    CHECK(s.ansatz.h3->value(p) == doctest::Approx(expr_field(hp.ha, 3)->value(p)).epsilon(1e-9));
    for (int k = 0; k < 2; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        CHECK(s.ansatz.w[ks]->value(p) == doctest::Approx(expr_field(w[ks], 3)->value(p)).epsilon(1e-7).scale(1.0));
        CHECK(s.ansatz.n[ks]->value(p) == doctest::Approx(expr_field(n[ks], 3)->value(p)).epsilon(1e-7).scale(1.0));
    }
}

TEST_CASE("x-independent data leaves w at zero and n at its integration functions") {
    GeneratingSet g = desk_set();
    g.psi = c2(0.0);
    g.f = expr_field(0.1 * ex::var(2) + 0.4 * ex::exp(ex::var(2)), 3, "f");
    g.f0 = c2(0.4 - 0.6);
    g.v_lambda = constant_field(3, 0.002);
    auto s = construct_killing_solution(g);
    for (const auto& p : probe_points(kBox, 5, 19)) {
        const auto xv = xv_of(p);
        CHECK(std::fabs(s.ansatz.w[0]->value(xv)) < 1e-14);
        CHECK(std::fabs(s.ansatz.w[1]->value(xv)) < 1e-14);
        CHECK(s.ansatz.n[0]->value(xv) == doctest::Approx(0.2).epsilon(1e-14));
        CHECK(s.ansatz.n[1]->value(xv) == doctest::Approx(-0.1).epsilon(1e-14));
    }
    CHECK(certify_solution(s, probe_points(kBox, 4, 20), true).max_residual < 1e-12);
}

TEST_CASE("random Case-3 solutions certify at roundoff against both residual routes") {
    std::mt19937_64 rng(23);
    for (int inst = 0; inst < 3; ++inst) {
        auto s = construct_killing_solution(random_generating_set(rng), xv_samples(5, 30 + inst));
        CHECK(s.regime == Regime::Case3);
        auto r = certify_solution(s, probe_points(kBox, 4, 40 + inst), true);
        CHECK(r.max_residual < 1e-11);
        CHECK(r.agreement_gap < 1e-11);
        CHECK(r.other_components < 1e-11);
    }
}

TEST_CASE("N-coefficients built at looser tolerance leave residuals that shrink with it") {
    auto build = [](double tol) {
        std::mt19937_64 rng(29);
        QuadOptions q;
        q.abs_tol = q.rel_tol = tol;
        return construct_killing_solution(random_generating_set(rng, q));
    };
    const auto ref = build(1e-13);
    const auto pts = probe_points(kBox, 6, 31);
    double res[2];
    int i = 0;
    for (double tol : {1e-8, 1e-10}) {
        auto mixed = ref;
        const auto s = build(tol);
        mixed.ansatz.w = s.ansatz.w;
        mixed.ansatz.n = s.ansatz.n;
        res[i++] = certify_solution(mixed, pts, false).max_residual;
    }
    CHECK(res[0] < 1e-7);
    CHECK(res[0] / res[1] > 10.0);
    CHECK(res[0] / res[1] < 1000.0);
}

TEST_CASE("regime dispatch on prescribed profiles") {
    auto psi = c2(0.0);
    auto prof = [](Expr e) { return expr_field(e, 3); };
    const Expr v = ex::var(2);
    const auto samples = xv_samples(6, 41);
    CHECK(case_dispatch(prof(ex::num(1.0)), prof(v * v), zero_field(3), samples) == Regime::Case1);
    CHECK(case_dispatch(prof(v * v), prof(ex::num(1.0)), zero_field(3), samples) == Regime::Case2);
    CHECK(case_dispatch(prof(ex::exp(v)), prof(v * v), zero_field(3), samples) == Regime::Case3);
    CHECK_THROWS_AS(case_dispatch(prof(v * v), prof(ex::num(1.0)), constant_field(3, 0.1), samples), RegimeError);

    std::vector<std::vector<double>> straddle{{0.0, 0.2, 0.5}, {0.5, 0.2, 0.5}};
    CHECK_THROWS_AS(case_dispatch(prof(v * ex::var(0)), prof(v * v), zero_field(3), straddle), RegimeError);
    auto report = classify_regime(prof(v * ex::var(0)), prof(v * v), zero_field(3), straddle);
    CHECK(report.crossings.size() == 1);
}

TEST_CASE("first-regime profiles solve w algebraically") {
    const Expr x1 = ex::var(0), x2 = ex::var(1), v = ex::var(2);
    auto psi = expr_field(0.2 * x1 * x2, 2, "psi");
    auto h3 = expr_field(-1.0 - 0.3 * x1 * x1, 3, "h3");
    auto h4 = expr_field(-(v + 0.5 * x2 + 2.0) * (v + 0.5 * x2 + 2.0), 3, "h4");
    auto s = construct_from_profiles(psi, {1, -1, -1, -1}, h3, h4, zero_field(3), Regime::Case1,
                                     {c2(0.0), c2(0.0)}, {c2(0.1), c2(0.2)}, 0.0, {});
    auto r = certify_solution(s, probe_points(kBox, 3, 43), false);
    CHECK(r.max_residual < 1e-10);
}

TEST_CASE("certification detects perturbed N-coefficients") {
    KillingSolution flat;
    flat.ansatz.eps = {1, -1, -1, -1};
    flat.ansatz.g1 = c2(1.0);
    flat.ansatz.g2 = c2(-1.0);
    flat.ansatz.h3 = constant_field(3, -1.0);
    flat.ansatz.h4 = constant_field(3, -1.0);
    flat.ansatz.w = {zero_field(3), zero_field(3)};
    flat.ansatz.n = {zero_field(3), zero_field(3)};
    flat.h_lambda = zero_field(2);
    flat.v_lambda = zero_field(3);
    auto r = certify_solution(flat, probe_points(kBox, 4, 47), true);
    CHECK(r.max_residual == 0.0);
    CHECK(r.agreement_gap < 1e-14);

    std::mt19937_64 rng(53);
    auto s = construct_killing_solution(random_generating_set(rng));
    const auto pts = probe_points(kBox, 4, 59);
    auto bent = s;
    bent.ansatz.w[0] = expr_field(ex::call_on(s.ansatz.w[0], {0, 1, 2}) + 0.01, 3, "w1+");
    auto rb = certify_solution(bent, pts, false);
    CHECK(rb.equations.at(2).max > 1e-4);  // w1
    CHECK(rb.equations.at(0).max < 1e-12);  // hh
    CHECK(rb.equations.at(1).max < 1e-12);  // vv
}

TEST_CASE("shifting n by a constant keeps a solution") {
    std::mt19937_64 rng(61);
    auto gen = random_generating_set(rng);
    auto base = construct_killing_solution(gen);
    auto shifted_gen = gen;
    shifted_gen.n0 = {expr_field(ex::call_on(gen.n0[0], {0, 1}) + 0.7, 2), gen.n0[1]};
    auto shifted = construct_killing_solution(shifted_gen);
    const auto pts = probe_points(kBox, 4, 67);
    for (const auto& p : pts)
        CHECK(shifted.ansatz.n[0]->value(xv_of(p)) - base.ansatz.n[0]->value(xv_of(p)) ==
              doctest::Approx(0.7).epsilon(1e-12));
    CHECK(certify_solution(shifted, pts, true).max_residual < 1e-11);
}

TEST_CASE("background Poisson solver") {
    const Expr x = ex::var(0), y = ex::var(1);
    SUBCASE("quadratic data is reproduced exactly") {
        auto exact = expr_field(x * x + 0.5 * y * y + x * y, 2);
        PoissonGrid grid{-1, 1, -1, 1, 17, 17};
        auto sol = solve_background_psi(c2(3.0), 1, 1, grid, exact);
        double err = 0.0;
        for (int i = 0; i < grid.nx; ++i)
            for (int j = 0; j < grid.ny; ++j)
                err = std::max(err, std::fabs(sol.psi(i, j) - exact->value(std::vector<double>{sol.x(i), sol.y(j)})));
        CHECK(err < 1e-10);
        CHECK(sol.residual < 1e-9);
    }
    SUBCASE("smooth data converges at second order") {
        auto exact = expr_field(ex::sin(x) * ex::exp(y) + ex::cos(2.0 * y) * x, 2);
        auto rhs = expr_field(-4.0 * ex::cos(2.0 * y) * x, 2);
        double errs[2];
        int k = 0;
        for (int nodes : {17, 33}) {
            PoissonGrid grid{0, 1, 0, 1, nodes, nodes};
            auto sol = solve_background_psi(rhs, 1, 1, grid, exact);
            double err = 0.0;
            for (int i = 0; i < nodes; ++i)
                for (int j = 0; j < nodes; ++j)
                    err = std::max(err, std::fabs(sol.psi(i, j) - exact->value(std::vector<double>{sol.x(i), sol.y(j)})));
            errs[k++] = err;
        }
        CHECK(errs[1] < 1e-3);
        CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.25));
    }
    SUBCASE("bad grids are rejected") {
        PoissonGrid grid{0, 1, 0, 1, 2, 9};
        CHECK_THROWS(solve_background_psi(c2(0.0), 1, 1, grid, c2(0.0)));
    }
}

TEST_CASE("background check and the induced h-source") {
    const Expr x = ex::var(0), y = ex::var(1);
    auto psi = expr_field(ex::sin(x) * (ex::exp(y) - ex::exp(-y)) / 2.0, 2, "sin sinh");
    std::vector<std::vector<double>> grid;
    for (double a : {-1.0, 0.0, 0.7})
        for (double b : {-0.5, 0.4, 1.1}) grid.push_back({a, b});
    CHECK(verify_background_psi(psi, 1, 1, zero_field(2), grid).max_residual < 1e-14);
    auto off = verify_background_psi(psi, 1, 1, c2(1.0), grid);
    CHECK(off.max_residual == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(off.worst_point.size() == 2);

    auto quad = expr_field(x * x, 2);
    auto hl = background_h_lambda(quad, 1, -1);
    const std::vector<double> p{0.4, 0.1};
    CHECK(hl->value(p) == doctest::Approx(2.0 / (2.0 * std::exp(0.16))).epsilon(1e-14));
}

TEST_CASE("8-d desk levels and the fibered coordinate metric") {
    EightDGeneratingSet g;
    g.base = desk_set();
    g.base_samples = xv_samples(4, 71);
    auto level = [](int arity, double h0, double s0) {
        FiberLevelData d;
        d.f = expr_field(ex::var(arity - 1), arity, "y");
        d.f0 = c2(0.0);
        d.h0 = c2(h0);
        d.s0 = c2(s0);
        d.lambda = zero_field(arity);
        d.w0 = {c2(0.0), c2(0.0)};
        d.n0 = {c2(0.3), c2(-0.2)};
        std::vector<std::pair<double, double>> box{{-1, 1}, {-1, 1}};
        for (int k = 2; k < arity; ++k) box.push_back({0.2, 1.5});
        d.samples = probe_points(box, 4, 73 + arity);
        return d;
    };
    g.level1 = level(3, 1.0, 1.0);
    g.level2 = level(4, 2.0, 0.5);
    auto a = extend_8d(g);
    CHECK(a.level1.regime == Regime::Case1);
    const std::vector<double> q5{0.1, 0.2, 0.9};
    CHECK(a.level1.ha->value(q5) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(a.level1.hb->value(q5) == doctest::Approx(-0.81).epsilon(1e-14));
    auto r = certify_eight_d(a, probe_points({{-1, 1}, {-1, 1}, {0.1, 1.5}, {0.2, 1.5}, {0.2, 1.5}}, 3, 79));
    CHECK(r.max_residual < 1e-12);

    std::mt19937_64 rng(83);
    auto rg = random_eight_d_set(rng);
    auto ra = extend_8d(rg);
    ra.lP = 1.3;
    ra.phi2 = expr_field(1.0 + 0.5 * ex::var(0) * ex::var(0), 1, "phi2");
    ra.hbar = expr_field(2.0 - 0.1 * ex::var(0), 1, "hbar");
    auto data = eight_d_sasaki(ra);
    for (const auto& p : probe_points({{-1, 1}, {-1, 1}, {0.1, 1.5}, {-1, 1}, {0.2, 1.2}, {-1, 1}, {0.2, 1.2}, {-1, 1}},
                                      3, 89)) {
        const auto A = assemble_coordinate_metric(data, p);
        const std::vector<double> xv{p[0], p[1], p[2]}, x5{p[0], p[1], p[4]}, x57{p[0], p[1], p[4], p[6]};
        const auto& k = ra.base.ansatz;
        const double scale = ra.hbar->value(std::vector<double>{p[4]}) / ra.phi2->value(std::vector<double>{p[4]});
        const double h[4] = {ra.level1.ha->value(x5), ra.level1.hb->value(x5), ra.level2.ha->value(x57),
                             ra.level2.hb->value(x57)};
        for (int i = 0; i < 2; ++i)
            for (int j = i; j < 2; ++j) {
                const auto is = static_cast<std::size_t>(i), js = static_cast<std::size_t>(j);
                double e = k.w[is]->value(xv) * k.w[js]->value(xv) * k.h3->value(xv) +
                           k.n[is]->value(xv) * k.n[js]->value(xv) * k.h4->value(xv);
                if (i == j) e += (i == 0 ? k.g1 : k.g2)->value(std::vector<double>{p[0], p[1]});
                const double N[2][4] = {
                    {ra.level1.w[0]->value(x5), ra.level1.n[0]->value(x5), ra.level2.w[0]->value(x57),
                     ra.level2.n[0]->value(x57)},
                    {ra.level1.w[1]->value(x5), ra.level1.n[1]->value(x5), ra.level2.w[1]->value(x57),
                     ra.level2.n[1]->value(x57)}};
                for (int b = 0; b < 4; ++b) e += ra.lP * ra.lP * scale * h[b] * N[i][b] * N[j][b];
                CHECK(A(i, j) == doctest::Approx(e).epsilon(1e-12).scale(1.0));
            }
        auto back = recover_blocks(A, 4, ra.lP);
        const auto direct = assemble_coordinate_metric(data, p);
        CHECK((back.g - data.blocks.g.values(p)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back.h - data.blocks.h.values(p)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((back.N - data.nconn.values(p)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((direct - A).cwiseAbs().maxCoeff() == 0.0);
    }
}
