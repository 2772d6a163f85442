#include "efg/solutions.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

#include "efg/cascade.hpp"
#include "efg/errors.hpp"
#include "efg/random_fields.hpp"

namespace efg {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::Case1: return "case1";
        case Regime::Case2: return "case2";
        case Regime::Case3: return "case3";
    }
    return "unknown";
}

namespace {

Expr on_x(const FieldPtr& f) { return ex::call_on(f, {0, 1}); }

Expr on_all(const FieldPtr& f) {
    std::vector<int> c(static_cast<std::size_t>(f->arity()));
    for (int k = 0; k < f->arity(); ++k) c[static_cast<std::size_t>(k)] = k;
    return ex::call_on(f, c);
}

void need(const FieldPtr& f, int arity, const std::string& what) {
    if (!f) throw ShapeError("missing " + what);
    if (f->arity() != arity) throw ShapeError(what + " must take " + std::to_string(arity) + " arguments");
}

void need_sign(int e) {
    if (e != 1 && e != -1) throw ParameterError("signature signs must be +1 or -1");
}

std::vector<double> head(std::span<const double> p, std::size_t k) { return {p.begin(), p.begin() + static_cast<long>(k)}; }

}  // namespace

// -------------------------------------------------------------------------------------------

BackgroundReport verify_background_psi(const FieldPtr& psi, int eps1, int eps2, const FieldPtr& h_lambda,
                                       const std::vector<std::vector<double>>& grid) {
    need(psi, 2, "psi");
    need(h_lambda, 2, "hLambda");
    BackgroundReport r;
    for (const auto& p : grid) {
        const Jet j = psi->local_jet(p, 2);
        const double res = std::fabs(eps1 * j.d2(0, 0) + eps2 * j.d2(1, 1) - h_lambda->value(p));
        if (res > r.max_residual || r.worst_point.empty()) {
            r.max_residual = std::max(r.max_residual, res);
            r.worst_point = p;
        }
    }
    return r;
}

FieldPtr background_h_lambda(const FieldPtr& psi, int eps1, int eps2) {
    need(psi, 2, "psi");
    need_sign(eps1);
    need_sign(eps2);
    const Expr P = on_x(psi);
    const Expr lap = static_cast<double>(eps1) * differentiate(differentiate(P, 0), 0) +
                     static_cast<double>(eps2) * differentiate(differentiate(P, 1), 1);
    return expr_field(lap / (2.0 * ex::exp(P)), 2, "hLambda");
}

PoissonSolution solve_background_psi(const FieldPtr& rhs, int eps1, int eps2, const PoissonGrid& grid,
                                     const FieldPtr& boundary) {
    need(rhs, 2, "Poisson right-hand side");
    need(boundary, 2, "Poisson boundary data");
    need_sign(eps1);
    need_sign(eps2);
    if (grid.nx < 3 || grid.ny < 3) throw ParameterError("Poisson grid needs at least 3 nodes per direction");
    if (!(grid.x1 > grid.x0 && grid.y1 > grid.y0)) throw ParameterError("Poisson grid needs a non-empty rectangle");
    if (!(grid.tolerance > 0.0)) throw ParameterError("Poisson tolerance must be positive");

    PoissonSolution sol;
    sol.grid = grid;
    const int mx = grid.nx - 2, my = grid.ny - 2;
    const double hx = (grid.x1 - grid.x0) / (grid.nx - 1), hy = (grid.y1 - grid.y0) / (grid.ny - 1);
    const double cx = eps1 / (hx * hx), cy = eps2 / (hy * hy);
    sol.psi = Eigen::MatrixXd::Zero(grid.nx, grid.ny);
    for (int i = 0; i < grid.nx; ++i)
        for (int j = 0; j < grid.ny; ++j)
            if (i == 0 || j == 0 || i == grid.nx - 1 || j == grid.ny - 1)
                sol.psi(i, j) = boundary->value(std::vector<double>{sol.x(i), sol.y(j)});

    auto id = [&](int i, int j) { return (i - 1) * my + (j - 1); };
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::VectorXd b(mx * my);
    for (int i = 1; i <= mx; ++i)
        for (int j = 1; j <= my; ++j) {
            const int r = id(i, j);
            double rb = rhs->value(std::vector<double>{sol.x(i), sol.y(j)});
            trip.emplace_back(r, r, -2.0 * (cx + cy));
            const int ni[4] = {i - 1, i + 1, i, i};
            const int nj[4] = {j, j, j - 1, j + 1};
            const double c[4] = {cx, cx, cy, cy};
            for (int k = 0; k < 4; ++k) {
                if (ni[k] == 0 || nj[k] == 0 || ni[k] == grid.nx - 1 || nj[k] == grid.ny - 1)
                    rb -= c[k] * sol.psi(ni[k], nj[k]);
                else
                    trip.emplace_back(r, id(ni[k], nj[k]), c[k]);
            }
            b(r) = rb;
        }
    Eigen::SparseMatrix<double> A(mx * my, mx * my);
    A.setFromTriplets(trip.begin(), trip.end());
    Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> solver;
    solver.setTolerance(grid.tolerance);
    solver.setMaxIterations(grid.max_iterations);
    solver.compute(A);
    if (solver.info() != Eigen::Success) throw ConvergenceError("Poisson preconditioner setup failed");
    Eigen::VectorXd u = solver.solve(b);
    if (solver.info() != Eigen::Success)
        throw ConvergenceError("Poisson solve did not converge in " + std::to_string(solver.iterations()) +
                               " iterations");
    sol.iterations = static_cast<int>(solver.iterations());
    for (int i = 1; i <= mx; ++i)
        for (int j = 1; j <= my; ++j) sol.psi(i, j) = u(id(i, j));
    const Eigen::VectorXd res = A * u - b;
    sol.residual = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    return sol;
}

// -------------------------------------------------------------------------------------------

LevelBlocks level_blocks(Expr ha, Expr hb, FieldPtr g1, FieldPtr g2, int arity) {
    need(g1, 2, "g1");
    need(g2, 2, "g2");
    if (arity < 3) throw ShapeError("a fiber level needs at least (x1, x2, s)");
    const int s = arity - 1;
    LevelBlocks b;
    b.arity = arity;
    b.g1 = g1;
    b.g2 = g2;
    b.ha = ha;
    b.hb = hb;
    const Expr has = differentiate(ha, s), hbs = differentiate(hb, s);
    b.A = has / (2.0 * ha) + hbs / (2.0 * hb);
    const Expr G1 = on_x(g1), G2 = on_x(g2);
    for (int k = 0; k < 2; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        b.B[ks] = hbs / (2.0 * hb) * (differentiate(G1, k) / (2.0 * G1) - differentiate(G2, k) / (2.0 * G2)) -
                  differentiate(b.A, k);
    }
    const Expr g1p = differentiate(G1, 1), g2b = differentiate(G2, 0);
    b.half_hbs_K[0] = g1p / (4.0 * ha) * (has / G1 - hbs / G2);
    b.half_hbs_K[1] = g2b / (4.0 * ha) * (hbs / G2 - has / G1);
    for (int k = 0; k < 2; ++k) b.K[static_cast<std::size_t>(k)] = 2.0 * b.half_hbs_K[static_cast<std::size_t>(k)] / hbs;
    return b;
}

HPair construct_h_pair(const FieldPtr& f, const FieldPtr& f0, const FieldPtr& h0, const FieldPtr& s0,
                       const FieldPtr& lambda, int eps_a, int eps_b, double lower, const QuadOptions& quad) {
    if (!f) throw ShapeError("missing generating function");
    const int m = f->arity();
    if (m < 3) throw ShapeError("generating function needs at least (x1, x2, s)");
    need(f0, 2, "f0");
    need(h0, 2, "h0");
    need(s0, 2, "varsigma0");
    need(lambda, m, "fiber source");
    need_sign(eps_a);
    need_sign(eps_b);
    const int s = m - 1;
    const Expr F = on_all(f), Fs = differentiate(F, s);
    const Expr dev = F - on_x(f0);
    const Expr H0 = on_x(h0), S0 = on_x(s0);
    HPair r;
    if (lambda->is_zero()) {
        r.varsigma = S0;
        r.varsigma_integral = zero_field(m);
    } else {
        const Expr integrand = on_all(lambda) * Fs * dev;
        r.varsigma_integral = cumulative_integral(expr_field(integrand, m, "varsigma-integrand"), s, lower, quad);
        const Expr sgn = S0 / ex::abs(S0);
        r.varsigma = 1.0 / (1.0 / S0 + 2.0 * static_cast<double>(eps_a) * sgn * H0 * on_all(r.varsigma_integral));
    }
    r.ha = static_cast<double>(eps_a) * H0 * Fs * Fs * ex::abs(r.varsigma);
    r.hb = static_cast<double>(eps_b) * dev * dev;
    return r;
}

std::array<Expr, 2> construct_w(const LevelBlocks& b, const std::array<FieldPtr, 2>& w0, double lower,
                                const QuadOptions& quad) {
    const int m = b.arity, s = m - 1;
    const Expr has = differentiate(b.ha, s);
    const Expr P = 2.0 * b.ha * differentiate(b.A, s) / has;
    const FieldPtr Phi = cumulative_integral(expr_field(P, m, "w-exponent"), s, lower, quad);
    const Expr PhiE = on_all(Phi);
    std::array<Expr, 2> w;
    for (int j = 0; j < 2; ++j) {
        const auto js = static_cast<std::size_t>(j);
        need(w0[js], 2, "w0");
        const Expr Q = 2.0 * b.ha * b.B[js] / has;
        Expr inner = on_x(w0[js]);
        if (!ex::is_const(Q, 0.0)) {
            const FieldPtr J = cumulative_integral(expr_field(Q * ex::exp(PhiE), m, "w-source"), s, lower, quad);
            inner = inner - on_all(J);
        }
        w[js] = ex::exp(-PhiE) * inner;
    }
    return w;
}

std::array<Expr, 2> construct_w_algebraic(const LevelBlocks& b) {
    const Expr As = differentiate(b.A, b.arity - 1);
    return {-b.B[0] / As, -b.B[1] / As};
}

std::array<Expr, 2> construct_n(const LevelBlocks& b, const std::array<FieldPtr, 2>& n0, double lower,
                                const QuadOptions& quad) {
    const int m = b.arity, s = m - 1;
    std::array<Expr, 2> n;
    for (int i = 0; i < 2; ++i) {
        const auto is = static_cast<std::size_t>(i);
        need(n0[is], 2, "n0");
        // ha K_i = ha (hb*/2 K_i) * 2 / hb*
        const Expr integrand = b.ha * b.K[is];
        n[is] = on_x(n0[is]);
        if (!ex::is_const(integrand, 0.0))
            n[is] = n[is] + on_all(cumulative_integral(expr_field(integrand, m, "n-source"), s, lower, quad));
    }
    return n;
}

// -------------------------------------------------------------------------------------------

RegimeReport classify_regime(const FieldPtr& ha, const FieldPtr& hb, const FieldPtr& lambda,
                             const std::vector<std::vector<double>>& samples, double zero_tol) {
    if (!ha || !hb || ha->arity() != hb->arity()) throw ShapeError("regime check needs two fields of equal arity");
    const int s = ha->arity() - 1;
    RegimeReport r;
    bool first = true;
    for (const auto& p : samples) {
        const Jet a = ha->local_jet(p, 1), b = hb->local_jet(p, 1);
        const bool a0 = std::fabs(a.d(s)) <= zero_tol * std::max(1.0, std::fabs(a.value()));
        const bool b0 = std::fabs(b.d(s)) <= zero_tol * std::max(1.0, std::fabs(b.value()));
        Regime tag = b0 ? Regime::Case2 : (a0 ? Regime::Case1 : Regime::Case3);
        if (tag == Regime::Case2 && lambda && std::fabs(lambda->value(p)) > zero_tol)
            throw RegimeError("hb* = 0 is only consistent with a vanishing fiber source", p);
        if (first) {
            r.regime = tag;
            first = false;
        } else if (tag != r.regime) {
            r.crossings.push_back(p);
        }
    }
    return r;
}

Regime case_dispatch(const FieldPtr& ha, const FieldPtr& hb, const FieldPtr& lambda,
                     const std::vector<std::vector<double>>& samples, double zero_tol) {
    auto r = classify_regime(ha, hb, lambda, samples, zero_tol);
    if (!r.crossings.empty()) {
        std::vector<double> flat;
        for (const auto& p : r.crossings) flat.insert(flat.end(), p.begin(), p.end());
        throw RegimeError("solution regime changes across the sample grid (" + std::to_string(r.crossings.size()) +
                              " points differ from " + to_string(r.regime) + ")",
                          flat);
    }
    return r.regime;
}

double LevelResiduals::max() const {
    double m = std::fabs(vv);
    for (int i = 0; i < 2; ++i)
        m = std::max({m, std::fabs(w[static_cast<std::size_t>(i)]), std::fabs(n[static_cast<std::size_t>(i)])});
    return m;
}

LevelResiduals level_residuals(const FieldPtr& g1, const FieldPtr& g2, const FieldPtr& ha, const FieldPtr& hb,
                               const std::array<FieldPtr, 2>& w, const std::array<FieldPtr, 2>& n,
                               const FieldPtr& lambda, std::span<const double> point) {
    const int m = static_cast<int>(point.size());
    need(g1, 2, "g1");
    need(g2, 2, "g2");
    need(ha, m, "ha");
    need(hb, m, "hb");
    need(lambda, m, "fiber source");
    static const int map[2] = {0, 1};
    const auto x = head(point, 2);
    LevelJets j;
    j.fiber = m - 1;
    j.g1 = embed(g1->local_jet(x, 2), m, map);
    j.g2 = embed(g2->local_jet(x, 2), m, map);
    j.h3 = ha->local_jet(point, 2);
    j.h4 = hb->local_jet(point, 2);
    for (int i = 0; i < 2; ++i) {
        const auto is = static_cast<std::size_t>(i);
        need(w[is], m, "w");
        need(n[is], m, "n");
        j.w[is] = w[is]->local_jet(point, 1);
        j.n[is] = n[is]->local_jet(point, 1);
    }
    const auto d = decoupled_residuals(j, 0.0, lambda->value(point));
    return {d.vv, d.w, d.n};
}

// -------------------------------------------------------------------------------------------

namespace {

FieldPtr conformal_g(const FieldPtr& psi, int eps) {
    return expr_field(static_cast<double>(eps) * ex::exp(on_x(psi)), 2, eps > 0 ? "e^psi" : "-e^psi");
}

std::array<FieldPtr, 2> as_fields(const std::array<Expr, 2>& e, int arity, const char* name) {
    return {expr_field(e[0], arity, std::string(name) + "1"), expr_field(e[1], arity, std::string(name) + "2")};
}

FiberLevelSpec level_spec(const FieldPtr& f, const FieldPtr& f0, const FieldPtr& h0, const FieldPtr& s0,
                          const FieldPtr& lambda, const std::array<FieldPtr, 2>& w0,
                          const std::array<FieldPtr, 2>& n0, const FieldPtr& g1, const FieldPtr& g2, int eps_a,
                          int eps_b, double lower, const QuadOptions& quad) {
    FiberLevelSpec sp;
    sp.f = f;
    sp.f0 = f0;
    sp.h0 = h0;
    sp.s0 = s0;
    sp.lambda = lambda;
    sp.w0 = w0;
    sp.n0 = n0;
    sp.g1 = g1;
    sp.g2 = g2;
    sp.eps_a = eps_a;
    sp.eps_b = eps_b;
    sp.lower = lower;
    sp.tolerance = quad;
    return sp;
}

}  // namespace

KillingSolution construct_killing_solution(const GeneratingSet& gen, const std::vector<std::vector<double>>& samples) {
    for (int e : gen.eps) need_sign(e);
    need(gen.psi, 2, "psi");
    need(gen.v_lambda, 3, "vLambda");
    KillingSolution s;
    s.ansatz.eps = gen.eps;
    s.ansatz.g1 = conformal_g(gen.psi, gen.eps[0]);
    s.ansatz.g2 = conformal_g(gen.psi, gen.eps[1]);
    s.h_lambda = gen.h_lambda ? gen.h_lambda : background_h_lambda(gen.psi, gen.eps[0], gen.eps[1]);
    need(s.h_lambda, 2, "hLambda");
    s.v_lambda = gen.v_lambda;

    auto spec = level_spec(gen.f, gen.f0, gen.h0, gen.s0, gen.v_lambda, gen.w0, gen.n0, s.ansatz.g1, s.ansatz.g2,
                           gen.eps[2], gen.eps[3], gen.v_lower, gen.quad);
    s.regime = Regime::Case3;
    if (!samples.empty()) {
        // The algebraic mode never divides by ha*, so it can be probed in any regime.
        spec.algebraic_w = true;
        const auto probe = integrate_level(spec);
        s.regime = case_dispatch(probe.ha, probe.hb, gen.v_lambda, samples);
        if (s.regime == Regime::Case2)
            throw RegimeError("generating function gives case2; use the profile route");
        spec.algebraic_w = s.regime == Regime::Case1;
    }
    const auto lv = integrate_level(spec);
    s.ansatz.h3 = lv.ha;
    s.ansatz.h4 = lv.hb;
    s.varsigma = lv.varsigma;
    s.blocks = level_blocks(on_all(lv.ha), on_all(lv.hb), s.ansatz.g1, s.ansatz.g2, 3);
    s.ansatz.w = lv.w;
    s.ansatz.n = lv.n;
    return s;
}

KillingSolution construct_from_profiles(const FieldPtr& psi, std::array<int, 4> eps, const FieldPtr& h3,
                                        const FieldPtr& h4, const FieldPtr& v_lambda, Regime regime,
                                        const std::array<FieldPtr, 2>& w0, const std::array<FieldPtr, 2>& n0,
                                        double lower, const QuadOptions& quad) {
    for (int e : eps) need_sign(e);
    need(psi, 2, "psi");
    need(h3, 3, "h3");
    need(h4, 3, "h4");
    need(v_lambda, 3, "vLambda");
    KillingSolution s;
    s.regime = regime;
    s.ansatz.eps = eps;
    s.ansatz.g1 = conformal_g(psi, eps[0]);
    s.ansatz.g2 = conformal_g(psi, eps[1]);
    s.h_lambda = background_h_lambda(psi, eps[0], eps[1]);
    s.v_lambda = v_lambda;
    s.ansatz.h3 = h3;
    s.ansatz.h4 = h4;
    s.blocks = level_blocks(on_all(h3), on_all(h4), s.ansatz.g1, s.ansatz.g2, 3);
    switch (regime) {
        case Regime::Case1:
            s.ansatz.w = as_fields(construct_w_algebraic(s.blocks), 3, "w");
            s.ansatz.n = as_fields(construct_n(s.blocks, n0, lower, quad), 3, "n");
            break;
        case Regime::Case2:
            // hb* = 0: the n-equation is empty, so n keeps its integration functions.
            s.ansatz.w = as_fields(construct_w(s.blocks, w0, lower, quad), 3, "w");
            s.ansatz.n = {embed_field(n0[0], 3, {0, 1}), embed_field(n0[1], 3, {0, 1})};
            break;
        case Regime::Case3:
            s.ansatz.w = as_fields(construct_w(s.blocks, w0, lower, quad), 3, "w");
            s.ansatz.n = as_fields(construct_n(s.blocks, n0, lower, quad), 3, "n");
            break;
    }
    return s;
}

// -------------------------------------------------------------------------------------------

namespace {

// Generating data for one level over (x1, x2, [y5,] s) with s the last coordinate:
// f = sg (b s + c(x) e^{k s}) + m(x) has f* and f** of the same sign, and
// f0 = f(x, 0) - sg delta(x) keeps f - f0 away from zero for s >= 0. With delta a moderate
// multiple of c the w-equation is damped, so w stays of order one.
// The source has sign -eps_a so that |varsigma| stays finite and ha* keeps its sign.
FiberLevelData random_level(std::mt19937_64& rng, int arity, int eps_a) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const std::vector<int> x{0, 1};
    std::vector<int> all;
    for (int k = 0; k < arity; ++k) all.push_back(k);
    const int s = arity - 1;
    const double sg = U(rng) < 0.5 ? -1.0 : 1.0;
    const double slope = 0.05 + 0.1 * U(rng);
    const double k = 0.8 + 0.4 * U(rng);
    const Expr c = (0.3 + 0.2 * U(rng)) * random_smooth(rng, x, 1.0, 0.3);
    const Expr mx = random_smooth(rng, x, 0.0, 0.5);
    const Expr delta = c * random_smooth(rng, x, 2.0, 0.3);

    FiberLevelData d;
    d.f = expr_field(sg * (slope * ex::var(s) + c * ex::exp(k * ex::var(s))) + mx, arity, "f");
    d.f0 = expr_field(sg * c + mx - sg * delta, 2, "f0");
    d.h0 = expr_field(random_signed(rng, x, 1), 2, "h0");
    d.s0 = expr_field(random_signed(rng, x, U(rng) < 0.5 ? -1 : 1), 2, "varsigma0");
    d.lambda = expr_field(static_cast<double>(-eps_a) * 0.004 * random_signed(rng, all, 1), arity, "Lambda");
    for (int i = 0; i < 2; ++i) {
        d.w0[static_cast<std::size_t>(i)] = expr_field(random_smooth(rng, x, 0.0, 0.5), 2, "w0");
        d.n0[static_cast<std::size_t>(i)] = expr_field(random_smooth(rng, x, 0.0, 0.5), 2, "n0");
    }
    return d;
}

}  // namespace

GeneratingSet random_generating_set(std::mt19937_64& rng, const QuadOptions& quad) {
    GeneratingSet g;
    g.psi = expr_field(random_smooth(rng, {0, 1}, 0.0, 0.5), 2, "psi");
    auto lvl = random_level(rng, 3, g.eps[2]);
    g.f = lvl.f;
    g.f0 = lvl.f0;
    g.h0 = lvl.h0;
    g.s0 = lvl.s0;
    g.v_lambda = lvl.lambda;
    g.w0 = lvl.w0;
    g.n0 = lvl.n0;
    g.quad = quad;
    return g;
}

EightDGeneratingSet random_eight_d_set(std::mt19937_64& rng, const QuadOptions& quad) {
    EightDGeneratingSet g;
    g.base = random_generating_set(rng, quad);
    g.level1 = random_level(rng, 3, g.eps_fiber[0]);
    g.level2 = random_level(rng, 4, g.eps_fiber[2]);
    return g;
}

namespace {

LevelSolution solve_level(const FiberLevelData& d, int eps_a, int eps_b, const FieldPtr& g1, const FieldPtr& g2,
                          double lower, const QuadOptions& quad) {
    if (!d.f) throw ShapeError("missing fiber generating function");
    LevelSolution L;
    L.arity = d.f->arity();
    L.lambda = d.lambda;
    auto spec = level_spec(d.f, d.f0, d.h0, d.s0, d.lambda, d.w0, d.n0, g1, g2, eps_a, eps_b, lower, quad);
    L.regime = Regime::Case3;
    if (!d.samples.empty()) {
        spec.algebraic_w = true;
        const auto probe = integrate_level(spec);
        L.regime = case_dispatch(probe.ha, probe.hb, d.lambda, d.samples);
        if (L.regime == Regime::Case2) throw RegimeError("fiber generating function gives case2");
        spec.algebraic_w = L.regime == Regime::Case1;
    }
    const auto lv = integrate_level(spec);
    L.ha = lv.ha;
    L.hb = lv.hb;
    L.varsigma = lv.varsigma;
    L.blocks = level_blocks(on_all(lv.ha), on_all(lv.hb), g1, g2, L.arity);
    L.w = lv.w;
    L.n = lv.n;
    return L;
}

}  // namespace

EightDAnsatz extend_8d(const EightDGeneratingSet& gen) {
    for (int e : gen.eps_fiber) need_sign(e);
    if (!gen.level1.f || gen.level1.f->arity() != 3) throw ShapeError("first fiber level lives on (x1, x2, y5)");
    if (!gen.level2.f || gen.level2.f->arity() != 4) throw ShapeError("second fiber level lives on (x1, x2, y5, y7)");
    EightDAnsatz a;
    a.base = construct_killing_solution(gen.base, gen.base_samples);
    a.level1 = solve_level(gen.level1, gen.eps_fiber[0], gen.eps_fiber[1], a.base.ansatz.g1, a.base.ansatz.g2,
                           gen.base.v_lower, gen.base.quad);
    a.level2 = solve_level(gen.level2, gen.eps_fiber[2], gen.eps_fiber[3], a.base.ansatz.g1, a.base.ansatz.g2,
                           gen.base.v_lower, gen.base.quad);
    return a;
}

SasakiData eight_d_sasaki(const EightDAnsatz& a) {
    const auto& k = a.base.ansatz;
    validate(k);
    constexpr int D = 8;
    const std::vector<int> xs{0, 1}, xv{0, 1, 2}, l1{0, 1, 4}, l2{0, 1, 4, 6};
    const Expr g1 = ex::call_on(k.g1, xs), g2 = ex::call_on(k.g2, xs);
    const Expr h3 = ex::call_on(k.h3, xv), h4 = ex::call_on(k.h4, xv);
    std::array<Expr, 2> w, n;
    for (int i = 0; i < 2; ++i) {
        w[static_cast<std::size_t>(i)] = ex::call_on(k.w[static_cast<std::size_t>(i)], xv);
        n[static_cast<std::size_t>(i)] = ex::call_on(k.n[static_cast<std::size_t>(i)], xv);
    }
    // Coordinate form of the 4-d Killing metric on (x1, x2, v, y4).
    SymmetricFields g(4, D);
    const Expr gd[2] = {g1, g2};
    for (int i = 0; i < 2; ++i)
        for (int j = i; j < 2; ++j) {
            Expr e = w[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j)] * h3 +
                     n[static_cast<std::size_t>(i)] * n[static_cast<std::size_t>(j)] * h4;
            if (i == j) e = gd[i] + e;
            g.set(i, j, expr_field(e, D, "gK"));
        }
    for (int i = 0; i < 2; ++i) {
        g.set(i, 2, expr_field(w[static_cast<std::size_t>(i)] * h3, D, "gK"));
        g.set(i, 3, expr_field(n[static_cast<std::size_t>(i)] * h4, D, "gK"));
    }
    g.set(2, 2, expr_field(h3, D, "h3"));
    g.set(2, 3, zero_field(D));
    g.set(3, 3, expr_field(h4, D, "h4"));

    // Fiber block: (hbar / phi2) times the level coefficients.
    Expr scale = ex::num(1.0);
    if (a.hbar) scale = scale * ex::call_on(a.hbar, {4});
    if (a.phi2) scale = scale / ex::call_on(a.phi2, {4});
    SymmetricFields h(4, D);
    const FieldPtr diag[4] = {a.level1.ha, a.level1.hb, a.level2.ha, a.level2.hb};
    for (int i = 0; i < 4; ++i)
        for (int j = i; j < 4; ++j) h.set(i, j, zero_field(D));
    for (int i = 0; i < 4; ++i) h.set(i, i, expr_field(scale * ex::call_on(diag[i], i < 2 ? l1 : l2), D, "hfib"));

    NConnection N = NConnection::zero(4, D);
    for (int i = 0; i < 2; ++i) {
        const auto is = static_cast<std::size_t>(i);
        N.set(i, 0, embed_field(a.level1.w[is], D, l1));
        N.set(i, 1, embed_field(a.level1.n[is], D, l1));
        N.set(i, 2, embed_field(a.level2.w[is], D, l2));
        N.set(i, 3, embed_field(a.level2.n[is], D, l2));
    }
    return make_sasaki(g, h, N, a.lP);
}

// -------------------------------------------------------------------------------------------

namespace {

struct Accumulator {
    std::vector<EquationStats> eq;
    void add(std::size_t k, const std::string& name, double v) {
        if (eq.size() <= k) eq.resize(k + 1);
        eq[k].name = name;
        eq[k].max = std::max(eq[k].max, std::fabs(v));
        eq[k].mean += std::fabs(v);
    }
    void finish(ResidualReport& r) {
        for (auto& e : eq) {
            if (r.points > 0) e.mean /= r.points;
            r.max_residual = std::max(r.max_residual, e.max);
        }
        r.equations = eq;
    }
};

}  // namespace

ResidualReport certify_solution(const KillingSolution& s, const std::vector<std::vector<double>>& points,
                                bool with_pipeline) {
    validate(s.ansatz);
    ResidualReport r;
    Accumulator acc;
    SasakiData data;
    SourceSpec src;
    if (with_pipeline) {
        data = killing_sasaki(s.ansatz);
        src = SourceSpec::killing(embed_field(s.h_lambda, 4, {0, 1}), embed_field(s.v_lambda, 4, {0, 1, 2}));
    }
    for (const auto& p : points) {
        if (p.size() != 4) throw ShapeError("certification points are (x1, x2, v, y4)");
        const auto xv = head(p, 3);
        const auto d = killing_decoupled_residuals(s.ansatz, xv, s.h_lambda->value(head(p, 2)), s.v_lambda->value(xv));
        acc.add(0, "hh", d.hh);
        acc.add(1, "vv", d.vv);
        acc.add(2, "w1", d.w[0]);
        acc.add(3, "w2", d.w[1]);
        acc.add(4, "n1", d.n[0]);
        acc.add(5, "n2", d.n[1]);
        ++r.points;
        if (!with_pipeline) continue;
        const Eigen::MatrixXd E = einstein_finsler_residual(data, src, p);
        const double h3 = s.ansatz.h3->value(xv), h4 = s.ansatz.h4->value(xv);
        const double gaps[] = {E(0, 0) + d.vv, E(1, 1) + d.vv, E(2, 2) + d.hh, E(3, 3) + d.hh,
                               h3 * E(2, 0) - d.w[0], h3 * E(2, 1) - d.w[1],
                               h4 * E(3, 0) - d.n[0], h4 * E(3, 1) - d.n[1]};
        for (double g : gaps) r.agreement_gap = std::max(r.agreement_gap, std::fabs(g));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                const bool covered = a == b || (a >= 2 && b < 2);
                if (!covered) r.other_components = std::max(r.other_components, std::fabs(E(a, b)));
            }
    }
    acc.finish(r);
    return r;
}

ResidualReport certify_eight_d(const EightDAnsatz& a, const std::vector<std::vector<double>>& points) {
    ResidualReport r;
    Accumulator acc;
    const auto& k = a.base.ansatz;
    for (const auto& p : points) {
        if (p.size() != 5) throw ShapeError("8-d certification points are (x1, x2, v, y5, y7)");
        const std::vector<double> xv{p[0], p[1], p[2]}, x5{p[0], p[1], p[3]}, x57{p[0], p[1], p[3], p[4]};
        const auto d = killing_decoupled_residuals(k, xv, a.base.h_lambda->value(head(p, 2)), a.base.v_lambda->value(xv));
        acc.add(0, "hh", d.hh);
        acc.add(1, "vv", d.vv);
        acc.add(2, "w", std::max(std::fabs(d.w[0]), std::fabs(d.w[1])));
        acc.add(3, "n", std::max(std::fabs(d.n[0]), std::fabs(d.n[1])));
        const auto l1 = level_residuals(k.g1, k.g2, a.level1.ha, a.level1.hb, a.level1.w, a.level1.n,
                                        a.level1.lambda, x5);
        acc.add(4, "vv5", l1.vv);
        acc.add(5, "w5", std::max(std::fabs(l1.w[0]), std::fabs(l1.w[1])));
        acc.add(6, "n5", std::max(std::fabs(l1.n[0]), std::fabs(l1.n[1])));
        const auto l2 = level_residuals(k.g1, k.g2, a.level2.ha, a.level2.hb, a.level2.w, a.level2.n,
                                        a.level2.lambda, x57);
        acc.add(7, "vv7", l2.vv);
        acc.add(8, "w7", std::max(std::fabs(l2.w[0]), std::fabs(l2.w[1])));
        acc.add(9, "n7", std::max(std::fabs(l2.n[0]), std::fabs(l2.n[1])));
        ++r.points;
    }
    acc.finish(r);
    return r;
}

}  // namespace efg
