#pragma once

// Solutions of the decoupled Killing system by quadratures, their 8-d extension by two
// further fiber levels, and residual certification.
//
// A "level" is a pair of v-metric coefficients (ha, hb) over coordinates (x1, x2, ..., s)
// where s, the last coordinate, is the anisotropic fiber direction of that level, together
// with the two N-coefficient families w_i = N_i^{a}, n_i = N_i^{b} (i = 1, 2).

#include <array>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "efg/expr.hpp"
#include "efg/killing.hpp"
#include "efg/quadrature.hpp"

namespace efg {

enum class Regime { Case1, Case2, Case3 };
std::string to_string(Regime r);

// Fields over (x1, x2) unless noted.
struct GeneratingSet {
    std::array<int, 4> eps{1, -1, -1, -1};
    FieldPtr psi;                    // g_i = eps_i exp(psi)
    FieldPtr f;                      // (x1, x2, v), df/dv != 0
    FieldPtr f0, h0, s0;             // integration functions of h3, h4 and the varsigma factor
    std::array<FieldPtr, 2> w0, n0;  // values of w_i, n_i at v = v_lower
    FieldPtr v_lambda;               // (x1, x2, v)
    FieldPtr h_lambda;               // optional; derived from psi when absent
    double v_lower = 0.0;
    QuadOptions quad;
};

// ------------------------------------------------------------------------------------------
// Background h-metric

// max over the grid nodes of |eps1 psi_11 + eps2 psi_22 - hLambda| (exact derivatives).
struct BackgroundReport {
    double max_residual = 0.0;
    std::vector<double> worst_point;
};
BackgroundReport verify_background_psi(const FieldPtr& psi, int eps1, int eps2, const FieldPtr& h_lambda,
                                       const std::vector<std::vector<double>>& grid);

// The h-source for which diag(eps1 e^psi, eps2 e^psi) solves R^1_1 = -hLambda:
// hLambda = (eps1 psi_11 + eps2 psi_22) / (2 e^psi).
FieldPtr background_h_lambda(const FieldPtr& psi, int eps1, int eps2);

struct PoissonGrid {
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    int nx = 33, ny = 33;  // nodes per direction, boundary included
    double tolerance = 1e-12;
    int max_iterations = 20000;
};
struct PoissonSolution {
    PoissonGrid grid;
    Eigen::MatrixXd psi;  // (ix, iy)
    int iterations = 0;
    double residual = 0.0;  // max discrete residual at interior nodes
    double x(int i) const { return grid.x0 + (grid.x1 - grid.x0) * i / (grid.nx - 1); }
    double y(int j) const { return grid.y0 + (grid.y1 - grid.y0) * j / (grid.ny - 1); }
};
// Five-point discretization of eps1 psi_11 + eps2 psi_22 = rhs with Dirichlet data.
// Throws ConvergenceError when the Krylov solver stalls.
PoissonSolution solve_background_psi(const FieldPtr& rhs, int eps1, int eps2, const PoissonGrid& grid,
                                     const FieldPtr& boundary);

// ------------------------------------------------------------------------------------------
// One fiber level

// Coefficients over (x1, x2, ..., s) with s = coordinate `arity - 1`; g1, g2 over (x1, x2).
struct LevelBlocks {
    int arity = 0;
    FieldPtr g1, g2;
    Expr ha, hb;
    Expr A;                 // ha*/2ha + hb*/2hb
    std::array<Expr, 2> B;  // (hb*/2hb)(d_k g1/2g1 - d_k g2/2g2) - d_k A
    // (hb*/2) K_k in the re-derived form, finite where hb* = 0.
    std::array<Expr, 2> half_hbs_K;
    std::array<Expr, 2> K;  // singular where hb* = 0
};
LevelBlocks level_blocks(Expr ha, Expr hb, FieldPtr g1, FieldPtr g2, int arity);

struct HPair {
    Expr ha, hb, varsigma;
    FieldPtr varsigma_integral;  // I(x, s) = int Lambda f* (f - f0) ds
};
// ha = eps_a h0 (f*)^2 |varsigma|, hb = eps_b (f - f0)^2,
// 1/varsigma = 1/s0 + 2 sgn(s0) eps_a h0 I.
// f, lambda over (x1, x2, ..., s); f0, h0, s0 over (x1, x2).
HPair construct_h_pair(const FieldPtr& f, const FieldPtr& f0, const FieldPtr& h0, const FieldPtr& s0,
                       const FieldPtr& lambda, int eps_a, int eps_b, double lower, const QuadOptions& quad);

// w_j with (ha*/2ha) w* + A* w + B = 0 and w(s = lower) = w0:
// w = exp(-Phi) (w0 - int Q exp(Phi)), Phi = int 2 ha A*/ha*, Q = 2 ha B / ha*.
std::array<Expr, 2> construct_w(const LevelBlocks& b, const std::array<FieldPtr, 2>& w0, double lower,
                                 const QuadOptions& quad);
// Regime with ha* = 0: A* w + B = 0 algebraically.
std::array<Expr, 2> construct_w_algebraic(const LevelBlocks& b);
// n_i = n0_i + int ha K_i.
std::array<Expr, 2> construct_n(const LevelBlocks& b, const std::array<FieldPtr, 2>& n0, double lower,
                                const QuadOptions& quad);

// Classification on sample points: |h*| <= zero_tol * max(1, |h|) counts as vanishing.
struct RegimeReport {
    Regime regime = Regime::Case3;
    std::vector<std::vector<double>> crossings;  // points whose tag differs from the first one
};
RegimeReport classify_regime(const FieldPtr& ha, const FieldPtr& hb, const FieldPtr& lambda,
                             const std::vector<std::vector<double>>& samples, double zero_tol = 1e-12);
// Same as classify_regime but throws RegimeError on mixed tags.
Regime case_dispatch(const FieldPtr& ha, const FieldPtr& hb, const FieldPtr& lambda,
                     const std::vector<std::vector<double>>& samples, double zero_tol = 1e-12);

// Residuals of one level's decoupled equations at a point of its coordinates, from jets of the
// coefficient fields (independent of the construction):
// vv: (1/2 ha hb)(-hb** + hb*^2/2hb + ha* hb*/2ha) + Lambda, w_j and n_i as above.
struct LevelResiduals {
    double vv = 0.0;
    std::array<double, 2> w{}, n{};
    double max() const;
};
LevelResiduals level_residuals(const FieldPtr& g1, const FieldPtr& g2, const FieldPtr& ha, const FieldPtr& hb,
                               const std::array<FieldPtr, 2>& w, const std::array<FieldPtr, 2>& n,
                               const FieldPtr& lambda, std::span<const double> point);

// ------------------------------------------------------------------------------------------
// 4-d construction

struct KillingSolution {
    KillingAnsatz ansatz;
    Regime regime = Regime::Case3;
    FieldPtr h_lambda, v_lambda;  // h_lambda over (x1, x2), v_lambda over (x1, x2, v)
    FieldPtr varsigma;            // null outside the generating-function route
    LevelBlocks blocks;
};

// Generating-function route (f* != 0). Without samples the regime is taken to be case3; with
// samples it is classified there, and case1 (h3* = 0) switches w to its algebraic form.
KillingSolution construct_killing_solution(const GeneratingSet& gen,
                                           const std::vector<std::vector<double>>& regime_samples = {});
// Regime-specific route from prescribed v-metric profiles over (x1, x2, v).
KillingSolution construct_from_profiles(const FieldPtr& psi, std::array<int, 4> eps, const FieldPtr& h3,
                                        const FieldPtr& h4, const FieldPtr& v_lambda, Regime regime,
                                        const std::array<FieldPtr, 2>& w0, const std::array<FieldPtr, 2>& n0,
                                        double lower, const QuadOptions& quad);

GeneratingSet random_generating_set(std::mt19937_64& rng, const QuadOptions& quad = {});

// ------------------------------------------------------------------------------------------
// 8-d extension

struct FiberLevelData {
    FieldPtr f, f0, h0, s0, lambda;
    std::array<FieldPtr, 2> w0, n0;
    // Points over the level's coordinates; when given, the regime is classified there as in
    // the 4-d route, otherwise case3 is assumed.
    std::vector<std::vector<double>> samples;
};

struct EightDGeneratingSet {
    GeneratingSet base;
    FiberLevelData level1;  // f over (x1, x2, y5); lambda = Lambda5
    FiberLevelData level2;  // f over (x1, x2, y5, y7); lambda = Lambda7
    std::array<int, 4> eps_fiber{-1, -1, -1, -1};  // eps5..eps8
    std::vector<std::vector<double>> base_samples;  // (x1, x2, v)
};

struct LevelSolution {
    int arity = 0;
    Regime regime = Regime::Case3;
    FieldPtr ha, hb, varsigma, lambda;
    std::array<FieldPtr, 2> w, n;
    LevelBlocks blocks;
};

struct EightDAnsatz {
    KillingSolution base;
    LevelSolution level1, level2;
    double lP = 1.0;
    // Conformal factor over y5 (1 when absent) and the factor hbar(y5) multiplying the fiber block.
    FieldPtr phi2, hbar;
};

EightDAnsatz extend_8d(const EightDGeneratingSet& gen);
EightDGeneratingSet random_eight_d_set(std::mt19937_64& rng, const QuadOptions& quad = {});

// n = 4 bundle over u = (x1, x2, v, y4, y5, y6, y7, y8): h-block is the coordinate form of the
// 4-d Killing metric, v-block diag(h5..h8) scaled by hbar / phi2, N_i^{5..8} for i = 1, 2.
SasakiData eight_d_sasaki(const EightDAnsatz& a);

// ------------------------------------------------------------------------------------------
// Certification

struct EquationStats {
    std::string name;
    double max = 0.0;
    double mean = 0.0;
};
struct ResidualReport {
    std::vector<EquationStats> equations;
    double max_residual = 0.0;
    double agreement_gap = 0.0;     // decoupled vs full pipeline, where both exist
    double other_components = 0.0;  // full-pipeline entries outside the decoupled system
    int points = 0;
};

// points are (x1, x2, v, y4); y4 is irrelevant to the ansatz.
ResidualReport certify_solution(const KillingSolution& s, const std::vector<std::vector<double>>& points,
                                bool with_pipeline = true);
// Decoupled residuals of all three levels at points (x1, x2, v, y5, y7).
ResidualReport certify_eight_d(const EightDAnsatz& a, const std::vector<std::vector<double>>& points);

}  // namespace efg
