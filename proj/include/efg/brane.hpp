#pragma once

// Diagonal Finsler-brane profiles over the first fiber coordinate y5, their sources, the
// conservation diagnostic, the diagonal and off-diagonal 8-d assemblies, and parameter scans.

#include <memory>
#include <vector>

#include "efg/dgeometry.hpp"
#include "efg/expr.hpp"
#include "efg/solutions.hpp"
#include "efg/table.hpp"

namespace efg {

struct BraneParams {
    int m = 2;             // fiber-count parameter, 1..4
    double eps = 1.0;      // brane width
    double lambda = 0.0;   // bulk cosmological constant
    double a = 1.0;        // asymptotic value of phi^2
    double M = 1.0;        // fundamental mass scale
    double lP = 1.0;
    double y5_max = 200.0;
    int sigma7 = -1, sigma8 = -1;  // signs of the y7, y8 metric entries; -1 keeps one time direction

    // Throws ParameterError naming the offending field.
    void validate() const;
};

// Profiles as expressions of a single argument (any Expr, typically ex::var(k)).
Expr phi_squared_expr(const BraneParams& p, const Expr& y);  // (3e^2 + a y^2) / (3e^2 + y^2)
Expr lp_sqrt_hbar_expr(const BraneParams& p, const Expr& y); // 9 e^4 / (3e^2 + y^2)^2
Expr hbar_expr(const BraneParams& p, const Expr& y);         // (lP sqrt|hbar|)^2 / lP^2
Expr k1_expr(const BraneParams& p, const Expr& y);
Expr k2_expr(const BraneParams& p, const Expr& y);

// Point evaluations; |y5| <= y5_max, otherwise DomainError.
double phi_squared(double y5, const BraneParams& p);
double hbar_profile(double y5, const BraneParams& p);
struct BraneSources {
    double k1 = 0.0, k2 = 0.0;
};
BraneSources brane_sources(double y5, const BraneParams& p);

// eps = sqrt(40 M^4 / (3 Lambda)); Lambda <= 0 throws ParameterError.
double width_for_m2(double M, double lambda);

// dK1/dy5 - 4 (K2 - K1) d ln|phi| / dy5 with exact derivatives.
double conservation_residual(double y5, const BraneParams& p);
// The same expression from central differences with the given step.
double conservation_residual_fd(double y5, const BraneParams& p, double step);
// Second y5-derivative of phi itself (not phi^2); it is generally nonzero at y5 = eps.
double phi_second_derivative(double y5, const BraneParams& p);

// Coordinates (x1..x4, y5..y8): phi^2 eta on the base, eta = diag(1, -1, -1, -1), and
// lP^2 hbar diag(-1, -1, sigma7, sigma8) on the fiber.
SymmetricFields diagonal_brane_entries(const BraneParams& p);
std::shared_ptr<const CoordinateMetric> assemble_diagonal_brane(const BraneParams& p);
// Lambda - M^{-(m+2)} K1 on the four base entries, Lambda - M^{-(m+2)} K2 on the fiber.
SourceSpec brane_source(const BraneParams& p);
// Max |E^a_b - Upsilon^a_b| of the diagonal brane at (0, 0, 0, 0, y5, 0, 0, 0).
double levi_civita_residual_norm(const BraneParams& p, double y5);

// Off-diagonal brane: extend_8d with phi^2 and hbar over y5 and the brane lP.
EightDAnsatz assemble_finsler_brane(const EightDGeneratingSet& gen, const BraneParams& p);

enum class ScanQuantity { K1, K2, Conservation, LeviCivita };
std::string to_string(ScanQuantity q);

struct ScanSpec {
    BraneParams base;  // lP, y5_max and signs
    std::vector<int> m;
    std::vector<double> eps, lambda, a, M, y5;
    ScanQuantity quantity = ScanQuantity::K1;
};

// Rows in the order m, eps, Lambda, a, M, y5 (y5 fastest), columns
// m, eps, Lambda, a, M, y5, <quantity>, zero_y5, zero_param. zero_y5 flags a sign change from
// the previous y5 of the same parameter set; zero_param one from the previous value of the
// innermost parameter axis with more than one entry, at the same y5. Any empty range gives
// a header-only table.
Table parameter_scan(const ScanSpec& spec);

}  // namespace efg
