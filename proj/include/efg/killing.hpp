#pragma once

// The 2+2 Killing-symmetric ansatz over (x1, x2, v, y4): h-metric diag(g1, g2) depending on x,
// v-metric diag(h3, h4) and N-coefficients N_i^3 = w_i, N_i^4 = n_i depending on (x, v).
// Provides the closed-form connection, torsion and Ricci tables for that ansatz and the
// matching entries read off the generic pipeline.

#include <array>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "efg/dgeometry.hpp"

namespace efg {

struct KillingAnsatz {
    std::array<int, 4> eps{1, -1, -1, -1};
    FieldPtr g1, g2;             // (x1, x2)
    FieldPtr h3, h4;             // (x1, x2, v)
    std::array<FieldPtr, 2> w;   // (x1, x2, v)
    std::array<FieldPtr, 2> n;   // (x1, x2, v)
};

// Random instance with coefficients from the primitive set: g and h signed per eps and
// bounded away from zero, w and n of order one.
KillingAnsatz random_killing_ansatz(std::mt19937_64& rng, std::array<int, 4> eps = {1, -1, -1, -1});

// Throws ShapeError when a coefficient has the wrong arity or is missing.
void validate(const KillingAnsatz& a);

// n = 2 bundle data over (x1, x2, v, y4).
SasakiData killing_sasaki(const KillingAnsatz& a, double lP = 1.0, DomainBox domain = {});

// Two variants of the tables: the coefficients exactly as usually quoted, and the ones
// re-derived from the connection definition. They differ in P^4_23 and in K_i.
enum class ClosedFormVariant { Quoted, Derived };

struct NamedValue {
    std::string name;
    double value = 0.0;
};

// Decoupled coefficient blocks at a point (x1, x2, v).
struct KillingBlocks {
    double A = 0.0, A_v = 0.0;
    std::array<double, 2> B{}, K{};
};
KillingBlocks killing_blocks(const KillingAnsatz& a, std::span<const double> xv, ClosedFormVariant variant);

// Closed-form tables at (x1, x2, v): connection, N-curvature, torsion and Ricci entries.
std::vector<NamedValue> killing_closed_forms(const KillingAnsatz& a, std::span<const double> xv,
                                             ClosedFormVariant variant);
// The same entries taken from the generic pipeline at u = (x1, x2, v, y4).
std::vector<NamedValue> killing_pipeline_values(const DGeometryBundle& b);

// Left-hand sides of the four decoupled equations with the sources moved over:
// R^1_1 + hLambda, R^3_3 + vLambda, R_3j, R_4i.
struct DecoupledResiduals {
    double hh = 0.0;
    double vv = 0.0;
    std::array<double, 2> w{};
    std::array<double, 2> n{};
    double max() const;
};
// Jets of one block of coefficients in a common space of order >= 2 (w, n: >= 1). Variables 0, 1
// are x1, x2; `fiber` is the anisotropic direction (v for the 4-d ansatz). The field names follow
// the 4-d ansatz: ha, hb play the roles of h3, h4.
struct LevelJets {
    Jet g1, g2, h3, h4;
    std::array<Jet, 2> w, n;
    int fiber = 2;
};
DecoupledResiduals decoupled_residuals(const LevelJets& j, double h_lambda, double v_lambda,
                                       ClosedFormVariant variant = ClosedFormVariant::Derived);

DecoupledResiduals killing_decoupled_residuals(const KillingAnsatz& a, std::span<const double> xv, double h_lambda,
                                               double v_lambda, ClosedFormVariant variant = ClosedFormVariant::Derived);

}  // namespace efg
