#pragma once

// One fiber level of the quadrature solution, integrated along the fiber coordinate s as a
// single triangular ODE system carrying Taylor coefficients in the remaining coordinates:
//
//   I   = int Lambda f* (f - f0)                      (varsigma integral)
//   Phi = int 2 ha A* / ha*                           (w exponent)
//   J_k = int 2 ha B_k / ha* exp(Phi)                 (w source)
//   M_k = int ha K_k                                  (n integral)
//
// and ha = eps_a h0 (f*)^2 |varsigma|, hb = eps_b (f - f0)^2, w_k = exp(-Phi)(w0_k - J_k),
// n_k = n0_k + M_k. Derivatives along s come from the integrands, so the outputs carry exact
// jets of any order the generating data supports.

#include <array>

#include "efg/field.hpp"
#include "efg/quadrature.hpp"

namespace efg {

struct FiberLevelSpec {
    FieldPtr f, lambda;               // over (x1, x2, ..., s)
    FieldPtr f0, h0, s0, g1, g2;      // over (x1, x2)
    std::array<FieldPtr, 2> w0, n0;   // over (x1, x2)
    int eps_a = -1, eps_b = -1;
    double lower = 0.0;
    QuadOptions tolerance;            // abs_tol / rel_tol of the fiber integration
    // ha* = 0 (first regime): w solves A* w + B = 0 and Phi, J are not integrated.
    bool algebraic_w = false;
};

struct LevelFields {
    FieldPtr ha, hb, varsigma;
    std::array<FieldPtr, 2> w, n;
};

// Fields sharing one cache of integrated states. Throws RegimeError where f* vanishes, where
// varsigma blows up along the path, or where ha* vanishes outside the algebraic mode.
LevelFields integrate_level(const FiberLevelSpec& spec);

}  // namespace efg
