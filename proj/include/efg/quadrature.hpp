#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature for scalar and vector integrands, and the
// cumulative-integral field used by the solution constructors.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "efg/field.hpp"

namespace efg {

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 0.0;
    int max_panels = 4000;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

struct VectorQuadResult {
    std::vector<double> value;
    double error = 0.0;
    int panels = 0;
};

// Integral over [a, b]; b < a gives the negated integral over [b, a].
// Throws ConvergenceError when max_panels is exhausted above tolerance.
QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadOptions& opt = {});

// Component-wise integral of f(t) -> out[0..m). The error estimate is the max over components.
VectorQuadResult integrate_vector(const std::function<void(double, std::span<double>)>& f, std::size_t m, double a,
                                  double b, const QuadOptions& opt = {});

// Field u -> integral_{lower}^{u[var]} integrand(u with u[var] = t) dt.
// Its partial along `var` is the integrand itself; along other coordinates it is the
// cumulative integral of the integrand's partial.
FieldPtr cumulative_integral(FieldPtr integrand, int var, double lower = 0.0, QuadOptions opt = {});

}  // namespace efg
