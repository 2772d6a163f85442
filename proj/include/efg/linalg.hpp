#pragma once

// Small dense helpers: matrices of jets (row-major) and conversions to Eigen.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "efg/jet.hpp"

namespace efg {

// Inverse of an n x n matrix of jets by Gauss-Jordan elimination with partial pivoting
// on the constant terms. Throws DegeneracyError when a pivot vanishes.
std::vector<Jet> jet_inverse(std::span<const Jet> m, int n);

std::vector<Jet> truncate_all(std::span<const Jet> m, int order);

Eigen::MatrixXd jet_values(std::span<const Jet> m, int n);

// Singular when the smallest singular value falls below threshold times the largest.
bool is_degenerate(const Eigen::MatrixXd& m, double threshold, double* det_out = nullptr);

}  // namespace efg
