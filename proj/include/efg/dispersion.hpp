#pragma once

// Nonlinear dispersion relations and the Finsler generating functions built from them.
//
// Spatial indices run over 0..2; the generating function lives on 4 + 4 coordinates
// (x1..x4, y1..y4) with y1 the time-fiber coordinate (x1 = ct).

#include <array>
#include <map>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "efg/finsler.hpp"

namespace efg {

using Vec3 = std::array<double, 3>;

struct DispersionSpec {
    int r = 1;
    Eigen::Matrix3d ghat = Eigen::Matrix3d::Identity();
    // Fully symmetric rank-2r table, keyed by the sorted index tuple.
    std::map<std::vector<int>, double> q;
    double c = 1.0;

    // Stores the entry under its sorted key; throws ShapeError for a wrong rank or index.
    void set_q(std::vector<int> indices, double value);
    double q_at(std::vector<int> indices) const;
    // q_{i1..i2r} v^{i1} ... v^{i2r} summed over all index tuples.
    double contract(const Vec3& v) const;
    // Frobenius norm over the full (unsorted) tensor.
    double q_norm() const;
    DispersionSpec scaled_q(double factor) const;
    void validate() const;  // r >= 1, c > 0, ghat symmetric and invertible
};

struct PhononSpec {
    double c_s = 1.0, m0 = 1.0, hbar = 1.0;
};

// c_s^2 k^2 + c_s^2 (hbar / 2 m0 c_s)^2 k^4.
double phonon_omega_squared(const Vec3& k, const PhononSpec& s);

// c^2 Q^2 (1 - (1/r) q(k..k) / Q^{2r}), Q = ghat(k, k), as displayed. Throws DomainError when
// Q = 0 and q is nonzero.
double finsler_omega_squared(const Vec3& k, const DispersionSpec& s);

// r = 1 with ghat = alpha I and q = beta I, chosen so the relation above equals the phonon one:
// alpha = hbar / (2 m0 c), beta = -(c_s / c)^2.
DispersionSpec phonon_as_dispersion(const PhononSpec& p, double c);

// L = -(y1)^2 + G [1 + (1/r) q(y..y) / G^r], G = ghat(y, y) over the spatial fibers y2..y4.
// Throws ParameterError ("deformation too large") when the bracket is not positive at a probe
// (probes are points of the 8-d bundle).
GeneratingFunction generating_from_q(const DispersionSpec& s, const std::vector<std::vector<double>>& probes = {});

struct RoundtripProbe {
    Vec3 k{};                    // as given
    double omega2_root = 0.0;    // from the null cone of L
    double omega2_formula = 0.0; // finsler_omega_squared on the unit shell
    double discrepancy = 0.0;    // relative
};
struct RoundtripReport {
    std::vector<RoundtripProbe> probes;
    double max_discrepancy = 0.0;
    double halved_max_discrepancy = 0.0;  // same probes with q / 2
    double ratio = 0.0;                   // max / halved (about 4 at second order)
};

// Each probe k (upper index) is rescaled to ghat(k, k) = 1, where the displayed relation and
// the null cone agree to first order in q. The covector k_i = ghat_ij k^j is pulled back
// through the Legendre map k = (1/2) dL/dy (Newton on the spatial fibers), and the time fiber
// is found by a bracketed root search on L = 0; omega^2 = c^2 (y1)^2.
RoundtripReport roundtrip_check(const DispersionSpec& s, const std::vector<Vec3>& probes);

// Random symmetric table with unit Frobenius norm (then scaled by `norm`).
DispersionSpec random_dispersion(std::mt19937_64& rng, int r, double norm);

struct SlopeReport {
    std::vector<double> norms, discrepancies;
    double slope = 0.0;  // least-squares slope of log(discrepancy) against log(norm)
};
SlopeReport discrepancy_slope(const DispersionSpec& unit_q, const std::vector<double>& norms,
                              const std::vector<Vec3>& probes);

}  // namespace efg
