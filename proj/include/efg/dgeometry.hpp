#pragma once

// Cartan d-connection, torsion, curvature, Ricci data and field-equation residuals in the
// N-adapted frame (e_i = d_i - N_i^a d_a, e_a = d_a), plus the Levi-Civita comparison.
//
// Frame indices run over 0..2n-1; index n + a is fiber a.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "efg/finsler.hpp"

namespace efg {

struct Table3 {
    int D = 0;
    std::vector<double> v;
    Table3() = default;
    explicit Table3(int d) : D(d), v(static_cast<std::size_t>(d * d * d), 0.0) {}
    double& operator()(int a, int b, int c) { return v[static_cast<std::size_t>((a * D + b) * D + c)]; }
    double operator()(int a, int b, int c) const { return v[static_cast<std::size_t>((a * D + b) * D + c)]; }
};

struct Table4 {
    int D = 0;
    std::vector<double> v;
    Table4() = default;
    explicit Table4(int d) : D(d), v(static_cast<std::size_t>(d * d * d * d), 0.0) {}
    double& operator()(int a, int b, int c, int e) {
        return v[static_cast<std::size_t>(((a * D + b) * D + c) * D + e)];
    }
    double operator()(int a, int b, int c, int e) const {
        return v[static_cast<std::size_t>(((a * D + b) * D + c) * D + e)];
    }
};

// How the h-coefficients along fiber directions are fixed.
//   Canonical:  C^i_jc = 1/2 g^{ih} e_c g_jh
//   Identified: C^i_jc = C^{n+i}_{n+j, c}
// The v-coefficients along h-directions are always identified: L^{n+a}_{n+b,k} = L^a_bk.
enum class VerticalMixing { Canonical, Identified };

struct DConnectionOptions {
    VerticalMixing mixing = VerticalMixing::Canonical;
};

// D_{e_gamma} e_beta = gamma(alpha, beta, gamma) e_alpha.
struct DConnection {
    int n = 0;
    Table3 gamma;
    double L(int i, int j, int k) const { return gamma(i, j, k); }
    double C(int a, int b, int c) const { return gamma(n + a, n + b, n + c); }
};

// T(alpha, beta, gamma) = Gamma^alpha_{beta gamma} - Gamma^alpha_{gamma beta} + W^alpha_{beta gamma}.
// Families: T(i, j, n+c) = C^i_jc, T(n+a, i, j) = Omega^a_ji, T(n+a, i, n+b) = e_b N_i^a - L^a_bi.
struct TorsionComponents {
    int n = 0;
    Table3 T;
};

// R(alpha, beta, gamma, delta) = e_delta Gamma^alpha_{beta gamma} - e_gamma Gamma^alpha_{beta delta}
//   + Gamma^mu_{beta gamma} Gamma^alpha_{mu delta} - Gamma^mu_{beta delta} Gamma^alpha_{mu gamma}
//   - W^mu_{delta gamma} Gamma^alpha_{beta mu}.
// R(i, h, j, k) is the h-curvature R^i_hjk; R(n+a, n+b, n+c, n+d) is S^a_bcd.
struct CurvatureComponents {
    int n = 0;
    Table4 R;
};

struct RicciData {
    Eigen::MatrixXd ricci;  // R_{beta delta} = R(tau, beta, delta, tau)
    double hscalar = 0.0;   // g^ij R_ij
    double vscalar = 0.0;   // (lP^2 h)^ab R_ab
    double scalar = 0.0;
};

struct DGeometryBundle {
    int n = 0;
    Eigen::MatrixXd metric;   // adapted-frame metric diag(g, lP^2 h)
    Eigen::MatrixXd inverse;
    DConnection connection;
    Table3 anholonomy;        // W^mu_{gamma delta}
    std::vector<double> omega;  // Omega^a_ij, (a * n + i) * n + j
    TorsionComponents torsion;
    CurvatureComponents curvature;
    RicciData ricci;
};

// Full pointwise pipeline (jets of the blocks and N to second order).
DGeometryBundle geometry_at(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt = {});

DConnection cartan_dconnection(const SasakiData& data, std::span<const double> point,
                               const DConnectionOptions& opt = {});

struct CompatibilityReport {
    double max = 0.0;
    double hh_h = 0.0;  // D_{e_k} g_ij
    double hh_v = 0.0;  // D_{e_c} g_ij
    double vv_h = 0.0;  // D_{e_k} h_ab
    double vv_v = 0.0;  // D_{e_c} h_ab
};
CompatibilityReport metric_compatibility_residual(const DConnection& conn, const SasakiData& data,
                                                  std::span<const double> point);

TorsionComponents torsion(const DConnection& conn, const NConnection& N, std::span<const double> point);
CurvatureComponents curvature(const SasakiData& data, std::span<const double> point,
                              const DConnectionOptions& opt = {});
RicciData ricci_and_scalar(const CurvatureComponents& curv, const SasakiData& data, std::span<const double> point);

// Diagonal source in mixed form, Upsilon^alpha_alpha, one field per frame index.
struct SourceSpec {
    std::vector<FieldPtr> diag;

    static SourceSpec zero(int dim);
    static SourceSpec cosmological(int dim, double lambda);
    // 2+2 split: Upsilon^1_1 = Upsilon^2_2 = vLambda, Upsilon^3_3 = Upsilon^4_4 = hLambda.
    static SourceSpec killing(FieldPtr h_lambda, FieldPtr v_lambda);
    // Pairs of equal entries, one value per 2-block.
    static SourceSpec paired(std::vector<FieldPtr> per_pair);
    int dim() const { return static_cast<int>(diag.size()); }
    std::vector<double> values(std::span<const double> point) const;
};

// Split-lambda relations: each Lambda is the sum of the three complementary pair values.
struct SplitSource {
    double ups2, ups4, ups6, ups8;
};
SplitSource split_lambdas(double h_lambda, double v_lambda, double lambda5, double lambda7);

// E^beta_delta - Upsilon^beta_delta (mixed components, E = Ric - 1/2 g sR).
Eigen::MatrixXd einstein_finsler_residual(const SasakiData& data, const SourceSpec& source,
                                          std::span<const double> point, const DConnectionOptions& opt = {});
Eigen::MatrixXd einstein_residual_from(const DGeometryBundle& b, const SourceSpec& source,
                                       std::span<const double> point);

// Torsion-free Einstein residual of a coordinate metric, mixed components.
Eigen::MatrixXd levi_civita_residual(const CoordinateMetric& metric, const SourceSpec& source,
                                     std::span<const double> point);
// Coordinate Christoffel symbols and Ricci tensor (the generic Levi-Civita path).
struct LeviCivitaData {
    Table3 christoffel;  // nabla_c d_b = christoffel(a, b, c) d_a
    Eigen::MatrixXd ricci;
    double scalar = 0.0;
    Eigen::MatrixXd metric, inverse;
};
LeviCivitaData levi_civita(const CoordinateMetric& metric, std::span<const double> point);

struct DistortionTable {
    DConnection cartan;
    Table3 levi_civita;  // frame Levi-Civita coefficients, same index convention
    Table3 Z;            // cartan - levi_civita
};
DistortionTable distortion(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt = {});

// Frame divergence of Upsilon^{alpha beta} with the Levi-Civita connection minus Z^beta_{alpha gamma} Upsilon^{alpha gamma}.
Eigen::VectorXd nonholonomic_conservation_residual(const SasakiData& data, const SourceSpec& source,
                                                   std::span<const double> point,
                                                   const DConnectionOptions& opt = {});

}  // namespace efg
