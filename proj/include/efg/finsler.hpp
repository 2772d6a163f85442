#pragma once

// Tangent-bundle structures: generating functions, metric blocks, nonlinear connections,
// the Sasaki-type total metric and N-adapted frame data.
//
// Coordinates are u = (x^0..x^{n-1}, y^0..y^{n-1}); fiber index a of a table refers to u^{n+a}.

#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "efg/field.hpp"

namespace efg {

// Symmetric n x n matrix of fields over `arity` coordinates; the upper triangle is stored.
class SymmetricFields {
public:
    SymmetricFields() = default;
    SymmetricFields(int n, int arity);
    static SymmetricFields diagonal(std::vector<FieldPtr> entries);

    int n() const { return n_; }
    int arity() const { return arity_; }
    const FieldPtr& operator()(int i, int j) const { return upper_[slot(i, j)]; }
    void set(int i, int j, FieldPtr f);

    // All n*n entries, row-major.
    std::vector<Jet> jets(std::span<const double> point, int order) const;
    Eigen::MatrixXd values(std::span<const double> point) const;

private:
    std::size_t slot(int i, int j) const;
    int n_ = 0;
    int arity_ = 0;
    std::vector<FieldPtr> upper_;
};

// N_i^a: horizontal index i, fiber index a.
struct NConnection {
    int n = 0;
    int arity = 0;
    std::vector<FieldPtr> coeff;  // coeff[i * n + a]

    static NConnection zero(int n, int arity);
    const FieldPtr& at(int i, int a) const { return coeff[static_cast<std::size_t>(i * n + a)]; }
    void set(int i, int a, FieldPtr f);
    // All n*n coefficients as jets, ordered like coeff.
    std::vector<Jet> jets(std::span<const double> point, int order) const;
    Eigen::MatrixXd values(std::span<const double> point) const;
};

struct MetricBlocks {
    SymmetricFields g;  // h-block
    SymmetricFields h;  // v-block before scaling
    double lP = 1.0;    // the v-block of the total metric is lP^2 h
};

struct SasakiData {
    MetricBlocks blocks;
    NConnection nconn;
    DomainBox domain;

    int n() const { return blocks.g.n(); }
    int dim() const { return 2 * n(); }
};

// Checks that all members agree in size; an empty domain becomes unbounded.
SasakiData make_sasaki(SymmetricFields g, SymmetricFields h, NConnection N, double lP, DomainBox domain = {});

struct GeneratingFunction {
    int n = 0;
    FieldPtr L;  // F^2 over the 2n coordinates
    double homogeneity_tolerance = 1e-9;
    double degeneracy_threshold = 1e-10;
    DomainBox domain;

    // From F^2 directly (pseudo-Finsler forms need not have a real square root).
    static GeneratingFunction from_square(FieldPtr L, int n);
    // From F; L = F * F.
    static GeneratingFunction from_norm(FieldPtr F, int n);
};

// (1/2) d^2 L / dy^i dy^j. Throws DegeneracyError carrying the determinant.
Eigen::MatrixXd hessian_metric(const GeneratingFunction& gf, std::span<const double> point);

struct HomogeneityReport {
    double max_deviation = 0.0;
    bool pass = true;
    std::vector<double> worst_point;
    double worst_beta = 0.0;
};

// max |F(x, beta y) - beta F(x, y)| / (|beta F(x, y)| + 1e-30) with F = sqrt|L|.
HomogeneityReport check_homogeneity(const GeneratingFunction& gf, const std::vector<std::vector<double>>& points,
                                    std::span<const double> betas);

// G^k = 1/4 g^{kj} (y^i d^2L/dy^j dx^i - dL/dx^j).
Eigen::VectorXd semispray(const GeneratingFunction& gf, std::span<const double> point);
// Jets of G^k of the given order (needs L to order + 2).
std::vector<Jet> semispray_jets(const GeneratingFunction& gf, std::span<const double> point, int order);

// N_j^a = dG^a / dy^j. The returned fields share a per-point cache.
NConnection canonical_nconnection(const GeneratingFunction& gf);

// Hessian blocks for both h and v parts of the total metric.
SymmetricFields hessian_fields(const GeneratingFunction& gf);
SasakiData sasaki_lift(const GeneratingFunction& gf, const NConnection& N, double lP);

// Coordinate components: (i,j) = g_ij + N_i^a H_ab N_j^b, (i,b) = N_i^a H_ab, (a,b) = H_ab, H = lP^2 h.
Eigen::MatrixXd assemble_coordinate_metric(const SasakiData& data, std::span<const double> point);

struct RecoveredBlocks {
    Eigen::MatrixXd g, h, N;  // N(i, a)
};
RecoveredBlocks recover_blocks(const Eigen::MatrixXd& coordinate_metric, int n, double lP);

// Metric components in a holonomic chart, as jets of the chart coordinates.
class CoordinateMetric {
public:
    virtual ~CoordinateMetric() = default;
    virtual int dim() const = 0;
    // Row-major dim x dim jets.
    virtual std::vector<Jet> jets(std::span<const double> point, int order) const = 0;
};
std::shared_ptr<const CoordinateMetric> sasaki_coordinate_metric(SasakiData data);
std::shared_ptr<const CoordinateMetric> field_coordinate_metric(SymmetricFields entries);

// e_alpha f for a jet f: alpha < n is d_alpha - N_alpha^a d_{n+a}, otherwise d_alpha.
// Njets must have order >= f.order() - 1.
Jet frame_derivative(const Jet& f, int alpha, int n, std::span<const Jet> Njets);

// W^mu_{gamma delta} with [e_gamma, e_delta] = W^mu_{gamma delta} e_mu, flattened (mu * D + gamma) * D + delta.
std::vector<double> anholonomy_coefficients(const NConnection& N, std::span<const double> point);
std::vector<double> anholonomy_from_jets(std::span<const Jet> Njets, int n);
// Omega^a_{ij} = e_i N_j^a - e_j N_i^a, flattened (a * n + i) * n + j.
std::vector<double> nconnection_curvature(const NConnection& N, std::span<const double> point);
std::vector<double> nconnection_curvature_from_jets(std::span<const Jet> Njets, int n);

}  // namespace efg
