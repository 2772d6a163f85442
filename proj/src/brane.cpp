#include "efg/brane.hpp"

#include <cmath>

#include "efg/errors.hpp"

namespace efg {

void BraneParams::validate() const {
    if (m < 1 || m > 4) throw ParameterError("brane m = " + std::to_string(m) + " is outside 1..4 (m <= 4)");
    if (!(eps > 0.0)) throw ParameterError("brane eps must be positive");
    if (!(M > 0.0)) throw ParameterError("brane M must be positive");
    if (!(lP > 0.0)) throw ParameterError("brane lP must be positive");
    if (!(y5_max > 0.0)) throw ParameterError("brane y5_max must be positive");
    if (!std::isfinite(lambda) || !std::isfinite(a)) throw ParameterError("brane Lambda and a must be finite");
    if ((sigma7 != 1 && sigma7 != -1) || (sigma8 != 1 && sigma8 != -1))
        throw ParameterError("brane sigma7 and sigma8 must be +1 or -1");
}

namespace {

double base_width(const BraneParams& p) { return 3.0 * p.eps * p.eps; }

// M^{m+2} [Lambda + (c4 y^4 + c2 y^2 + c0) / (3 e^2 + y^2)^2]
Expr source_expr(const BraneParams& p, const Expr& y, double c4, double c2, double c0) {
    const Expr y2 = y * y;
    const Expr den = base_width(p) + y2;
    const Expr bracket = p.lambda + (c4 * y2 * y2 + c2 * y2 + c0) / (den * den);
    return std::pow(p.M, p.m + 2) * bracket;
}

Jet profile_jet(const Expr& e, double y5, int order) {
    const Jet y = Jet::variable(1, order, 0, y5);
    return evaluate_expr(e, std::span<const Jet>(&y, 1));
}

void check_y(double y5, const BraneParams& p) {
    p.validate();
    if (!(std::fabs(y5) <= p.y5_max)) throw DomainError("y5 = " + std::to_string(y5) + " beyond y5_max");
}

}  // namespace

Expr phi_squared_expr(const BraneParams& p, const Expr& y) {
    const double w = base_width(p);
    return (w + p.a * y * y) / (w + y * y);
}

Expr lp_sqrt_hbar_expr(const BraneParams& p, const Expr& y) {
    const Expr den = base_width(p) + y * y;
    return 9.0 * std::pow(p.eps, 4) / (den * den);
}

Expr hbar_expr(const BraneParams& p, const Expr& y) {
    const Expr r = lp_sqrt_hbar_expr(p, y);
    return r * r / (p.lP * p.lP);
}

Expr k1_expr(const BraneParams& p, const Expr& y) {
    const double m = p.m, a = p.a, e2 = p.eps * p.eps;
    return source_expr(p, y, 2.0 * a * m * (a * (m + 2) - 3) / (3.0 * e2),
                       2.0 * (-2.0 * a * (m * m + 2 * m + 6) + 3.0 * (m + 3) * (1 + a * a)),
                       -6.0 * e2 * m * (m - 3 * a + 2));
}

Expr k2_expr(const BraneParams& p, const Expr& y) {
    const double m = p.m, a = p.a, e2 = p.eps * p.eps;
    return source_expr(p, y, 2.0 * a * (m - 1) * (a * (m + 2) - 4) / (3.0 * e2),
                       4.0 * (-a * (m * m + m + 10) + 2.0 * (m + 2) * (1 + a * a)),
                       -6.0 * e2 * (m - 1) * (m - 4 * a + 2));
}

double phi_squared(double y5, const BraneParams& p) {
    check_y(y5, p);
    const double w = base_width(p);
    return (w + p.a * y5 * y5) / (w + y5 * y5);
}

double hbar_profile(double y5, const BraneParams& p) {
    check_y(y5, p);
    const double den = base_width(p) + y5 * y5;
    const double r = 9.0 * std::pow(p.eps, 4) / (den * den);
    return r * r / (p.lP * p.lP);
}

BraneSources brane_sources(double y5, const BraneParams& p) {
    check_y(y5, p);
    const Expr y = ex::var(0);
    return {profile_jet(k1_expr(p, y), y5, 0).value(), profile_jet(k2_expr(p, y), y5, 0).value()};
}

double width_for_m2(double M, double lambda) {
    if (!(lambda > 0.0)) throw ParameterError("width relation needs Lambda > 0");
    if (!(M > 0.0)) throw ParameterError("width relation needs M > 0");
    return std::sqrt(40.0 * std::pow(M, 4) / (3.0 * lambda));
}

double conservation_residual(double y5, const BraneParams& p) {
    check_y(y5, p);
    const Expr y = ex::var(0);
    const Jet k1 = profile_jet(k1_expr(p, y), y5, 1), k2 = profile_jet(k2_expr(p, y), y5, 1);
    const Jet f = profile_jet(phi_squared_expr(p, y), y5, 1);
    // d ln|phi| = d(phi^2) / (2 phi^2)
    return k1.d(0) - 4.0 * (k2.value() - k1.value()) * f.d(0) / (2.0 * f.value());
}

double conservation_residual_fd(double y5, const BraneParams& p, double step) {
    check_y(y5, p);
    if (!(step > 0.0)) throw ParameterError("finite-difference step must be positive");
    auto k1 = [&](double y) { return brane_sources(y, p).k1; };
    auto lnphi = [&](double y) { return 0.5 * std::log(std::fabs(phi_squared(y, p))); };
    const double dk1 = (k1(y5 + step) - k1(y5 - step)) / (2.0 * step);
    const double dl = (lnphi(y5 + step) - lnphi(y5 - step)) / (2.0 * step);
    const auto s = brane_sources(y5, p);
    return dk1 - 4.0 * (s.k2 - s.k1) * dl;
}

double phi_second_derivative(double y5, const BraneParams& p) {
    check_y(y5, p);
    return profile_jet(ex::sqrt(phi_squared_expr(p, ex::var(0))), y5, 2).d2(0, 0);
}

SymmetricFields diagonal_brane_entries(const BraneParams& p) {
    p.validate();
    constexpr int D = 8;
    const Expr y5 = ex::var(4);
    const Expr phi2 = phi_squared_expr(p, y5);
    const Expr fiber = -(p.lP * p.lP) * hbar_expr(p, y5);
    const double eta[4] = {1.0, -1.0, -1.0, -1.0};
    const double sig[4] = {1.0, 1.0, -static_cast<double>(p.sigma7), -static_cast<double>(p.sigma8)};
    SymmetricFields g(D, D);
    for (int i = 0; i < D; ++i)
        for (int j = i + 1; j < D; ++j) g.set(i, j, zero_field(D));
    for (int i = 0; i < 4; ++i) {
        g.set(i, i, expr_field(eta[i] * phi2, D, "phi2 eta"));
        g.set(4 + i, 4 + i, expr_field(sig[i] * fiber, D, "-lP^2 hbar"));
    }
    return g;
}

std::shared_ptr<const CoordinateMetric> assemble_diagonal_brane(const BraneParams& p) {
    return field_coordinate_metric(diagonal_brane_entries(p));
}

SourceSpec brane_source(const BraneParams& p) {
    p.validate();
    constexpr int D = 8;
    const double scale = std::pow(p.M, -(p.m + 2));
    const Expr y5 = ex::var(4);
    const FieldPtr base = expr_field(p.lambda - scale * k1_expr(p, y5), D, "Upsilon base");
    const FieldPtr fiber = expr_field(p.lambda - scale * k2_expr(p, y5), D, "Upsilon fiber");
    SourceSpec s;
    s.diag = {base, base, base, base, fiber, fiber, fiber, fiber};
    return s;
}

double levi_civita_residual_norm(const BraneParams& p, double y5) {
    check_y(y5, p);
    const auto metric = assemble_diagonal_brane(p);
    const std::vector<double> point{0, 0, 0, 0, y5, 0, 0, 0};
    return levi_civita_residual(*metric, brane_source(p), point).cwiseAbs().maxCoeff();
}

EightDAnsatz assemble_finsler_brane(const EightDGeneratingSet& gen, const BraneParams& p) {
    p.validate();
    EightDAnsatz a = extend_8d(gen);
    a.lP = p.lP;
    a.phi2 = expr_field(phi_squared_expr(p, ex::var(0)), 1, "phi2");
    a.hbar = expr_field(hbar_expr(p, ex::var(0)), 1, "hbar");
    return a;
}

std::string to_string(ScanQuantity q) {
    switch (q) {
        case ScanQuantity::K1: return "K1";
        case ScanQuantity::K2: return "K2";
        case ScanQuantity::Conservation: return "conservation_residual";
        case ScanQuantity::LeviCivita: return "levi_civita_residual";
    }
    return "?";
}

Table parameter_scan(const ScanSpec& spec) {
    Table t;
    t.columns = {"m", "eps", "Lambda", "a", "M", "y5", to_string(spec.quantity), "zero_y5", "zero_param"};
    const std::size_t sizes[6] = {spec.m.size(), spec.eps.size(), spec.lambda.size(),
                                  spec.a.size(), spec.M.size(), spec.y5.size()};
    std::size_t total = 1;
    for (auto s : sizes) total *= s;
    if (total == 0) return t;

    // Innermost parameter axis that actually varies; its stride in row order.
    int axis = -1;
    for (int k = 0; k < 5; ++k)
        if (sizes[k] > 1) axis = k;
    std::size_t stride = 1;
    if (axis >= 0)
        for (int k = axis + 1; k < 6; ++k) stride *= sizes[k];

    std::vector<double> q(total);
    t.rows.reserve(total);
    for (std::size_t r = 0; r < total; ++r) {
        std::size_t idx[6], rem = r;
        for (int k = 5; k >= 0; --k) {
            idx[k] = rem % sizes[k];
            rem /= sizes[k];
        }
        BraneParams p = spec.base;
        p.m = spec.m[idx[0]];
        p.eps = spec.eps[idx[1]];
        p.lambda = spec.lambda[idx[2]];
        p.a = spec.a[idx[3]];
        p.M = spec.M[idx[4]];
        const double y = spec.y5[idx[5]];
        switch (spec.quantity) {
            case ScanQuantity::K1: q[r] = brane_sources(y, p).k1; break;
            case ScanQuantity::K2: q[r] = brane_sources(y, p).k2; break;
            case ScanQuantity::Conservation: q[r] = conservation_residual(y, p); break;
            case ScanQuantity::LeviCivita: q[r] = levi_civita_residual_norm(p, y); break;
        }
        auto flips = [](double u, double v) { return (u < 0.0 && v > 0.0) || (u > 0.0 && v < 0.0) || (u == 0.0) != (v == 0.0); };
        const double zy = idx[5] > 0 && flips(q[r - 1], q[r]) ? 1.0 : 0.0;
        const double zp = axis >= 0 && idx[axis] > 0 && flips(q[r - stride], q[r]) ? 1.0 : 0.0;
        t.rows.push_back({static_cast<double>(p.m), p.eps, p.lambda, p.a, p.M, y, q[r], zy, zp});
    }
    return t;
}

}  // namespace efg
