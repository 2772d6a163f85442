#include "efg/dispersion.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/toms748_solve.hpp>

#include "efg/errors.hpp"
#include "efg/expr.hpp"

namespace efg {

namespace {

double factorial(int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

// Number of distinct orderings of a sorted index tuple.
double multiplicity(const std::vector<int>& key) {
    int counts[3] = {0, 0, 0};
    for (int i : key) ++counts[i];
    return factorial(static_cast<int>(key.size())) / (factorial(counts[0]) * factorial(counts[1]) * factorial(counts[2]));
}

double quad_form(const Eigen::Matrix3d& g, const Vec3& k) {
    double s = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s += g(i, j) * k[static_cast<std::size_t>(i)] * k[static_cast<std::size_t>(j)];
    return s;
}

constexpr int kTime = 4;     // y1 in the 8-d bundle
constexpr int kSpatial = 5;  // y2..y4

}  // namespace

void DispersionSpec::set_q(std::vector<int> indices, double value) {
    if (static_cast<int>(indices.size()) != 2 * r) throw ShapeError("q entry needs exactly 2r indices");
    for (int i : indices)
        if (i < 0 || i > 2) throw ShapeError("q indices run over 0..2");
    std::sort(indices.begin(), indices.end());
    if (value == 0.0)
        q.erase(indices);
    else
        q[indices] = value;
}

double DispersionSpec::q_at(std::vector<int> indices) const {
    std::sort(indices.begin(), indices.end());
    auto it = q.find(indices);
    return it == q.end() ? 0.0 : it->second;
}

double DispersionSpec::contract(const Vec3& v) const {
    double s = 0.0;
    for (const auto& [key, value] : q) {
        double prod = value * multiplicity(key);
        for (int i : key) prod *= v[static_cast<std::size_t>(i)];
        s += prod;
    }
    return s;
}

double DispersionSpec::q_norm() const {
    double s = 0.0;
    for (const auto& [key, value] : q) s += multiplicity(key) * value * value;
    return std::sqrt(s);
}

DispersionSpec DispersionSpec::scaled_q(double factor) const {
    DispersionSpec out = *this;
    for (auto& [key, value] : out.q) value *= factor;
    return out;
}

void DispersionSpec::validate() const {
    if (r < 1) throw ParameterError("dispersion order r must be at least 1");
    if (!(c > 0.0)) throw ParameterError("light speed c must be positive");
    if ((ghat - ghat.transpose()).cwiseAbs().maxCoeff() > 1e-14 * std::max(1.0, ghat.cwiseAbs().maxCoeff()))
        throw ParameterError("spatial metric must be symmetric");
    if (std::fabs(ghat.determinant()) < 1e-14) throw ParameterError("spatial metric must be invertible");
    for (const auto& [key, value] : q)
        if (static_cast<int>(key.size()) != 2 * r) throw ShapeError("q table rank differs from 2r");
}

double phonon_omega_squared(const Vec3& k, const PhononSpec& s) {
    const double k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    const double l = s.hbar / (2.0 * s.m0 * s.c_s);
    return s.c_s * s.c_s * k2 + s.c_s * s.c_s * l * l * k2 * k2;
}

double finsler_omega_squared(const Vec3& k, const DispersionSpec& s) {
    s.validate();
    const double Q = quad_form(s.ghat, k);
    const double c2 = s.c * s.c;
    if (s.q.empty()) return c2 * Q * Q;
    if (Q == 0.0) throw DomainError("dispersion relation is singular where the quadratic form vanishes");
    return c2 * Q * Q * (1.0 - s.contract(k) / (s.r * std::pow(Q, 2 * s.r)));
}

DispersionSpec phonon_as_dispersion(const PhononSpec& p, double c) {
    if (!(p.c_s > 0 && p.m0 > 0 && p.hbar > 0 && c > 0)) throw ParameterError("phonon constants must be positive");
    DispersionSpec s;
    s.r = 1;
    s.c = c;
    s.ghat = Eigen::Matrix3d::Identity() * (p.hbar / (2.0 * p.m0 * c));
    const double beta = -(p.c_s / c) * (p.c_s / c);
    for (int i = 0; i < 3; ++i) s.set_q({i, i}, beta);
    return s;
}

GeneratingFunction generating_from_q(const DispersionSpec& s, const std::vector<std::vector<double>>& probes) {
    s.validate();
    Expr G = ex::num(0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (s.ghat(i, j) != 0.0) G = G + s.ghat(i, j) * ex::var(kSpatial + i) * ex::var(kSpatial + j);
    Expr qy = ex::num(0.0);
    for (const auto& [key, value] : s.q) {
        Expr term = ex::num(value * multiplicity(key));
        for (int i : key) term = term * ex::var(kSpatial + i);
        qy = qy + term;
    }
    const Expr y1 = ex::var(kTime);
    // G [1 + (1/r) q / G^r] = G + (1/r) q / G^{r-1}
    Expr spatial = G;
    if (!s.q.empty()) spatial = s.r == 1 ? G + qy : G + (1.0 / s.r) * qy / ex::pow(G, static_cast<double>(s.r - 1));
    auto gf = GeneratingFunction::from_square(expr_field(-(y1 * y1) + spatial, 8, "L_q"), 4);

    for (const auto& p : probes) {
        if (p.size() != 8) throw ShapeError("generating-function probes are points of the 8-d bundle");
        const Vec3 y{p[kSpatial], p[kSpatial + 1], p[kSpatial + 2]};
        const double g = quad_form(s.ghat, y);
        const double bracket = 1.0 + s.contract(y) / (s.r * std::pow(g, s.r));
        if (!(bracket > 0.0)) throw ParameterError("deformation too large: the q-bracket is not positive at a probe");
    }
    return gf;
}

RoundtripReport roundtrip_check(const DispersionSpec& s, const std::vector<Vec3>& probes) {
    s.validate();
    auto run = [&](const DispersionSpec& spec, std::vector<RoundtripProbe>& out) {
        const auto gf = generating_from_q(spec);
        const double c2 = spec.c * spec.c;
        double worst = 0.0;
        for (const auto& k0 : probes) {
            const double Q = quad_form(spec.ghat, k0);
            if (!(Q > 0.0)) throw DomainError("roundtrip probes need a positive quadratic form");
            Vec3 k;
            for (int i = 0; i < 3; ++i) k[static_cast<std::size_t>(i)] = k0[static_cast<std::size_t>(i)] / std::sqrt(Q);
            Eigen::Vector3d ku(k[0], k[1], k[2]);
            const Eigen::Vector3d klow = spec.ghat * ku;

            // Newton on (1/2) dL/dy = k over the spatial fibers, from the undeformed solution.
            Eigen::Vector3d y = ku;
            std::vector<double> pt(8, 0.0);
            bool converged = false;
            for (int it = 0; it < 50 && !converged; ++it) {
                for (int i = 0; i < 3; ++i) pt[static_cast<std::size_t>(kSpatial + i)] = y(i);
                const Jet L = gf.L->local_jet(pt, 2);
                Eigen::Vector3d grad;
                Eigen::Matrix3d hess;
                for (int i = 0; i < 3; ++i) {
                    grad(i) = 0.5 * L.d(kSpatial + i);
                    for (int j = 0; j < 3; ++j) hess(i, j) = 0.5 * L.d2(kSpatial + i, kSpatial + j);
                }
                const Eigen::Vector3d step = hess.fullPivLu().solve(grad - klow);
                y -= step;
                converged = step.norm() <= 1e-15 * std::max(1.0, y.norm());
            }
            if (!converged) throw ConvergenceError("Legendre inversion did not converge");
            for (int i = 0; i < 3; ++i) pt[static_cast<std::size_t>(kSpatial + i)] = y(i);

            // Time fiber on the null cone, bracketed around the undeformed value.
            auto f = [&](double t) {
                pt[kTime] = t;
                return gf.L->value(pt);
            };
            pt[kTime] = 0.0;
            const double t0 = std::sqrt(std::max(0.0, quad_form(spec.ghat, {y(0), y(1), y(2)})));
            double lo = 0.5 * t0, hi = 2.0 * t0;
            if (!(f(lo) > 0.0 && f(hi) < 0.0)) throw ConvergenceError("null-cone root is not bracketed");
            std::uintmax_t iters = 200;
            auto root = boost::math::tools::toms748_solve(
                f, lo, hi, [](double a, double b) { return std::fabs(b - a) <= 1e-15 * std::fabs(b); }, iters);
            const double t = 0.5 * (root.first + root.second);

            RoundtripProbe pr;
            pr.k = k0;
            pr.omega2_root = c2 * t * t;
            pr.omega2_formula = finsler_omega_squared(k, spec);
            pr.discrepancy = std::fabs(pr.omega2_root - pr.omega2_formula) / std::max(1e-300, std::fabs(pr.omega2_formula));
            worst = std::max(worst, pr.discrepancy);
            out.push_back(pr);
        }
        return worst;
    };
    RoundtripReport rep;
    rep.max_discrepancy = run(s, rep.probes);
    std::vector<RoundtripProbe> halved;
    rep.halved_max_discrepancy = run(s.scaled_q(0.5), halved);
    rep.ratio = rep.halved_max_discrepancy > 0.0 ? rep.max_discrepancy / rep.halved_max_discrepancy : 0.0;
    return rep;
}

DispersionSpec random_dispersion(std::mt19937_64& rng, int r, double norm) {
    DispersionSpec s;
    s.r = r;
    std::normal_distribution<double> N(0.0, 1.0);
    // Every sorted tuple of length 2r over {0, 1, 2}.
    std::vector<int> key(static_cast<std::size_t>(2 * r), 0);
    while (true) {
        s.q[key] = N(rng);
        int pos = 2 * r - 1;
        while (pos >= 0 && key[static_cast<std::size_t>(pos)] == 2) --pos;
        if (pos < 0) break;
        const int v = key[static_cast<std::size_t>(pos)] + 1;
        for (int i = pos; i < 2 * r; ++i) key[static_cast<std::size_t>(i)] = v;
    }
    return s.scaled_q(norm / s.q_norm());
}

SlopeReport discrepancy_slope(const DispersionSpec& unit_q, const std::vector<double>& norms,
                              const std::vector<Vec3>& probes) {
    if (norms.size() < 2) throw ParameterError("slope needs at least two q-norms");
    SlopeReport rep;
    const double base = unit_q.q_norm();
    if (!(base > 0.0)) throw ParameterError("slope needs a nonzero q");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double n : norms) {
        const auto r = roundtrip_check(unit_q.scaled_q(n / base), probes);
        rep.norms.push_back(n);
        rep.discrepancies.push_back(r.max_discrepancy);
        const double x = std::log(n), y = std::log(r.max_discrepancy);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(norms.size());
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    return rep;
}

}  // namespace efg
