#include "efg/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "efg/errors.hpp"

namespace efg {

namespace {

// Kronrod abscissae on [-1, 1] (positive half, descending); Gauss nodes are the odd entries.
constexpr double kXgk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                            0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                            0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                            0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                            0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                            0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                            0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                           0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b;
    std::vector<double> kronrod;
    double error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gk15(const std::function<void(double, std::span<double>)>& f, std::size_t m, double a, double b,
           std::vector<double>& buf) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    Panel p{a, b, std::vector<double>(m, 0.0), 0.0};
    std::vector<double> gauss(m, 0.0);
    buf.resize(m);
    auto accumulate = [&](double x, double wk, double wg) {
        f(x, buf);
        for (std::size_t i = 0; i < m; ++i) {
            p.kronrod[i] += wk * buf[i];
            gauss[i] += wg * buf[i];
        }
    };
    accumulate(c, kWgk[7], kWg[3]);
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double wg = (j % 2 == 1) ? kWg[j / 2] : 0.0;
        accumulate(c - dx, kWgk[j], wg);
        accumulate(c + dx, kWgk[j], wg);
    }
    double err = 0.0;
    double mag = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        p.kronrod[i] *= h;
        gauss[i] *= h;
        err = std::max(err, std::fabs(p.kronrod[i] - gauss[i]));
        mag = std::max(mag, std::fabs(p.kronrod[i]));
    }
    // Differences at the level of rounding carry no information.
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * mag;
    p.error = err <= floor ? 0.0 : err;
    return p;
}

}  // namespace

VectorQuadResult integrate_vector(const std::function<void(double, std::span<double>)>& f, std::size_t m, double a,
                                  double b, const QuadOptions& opt) {
    VectorQuadResult r;
    r.value.assign(m, 0.0);
    if (a == b) return r;
    if (!(opt.abs_tol > 0.0 || opt.rel_tol > 0.0)) throw ParameterError("quadrature tolerance must be positive");
    const double sign = b < a ? -1.0 : 1.0;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);

    std::vector<double> buf;
    std::priority_queue<Panel> heap;
    heap.push(gk15(f, m, lo, hi, buf));
    std::vector<double> total = heap.top().kronrod;
    double total_err = heap.top().error;
    int panels = 1;
    auto tolerance = [&] {
        double mag = 0.0;
        for (double t : total) mag = std::max(mag, std::fabs(t));
        return std::max(opt.abs_tol, opt.rel_tol * mag);
    };
    while (total_err > tolerance()) {
        if (panels >= opt.max_panels) throw ConvergenceError("adaptive quadrature exceeded the panel budget");
        Panel worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Interval cannot be split further in floating point; accept it as is.
            worst.error = 0.0;
            heap.push(std::move(worst));
            total_err = 0.0;
            break;
        }
        Panel left = gk15(f, m, worst.a, mid, buf);
        Panel right = gk15(f, m, mid, worst.b, buf);
        for (std::size_t i = 0; i < m; ++i) total[i] += left.kronrod[i] + right.kronrod[i] - worst.kronrod[i];
        heap.push(std::move(left));
        heap.push(std::move(right));
        ++panels;
        // Re-sum the error from scratch to avoid drift from repeated subtraction.
        total_err = 0.0;
        auto copy = heap;
        while (!copy.empty()) {
            total_err += copy.top().error;
            copy.pop();
        }
    }
    // Final sum over panels in a fixed order for reproducibility.
    std::vector<Panel> all;
    while (!heap.empty()) {
        all.push_back(heap.top());
        heap.pop();
    }
    std::sort(all.begin(), all.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
    std::fill(r.value.begin(), r.value.end(), 0.0);
    for (const auto& p : all)
        for (std::size_t i = 0; i < m; ++i) r.value[i] += p.kronrod[i];
    for (double& v : r.value) v *= sign;
    r.error = total_err;
    r.panels = panels;
    return r;
}

QuadResult integrate(const std::function<double(double)>& f, double a, double b, const QuadOptions& opt) {
    auto vr = integrate_vector([&](double t, std::span<double> out) { out[0] = f(t); }, 1, a, b, opt);
    return {vr.value[0], vr.error, vr.panels};
}

// ---------------------------------------------------------------------------

namespace {

class CumulativeIntegralField final : public FieldImpl {
public:
    CumulativeIntegralField(FieldPtr integrand, int var, double lower, QuadOptions opt)
        : g_(std::move(integrand)), var_(var), lower_(lower), opt_(opt) {
        if (var_ < 0 || var_ >= g_->arity()) throw ShapeError("integration variable out of range");
    }

    int arity() const override { return g_->arity(); }

    Jet local_jet(std::span<const double> point, int order) const override {
        const int n = arity();
        const JetSpace& space = JetSpace::get(n, order);
        Jet out(space, 0.0);
        auto oc = out.coeffs();
        const double upper = point[static_cast<std::size_t>(var_)];

        // Coefficients without a var_ exponent come from integrating the integrand's jet.
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < space.size(); ++i)
            if (space.exponents(i)[static_cast<std::size_t>(var_)] == 0) slots.push_back(i);
        if (upper != lower_) {
            std::vector<double> p(point.begin(), point.end());
            auto integrand = [&](double t, std::span<double> dst) {
                p[static_cast<std::size_t>(var_)] = t;
                const Jet gj = g_->local_jet(p, order);
                auto gc = gj.coeffs();
                for (std::size_t k = 0; k < slots.size(); ++k) dst[k] = gc[slots[k]];
            };
            auto res = integrate_vector(integrand, slots.size(), lower_, upper, opt_);
            for (std::size_t k = 0; k < slots.size(); ++k) oc[slots[k]] = res.value[k];
        }
        // The rest follow from d/du_var F = integrand.
        if (order >= 1) {
            const Jet gj = g_->local_jet(point, order - 1);
            const JetSpace& gs = gj.space();
            auto gc = gj.coeffs();
            std::vector<int> alpha(static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < space.size(); ++i) {
                auto e = space.exponents(i);
                const int ev = e[static_cast<std::size_t>(var_)];
                if (ev == 0) continue;
                for (int k = 0; k < n; ++k) alpha[static_cast<std::size_t>(k)] = e[static_cast<std::size_t>(k)];
                alpha[static_cast<std::size_t>(var_)] -= 1;
                oc[i] = gc[gs.index(alpha)] / ev;
            }
        }
        return out;
    }

    FieldPtr partial(int var) const override {
        if (var == var_) return g_;
        FieldPtr dg = g_->partial(var);
        if (dg->is_zero()) return zero_field(arity());
        return cumulative_integral(dg, var_, lower_, opt_);
    }

    bool is_zero() const override { return g_->is_zero(); }
    std::string describe() const override { return "integral(" + g_->describe() + ")"; }

private:
    FieldPtr g_;
    int var_;
    double lower_;
    QuadOptions opt_;
};

}  // namespace

FieldPtr cumulative_integral(FieldPtr integrand, int var, double lower, QuadOptions opt) {
    if (integrand->is_zero()) return zero_field(integrand->arity());
    return std::make_shared<CumulativeIntegralField>(std::move(integrand), var, lower, opt);
}

}  // namespace efg
