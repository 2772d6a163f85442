#include "efg/random_fields.hpp"

#include <cmath>

namespace efg {

namespace {

Expr linear_combination(std::mt19937_64& rng, const std::vector<int>& vars, double scale) {
    std::uniform_real_distribution<double> coef(-scale, scale);
    std::uniform_real_distribution<double> phase(-3.0, 3.0);
    Expr e = ex::num(phase(rng));
    for (int v : vars) e = e + coef(rng) * ex::var(v);
    return e;
}

Expr bounded_piece(std::mt19937_64& rng, const Expr& arg) {
    switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
        case 0: return ex::sin(arg);
        case 1: return ex::cos(arg);
        case 2: return ex::sin(arg) * ex::cos(0.5 * arg);
        default: return (ex::exp(0.5 * ex::sin(arg)) - 1.0) / (std::exp(0.5) - 1.0);  // |.| <= 1
    }
}

}  // namespace

Expr random_smooth(std::mt19937_64& rng, const std::vector<int>& vars, double offset, double amplitude, int terms) {
    std::uniform_real_distribution<double> weight(0.2, 1.0);
    std::vector<double> w;
    double total = 0.0;
    for (int k = 0; k < terms; ++k) total += w.emplace_back(weight(rng));
    Expr e = ex::num(offset);
    for (int k = 0; k < terms; ++k) {
        const double c = amplitude * w[static_cast<std::size_t>(k)] / total;
        const double s = std::bernoulli_distribution(0.5)(rng) ? 1.0 : -1.0;
        e = e + (s * c) * bounded_piece(rng, linear_combination(rng, vars, 1.0));
    }
    return e;
}

Expr random_signed(std::mt19937_64& rng, const std::vector<int>& vars, int sign, double wiggle) {
    const double base = std::uniform_real_distribution<double>(1.0, 2.0)(rng);
    return static_cast<double>(sign) * random_smooth(rng, vars, base, wiggle * base);
}

Expr random_monotone(std::mt19937_64& rng, const std::vector<int>& vars, int var, double slope) {
    // Each sine piece c sin(k u_var + ...) has |d/du_var| <= |c k|; keep the sum below slope / 2.
    Expr e = slope * ex::var(var);
    std::uniform_real_distribution<double> freq(0.3, 1.5);
    double budget = 0.5 * std::fabs(slope);
    for (int t = 0; t < 2; ++t) {
        const double k = freq(rng);
        const double c = 0.5 * budget / k;
        Expr arg = k * ex::var(var) + linear_combination(rng, std::vector<int>{vars[0], vars[1]}, 0.8);
        e = e + c * ex::sin(arg);
    }
    return e;
}

}  // namespace efg
