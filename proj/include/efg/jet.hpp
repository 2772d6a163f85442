#pragma once

// Truncated multivariate Taylor arithmetic.
//
// A Jet stores Taylor coefficients c_alpha = (d^alpha f)(p) / alpha! for all
// multi-indices alpha with |alpha| <= order.  Monomials are enumerated graded by
// total degree, so the coefficients of a lower-order jet form a prefix of the
// higher-order layout and truncation is a resize.

#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

namespace efg {

inline constexpr int kMaxUserOrder = 4;
inline constexpr int kMaxInternalOrder = 10;
inline constexpr int kMaxJetVars = 16;

class JetSpace {
public:
    static const JetSpace& get(int nvars, int order);

    int nvars() const { return nvars_; }
    int order() const { return order_; }
    std::size_t size() const { return degree_.size(); }
    // Number of monomials of total degree <= k (k <= order()).
    std::size_t size_upto(int k) const { return upto_[static_cast<std::size_t>(k)]; }

    int degree(std::size_t idx) const { return degree_[idx]; }
    std::span<const std::uint8_t> exponents(std::size_t idx) const {
        return {exps_.data() + idx * static_cast<std::size_t>(nvars_), static_cast<std::size_t>(nvars_)};
    }
    // Index of a multi-index; throws ShapeError when absent.
    std::size_t index(std::span<const int> alpha) const;

    struct Pair {
        std::uint32_t j, k;
    };
    // Product table: row i lists (j, k) with alpha_i + alpha_j = alpha_k, |alpha_k| <= order.
    std::span<const Pair> row(std::size_t i) const {
        return {pairs_.data() + row_start_[i], row_start_[i + 1] - row_start_[i]};
    }

    struct Deriv {
        std::uint32_t src, dst;
        double factor;
    };
    // d/du_var maps this space to the space of order-1 (dst indices into the smaller space).
    std::span<const Deriv> derivative_table(int var) const { return deriv_[static_cast<std::size_t>(var)]; }

    // For idx > 0: a variable v with alpha_v > 0 and the index of alpha - e_v.
    std::pair<int, std::uint32_t> predecessor(std::size_t idx) const { return pred_[idx]; }

private:
    JetSpace(int nvars, int order);
    int nvars_;
    int order_;
    std::vector<std::uint8_t> exps_;
    std::vector<int> degree_;
    std::vector<std::size_t> upto_;
    std::vector<std::size_t> row_start_;
    std::vector<Pair> pairs_;
    std::vector<std::vector<Deriv>> deriv_;
    std::unordered_map<std::uint64_t, std::uint32_t> lookup_;
    std::vector<std::pair<int, std::uint32_t>> pred_;
};

class Jet {
public:
    Jet() = default;
    Jet(const JetSpace& space, double constant);
    Jet(int nvars, int order, double constant) : Jet(JetSpace::get(nvars, order), constant) {}
    static Jet variable(const JetSpace& space, int var, double value);
    static Jet variable(int nvars, int order, int var, double value) {
        return variable(JetSpace::get(nvars, order), var, value);
    }

    bool valid() const { return space_ != nullptr; }
    const JetSpace& space() const { return *space_; }
    int nvars() const { return space_->nvars(); }
    int order() const { return space_->order(); }
    double value() const { return c_[0]; }
    std::span<const double> coeffs() const { return c_; }
    std::span<double> coeffs() { return c_; }

    // Taylor coefficient and partial derivative for a multi-index (per-variable exponents).
    double coeff(std::span<const int> alpha) const;
    double partial(std::span<const int> alpha) const;
    double partial(std::initializer_list<int> alpha) const {
        return partial(std::span<const int>(alpha.begin(), alpha.size()));
    }
    // First derivative along a variable (needs order >= 1).
    double d(int var) const;
    // Second derivative d^2 / du_a du_b (needs order >= 2).
    double d2(int a, int b) const;

    Jet truncated(int order) const;
    Jet derivative(int var) const;
    // Same coefficients with the constant term removed.
    Jet increment() const;
    bool is_constant() const;

    Jet operator-() const;
    Jet& operator+=(const Jet& o);
    Jet& operator-=(const Jet& o);
    Jet& operator*=(const Jet& o);
    Jet& operator/=(const Jet& o);
    Jet& operator+=(double s);
    Jet& operator-=(double s);
    Jet& operator*=(double s);
    Jet& operator/=(double s);

private:
    const JetSpace* space_ = nullptr;
    std::vector<double> c_;
};

Jet operator+(Jet a, const Jet& b);
Jet operator-(Jet a, const Jet& b);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet operator+(Jet a, double s);
Jet operator+(double s, Jet a);
Jet operator-(Jet a, double s);
Jet operator-(double s, const Jet& a);
Jet operator*(Jet a, double s);
Jet operator*(double s, Jet a);
Jet operator/(Jet a, double s);
Jet operator/(double s, const Jet& a);

// f(x) = sum_k taylor[k] * (x - x0)^k truncated at the jet order; taylor[k] = f^(k)(x0)/k!.
Jet apply_series(const Jet& x, std::span<const double> taylor);

Jet reciprocal(const Jet& x);
Jet exp(const Jet& x);
Jet log(const Jet& x);
Jet sin(const Jet& x);
Jet cos(const Jet& x);
Jet sqrt(const Jet& x);
Jet pow(const Jet& x, double p);
// |x| away from zero; throws DomainError when |x0| <= guard.
Jet abs(const Jet& x, double guard = 1e-12);

// Jet of f(g_1(u), ..., g_m(u)) given the local jet of f at (g_1(p), ..., g_m(p)).
Jet compose(const Jet& local, std::span<const Jet> args);

// Re-index a jet over a subset of variables into a larger space: var i of src -> var map[i].
Jet embed(const Jet& src, int nvars, std::span<const int> map);

}  // namespace efg
