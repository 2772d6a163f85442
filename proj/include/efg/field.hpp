#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "efg/jet.hpp"

namespace efg {

class FieldImpl;
using FieldPtr = std::shared_ptr<const FieldImpl>;

// A smooth scalar function of `arity` coordinates that can be pushed through jets.
// Implementations override at least one of evaluate / local_jet.
class FieldImpl : public std::enable_shared_from_this<FieldImpl> {
public:
    virtual ~FieldImpl() = default;
    virtual int arity() const = 0;

    // Jet of f(args) in the common space of the argument jets.
    virtual Jet evaluate(std::span<const Jet> args) const;
    // Jet of f at a point with respect to its own coordinates.
    virtual Jet local_jet(std::span<const double> point, int order) const;
    // Field of the partial derivative along one of its coordinates.
    virtual FieldPtr partial(int var) const;

    virtual bool is_zero() const { return false; }
    virtual std::string describe() const { return "field"; }

    double value(std::span<const double> point) const;
};

FieldPtr constant_field(int arity, double value);
FieldPtr zero_field(int arity);
// Field of `outer_arity` coordinates computing inner(u[map[0]], ..., u[map[m-1]]).
FieldPtr embed_field(FieldPtr inner, int outer_arity, std::vector<int> map);
// Derivative via local jets of one extra order (generic fallback).
FieldPtr derivative_field(FieldPtr base, int var);
// Arbitrary callable evaluated through local jets.
FieldPtr lambda_field(int arity, std::function<Jet(std::span<const double>, int)> fn, std::string name = "lambda");

// Per-coordinate closed intervals plus the excluded null section of the fiber coordinates.
class DomainBox {
public:
    DomainBox() = default;
    DomainBox(std::vector<std::pair<double, double>> bounds, std::vector<int> null_coords = {},
              double null_epsilon = 1e-8);
    static DomainBox unbounded(int arity, std::vector<int> null_coords = {}, double null_epsilon = 1e-8);

    int arity() const { return static_cast<int>(bounds_.size()); }
    const std::vector<std::pair<double, double>>& bounds() const { return bounds_; }
    const std::vector<int>& null_coords() const { return null_coords_; }
    double null_epsilon() const { return null_eps_; }

    bool inside(std::span<const double> p) const;
    // True when the fiber part of p lies within the epsilon ball of the zero section.
    bool near_null(std::span<const double> p) const;
    // Throws DomainError when p is outside or near the excluded set.
    void check(std::span<const double> p) const;

private:
    std::vector<std::pair<double, double>> bounds_;
    std::vector<int> null_coords_;
    double null_eps_ = 1e-8;
};

class ScalarField {
public:
    ScalarField() = default;
    ScalarField(FieldPtr impl, DomainBox domain);
    explicit ScalarField(FieldPtr impl);

    int arity() const { return impl_->arity(); }
    const FieldPtr& impl() const { return impl_; }
    const DomainBox& domain() const { return domain_; }
    bool valid() const { return impl_ != nullptr; }

    // Exact derivatives up to total order 4 at a domain point.
    Jet jet(std::span<const double> point, int order) const;
    double value(std::span<const double> point) const;
    // sum_alpha v^alpha d_alpha f at point.
    double directional_derivative(std::span<const double> point, std::span<const double> vec) const;

private:
    FieldPtr impl_;
    DomainBox domain_;
};

// Identity jets for a point: variable k carries value point[k].
std::vector<Jet> identity_jets(std::span<const double> point, int order);
std::vector<double> jet_values(std::span<const Jet> args);

}  // namespace efg
