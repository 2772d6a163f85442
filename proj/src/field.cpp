#include "efg/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "efg/errors.hpp"

namespace efg {

std::vector<Jet> identity_jets(std::span<const double> point, int order) {
    const JetSpace& s = JetSpace::get(static_cast<int>(point.size()), order);
    std::vector<Jet> out;
    out.reserve(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) out.push_back(Jet::variable(s, static_cast<int>(k), point[k]));
    return out;
}

std::vector<double> jet_values(std::span<const Jet> args) {
    std::vector<double> v;
    v.reserve(args.size());
    for (const auto& a : args) v.push_back(a.value());
    return v;
}

namespace {
thread_local int g_default_depth = 0;

struct DepthGuard {
    DepthGuard() {
        if (++g_default_depth > 64) {
            --g_default_depth;
            throw Error("field implements neither evaluate nor local_jet");
        }
    }
    ~DepthGuard() { --g_default_depth; }
};
}  // namespace

namespace {
// When every argument is a bare coordinate of the outer space, composition reduces to re-indexing.
bool coordinate_map(std::span<const Jet> args, int order, std::vector<int>& map) {
    if (order < 1) return false;
    map.clear();
    const int n = args[0].nvars();
    for (const auto& a : args) {
        if (a.order() != order) return false;
        auto c = a.coeffs();
        int var = -1;
        for (int k = 0; k < n; ++k) {
            const double ck = c[1 + static_cast<std::size_t>(k)];
            if (ck == 0.0) continue;
            if (ck != 1.0 || var >= 0) return false;
            var = k;
        }
        if (var < 0 || std::find(map.begin(), map.end(), var) != map.end()) return false;
        for (std::size_t i = 1 + static_cast<std::size_t>(n); i < c.size(); ++i)
            if (c[i] != 0.0) return false;
        map.push_back(var);
    }
    return true;
}
}  // namespace

Jet FieldImpl::evaluate(std::span<const Jet> args) const {
    if (static_cast<int>(args.size()) != arity()) throw ShapeError("field evaluated with wrong argument count");
    DepthGuard guard;
    int order = kMaxInternalOrder;
    for (const auto& a : args) order = std::min(order, a.order());
    const auto p = jet_values(args);
    std::vector<int> map;
    if (coordinate_map(args, order, map)) {
        Jet local = local_jet(p, order);
        bool identity = static_cast<int>(map.size()) == args[0].nvars();
        for (std::size_t i = 0; identity && i < map.size(); ++i) identity = map[i] == static_cast<int>(i);
        return identity ? local : embed(local, args[0].nvars(), map);
    }
    return compose(local_jet(p, order), args);
}

Jet FieldImpl::local_jet(std::span<const double> point, int order) const {
    if (static_cast<int>(point.size()) != arity()) throw ShapeError("field evaluated with wrong point dimension");
    DepthGuard guard;
    const auto ids = identity_jets(point, order);
    return evaluate(ids);
}

double FieldImpl::value(std::span<const double> point) const { return local_jet(point, 0).value(); }

FieldPtr FieldImpl::partial(int var) const { return derivative_field(shared_from_this(), var); }

// ---------------------------------------------------------------------------

namespace {

class ConstantField final : public FieldImpl {
public:
    ConstantField(int arity, double v) : arity_(arity), v_(v) {}
    int arity() const override { return arity_; }
    Jet evaluate(std::span<const Jet> args) const override {
        if (args.empty()) throw ShapeError("constant field needs at least one argument jet");
        int order = kMaxInternalOrder;
        for (const auto& a : args) order = std::min(order, a.order());
        return Jet(args[0].nvars(), order, v_);
    }
    Jet local_jet(std::span<const double> point, int order) const override {
        return Jet(static_cast<int>(point.size()), order, v_);
    }
    FieldPtr partial(int) const override { return zero_field(arity_); }
    bool is_zero() const override { return v_ == 0.0; }
    std::string describe() const override {
        std::ostringstream os;
        os << "const(" << v_ << ")";
        return os.str();
    }

private:
    int arity_;
    double v_;
};

class EmbedField final : public FieldImpl {
public:
    EmbedField(FieldPtr inner, int outer, std::vector<int> map) : inner_(std::move(inner)), outer_(outer), map_(std::move(map)) {
        if (static_cast<int>(map_.size()) != inner_->arity()) throw ShapeError("embed map does not match inner arity");
        for (int m : map_)
            if (m < 0 || m >= outer_) throw ShapeError("embed map index out of range");
    }
    int arity() const override { return outer_; }
    Jet evaluate(std::span<const Jet> args) const override {
        if (static_cast<int>(args.size()) != outer_) throw ShapeError("embedded field evaluated with wrong argument count");
        std::vector<Jet> sub;
        sub.reserve(map_.size());
        for (int m : map_) sub.push_back(args[static_cast<std::size_t>(m)]);
        return inner_->evaluate(sub);
    }
    Jet local_jet(std::span<const double> point, int order) const override {
        std::vector<double> sub;
        for (int m : map_) sub.push_back(point[static_cast<std::size_t>(m)]);
        return embed(inner_->local_jet(sub, order), outer_, map_);
    }
    FieldPtr partial(int var) const override {
        auto it = std::find(map_.begin(), map_.end(), var);
        if (it == map_.end()) return zero_field(outer_);
        const int i = static_cast<int>(it - map_.begin());
        auto d = inner_->partial(i);
        if (d->is_zero()) return zero_field(outer_);
        return embed_field(d, outer_, map_);
    }
    bool is_zero() const override { return inner_->is_zero(); }
    std::string describe() const override { return "embed(" + inner_->describe() + ")"; }

private:
    FieldPtr inner_;
    int outer_;
    std::vector<int> map_;
};

class DerivativeField final : public FieldImpl {
public:
    DerivativeField(FieldPtr base, int var) : base_(std::move(base)), var_(var) {}
    int arity() const override { return base_->arity(); }
    Jet local_jet(std::span<const double> point, int order) const override {
        return base_->local_jet(point, order + 1).derivative(var_);
    }
    std::string describe() const override { return "d" + std::to_string(var_) + "(" + base_->describe() + ")"; }

private:
    FieldPtr base_;
    int var_;
};

class LambdaField final : public FieldImpl {
public:
    LambdaField(int arity, std::function<Jet(std::span<const double>, int)> fn, std::string name)
        : arity_(arity), fn_(std::move(fn)), name_(std::move(name)) {}
    int arity() const override { return arity_; }
    Jet local_jet(std::span<const double> point, int order) const override { return fn_(point, order); }
    std::string describe() const override { return name_; }

private:
    int arity_;
    std::function<Jet(std::span<const double>, int)> fn_;
    std::string name_;
};

}  // namespace

FieldPtr constant_field(int arity, double value) { return std::make_shared<ConstantField>(arity, value); }
FieldPtr zero_field(int arity) { return constant_field(arity, 0.0); }

FieldPtr embed_field(FieldPtr inner, int outer_arity, std::vector<int> map) {
    bool identity = inner->arity() == outer_arity;
    for (std::size_t i = 0; identity && i < map.size(); ++i) identity = map[i] == static_cast<int>(i);
    if (identity) return inner;
    return std::make_shared<EmbedField>(std::move(inner), outer_arity, std::move(map));
}

FieldPtr derivative_field(FieldPtr base, int var) { return std::make_shared<DerivativeField>(std::move(base), var); }

FieldPtr lambda_field(int arity, std::function<Jet(std::span<const double>, int)> fn, std::string name) {
    return std::make_shared<LambdaField>(arity, std::move(fn), std::move(name));
}

// ---------------------------------------------------------------------------

DomainBox::DomainBox(std::vector<std::pair<double, double>> bounds, std::vector<int> null_coords, double null_epsilon)
    : bounds_(std::move(bounds)), null_coords_(std::move(null_coords)), null_eps_(null_epsilon) {
    for (std::size_t i = 0; i < bounds_.size(); ++i)
        if (!(bounds_[i].first < bounds_[i].second))
            throw ShapeError("domain box needs lower < upper for coordinate " + std::to_string(i));
    for (int c : null_coords_)
        if (c < 0 || c >= arity()) throw ShapeError("null-section coordinate out of range");
    if (!(null_eps_ >= 0.0)) throw ShapeError("null-section epsilon must be non-negative");
}

DomainBox DomainBox::unbounded(int arity, std::vector<int> null_coords, double null_epsilon) {
    const double inf = std::numeric_limits<double>::infinity();
    return DomainBox(std::vector<std::pair<double, double>>(static_cast<std::size_t>(arity), {-inf, inf}),
                     std::move(null_coords), null_epsilon);
}

bool DomainBox::inside(std::span<const double> p) const {
    if (p.size() != bounds_.size()) return false;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= bounds_[i].first && p[i] <= bounds_[i].second)) return false;
    return true;
}

bool DomainBox::near_null(std::span<const double> p) const {
    if (null_coords_.empty()) return false;
    double r2 = 0.0;
    for (int c : null_coords_) r2 += p[static_cast<std::size_t>(c)] * p[static_cast<std::size_t>(c)];
    return std::sqrt(r2) <= null_eps_;
}

void DomainBox::check(std::span<const double> p) const {
    if (p.size() != bounds_.size()) throw ShapeError("point dimension does not match the domain");
    if (!inside(p)) throw DomainError("point outside the domain box");
    if (near_null(p)) throw DomainError("point within the excluded null-section ball");
}

ScalarField::ScalarField(FieldPtr impl, DomainBox domain) : impl_(std::move(impl)), domain_(std::move(domain)) {
    if (domain_.arity() != impl_->arity()) throw ShapeError("domain arity does not match the field");
}

ScalarField::ScalarField(FieldPtr impl) : impl_(std::move(impl)) { domain_ = DomainBox::unbounded(impl_->arity()); }

Jet ScalarField::jet(std::span<const double> point, int order) const {
    if (order < 0 || order > kMaxUserOrder)
        throw UnsupportedOrderError("derivative order " + std::to_string(order) + " exceeds the supported maximum of 4");
    domain_.check(point);
    return impl_->local_jet(point, order);
}

double ScalarField::value(std::span<const double> point) const { return jet(point, 0).value(); }

double ScalarField::directional_derivative(std::span<const double> point, std::span<const double> vec) const {
    if (static_cast<int>(vec.size()) != arity()) throw ShapeError("frame vector length does not match field arity");
    const Jet j = jet(point, 1);
    double s = 0.0;
    for (std::size_t k = 0; k < vec.size(); ++k) s += vec[k] * j.d(static_cast<int>(k));
    return s;
}

}  // namespace efg
