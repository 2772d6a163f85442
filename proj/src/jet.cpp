#include "efg/jet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <unordered_map>

#include "efg/errors.hpp"

namespace efg {

namespace {

std::uint64_t encode(std::span<const std::uint8_t> e) {
    std::uint64_t key = 0;
    for (std::size_t i = 0; i < e.size(); ++i) key |= static_cast<std::uint64_t>(e[i]) << (4 * i);
    return key;
}

void enumerate_degree(int nvars, int deg, std::vector<std::uint8_t>& cur, int pos,
                      std::vector<std::uint8_t>& out) {
    if (pos == nvars - 1) {
        cur[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(deg);
        out.insert(out.end(), cur.begin(), cur.end());
        return;
    }
    for (int e = deg; e >= 0; --e) {
        cur[static_cast<std::size_t>(pos)] = static_cast<std::uint8_t>(e);
        enumerate_degree(nvars, deg - e, cur, pos + 1, out);
    }
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

std::map<std::pair<int, int>, std::unique_ptr<JetSpace>>& registry() {
    static std::map<std::pair<int, int>, std::unique_ptr<JetSpace>> r;
    return r;
}

}  // namespace

JetSpace::JetSpace(int nvars, int order) : nvars_(nvars), order_(order) {
    std::vector<std::uint8_t> cur(static_cast<std::size_t>(nvars), 0);
    for (int d = 0; d <= order; ++d) {
        enumerate_degree(nvars, d, cur, 0, exps_);
        upto_.push_back(exps_.size() / static_cast<std::size_t>(nvars));
        degree_.resize(upto_.back(), d);
    }
    const std::size_t n = size();
    lookup_.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) lookup_.emplace(encode(exponents(i)), static_cast<std::uint32_t>(i));

    std::vector<std::uint8_t> sum(static_cast<std::size_t>(nvars));
    row_start_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) {
        row_start_[i] = pairs_.size();
        const int room = order - degree_[i];
        const std::size_t jmax = upto_[static_cast<std::size_t>(room)];
        auto ei = exponents(i);
        for (std::size_t j = 0; j < jmax; ++j) {
            auto ej = exponents(j);
            for (int v = 0; v < nvars; ++v) sum[static_cast<std::size_t>(v)] = ei[static_cast<std::size_t>(v)] + ej[static_cast<std::size_t>(v)];
            pairs_.push_back({static_cast<std::uint32_t>(j), lookup_.at(encode(sum))});
        }
    }
    row_start_[n] = pairs_.size();

    deriv_.resize(static_cast<std::size_t>(nvars));
    for (int v = 0; v < nvars; ++v) {
        for (std::size_t i = 0; i < n; ++i) {
            auto e = exponents(i);
            if (e[static_cast<std::size_t>(v)] == 0) continue;
            std::vector<std::uint8_t> m(e.begin(), e.end());
            m[static_cast<std::size_t>(v)] -= 1;
            deriv_[static_cast<std::size_t>(v)].push_back(
                {static_cast<std::uint32_t>(i), lookup_.at(encode(m)), static_cast<double>(e[static_cast<std::size_t>(v)])});
        }
    }

    pred_.resize(n, {-1, 0});
    for (std::size_t i = 1; i < n; ++i) {
        auto e = exponents(i);
        int v = 0;
        while (e[static_cast<std::size_t>(v)] == 0) ++v;
        std::vector<std::uint8_t> m(e.begin(), e.end());
        m[static_cast<std::size_t>(v)] -= 1;
        pred_[i] = {v, lookup_.at(encode(m))};
    }
}

const JetSpace& JetSpace::get(int nvars, int order) {
    if (nvars < 1 || nvars > kMaxJetVars) throw ShapeError("jet variable count out of range: " + std::to_string(nvars));
    if (order < 0 || order > kMaxInternalOrder)
        throw UnsupportedOrderError("jet order out of range: " + std::to_string(order));
    thread_local const JetSpace* cache[kMaxJetVars + 1][kMaxInternalOrder + 1] = {};
    if (const JetSpace* hit = cache[nvars][order]) return *hit;
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto& reg = registry();
    auto key = std::make_pair(nvars, order);
    auto it = reg.find(key);
    if (it == reg.end()) it = reg.emplace(key, std::unique_ptr<JetSpace>(new JetSpace(nvars, order))).first;
    cache[nvars][order] = it->second.get();
    return *it->second;
}

std::size_t JetSpace::index(std::span<const int> alpha) const {
    if (alpha.size() != static_cast<std::size_t>(nvars_)) throw ShapeError("multi-index length mismatch");
    int deg = 0;
    std::vector<std::uint8_t> e(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        if (alpha[i] < 0) throw ShapeError("negative multi-index entry");
        deg += alpha[i];
        e[i] = static_cast<std::uint8_t>(alpha[i]);
    }
    if (deg > order_) throw UnsupportedOrderError("multi-index degree exceeds jet order");
    return lookup_.at(encode(e));
}

// ---------------------------------------------------------------------------

Jet::Jet(const JetSpace& space, double constant) : space_(&space), c_(space.size(), 0.0) { c_[0] = constant; }

Jet Jet::variable(const JetSpace& space, int var, double value) {
    Jet j(space, value);
    if (var < 0 || var >= space.nvars()) throw ShapeError("variable index out of range");
    if (space.order() >= 1) j.c_[1 + static_cast<std::size_t>(var)] = 1.0;
    return j;
}

double Jet::coeff(std::span<const int> alpha) const { return c_[space_->index(alpha)]; }

double Jet::partial(std::span<const int> alpha) const {
    double f = 1.0;
    for (int a : alpha)
        for (int k = 2; k <= a; ++k) f *= k;
    return coeff(alpha) * f;
}

double Jet::d(int var) const {
    if (order() < 1) throw UnsupportedOrderError("first derivative needs order >= 1");
    return c_[1 + static_cast<std::size_t>(var)];
}

double Jet::d2(int a, int b) const {
    std::vector<int> alpha(static_cast<std::size_t>(nvars()), 0);
    alpha[static_cast<std::size_t>(a)] += 1;
    alpha[static_cast<std::size_t>(b)] += 1;
    return partial(alpha);
}

Jet Jet::truncated(int order) const {
    if (order >= this->order()) return *this;
    Jet r;
    r.space_ = &JetSpace::get(nvars(), order);
    r.c_.assign(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(r.space_->size()));
    return r;
}

Jet Jet::derivative(int var) const {
    if (order() < 1) throw UnsupportedOrderError("cannot differentiate an order-0 jet");
    if (var < 0 || var >= nvars()) throw ShapeError("derivative variable out of range");
    Jet r(JetSpace::get(nvars(), order() - 1), 0.0);
    for (const auto& t : space_->derivative_table(var)) r.c_[t.dst] = t.factor * c_[t.src];
    return r;
}

Jet Jet::increment() const {
    Jet r = *this;
    r.c_[0] = 0.0;
    return r;
}

bool Jet::is_constant() const {
    for (std::size_t i = 1; i < c_.size(); ++i)
        if (c_[i] != 0.0) return false;
    return true;
}

Jet Jet::operator-() const {
    Jet r = *this;
    for (double& v : r.c_) v = -v;
    return r;
}

namespace {
void check_compatible(const Jet& a, const Jet& b) {
    if (!a.valid() || !b.valid()) throw ShapeError("operation on an empty jet");
    if (a.nvars() != b.nvars()) throw ShapeError("jets over different variable counts");
}
}  // namespace

Jet& Jet::operator+=(const Jet& o) {
    check_compatible(*this, o);
    if (o.order() < order()) *this = truncated(o.order());
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
}

Jet& Jet::operator-=(const Jet& o) {
    check_compatible(*this, o);
    if (o.order() < order()) *this = truncated(o.order());
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
}

Jet& Jet::operator*=(const Jet& o) {
    *this = *this * o;
    return *this;
}

Jet& Jet::operator/=(const Jet& o) {
    *this = *this / o;
    return *this;
}

Jet& Jet::operator+=(double s) {
    c_[0] += s;
    return *this;
}
Jet& Jet::operator-=(double s) {
    c_[0] -= s;
    return *this;
}
Jet& Jet::operator*=(double s) {
    for (double& v : c_) v *= s;
    return *this;
}
Jet& Jet::operator/=(double s) {
    for (double& v : c_) v /= s;
    return *this;
}

Jet operator+(Jet a, const Jet& b) { return a += b; }
Jet operator-(Jet a, const Jet& b) { return a -= b; }

Jet operator*(const Jet& a, const Jet& b) {
    check_compatible(a, b);
    const JetSpace& s = a.order() <= b.order() ? a.space() : b.space();
    Jet r(s, 0.0);
    auto out = r.coeffs();
    out[0] = 0.0;
    auto ac = a.coeffs();
    auto bc = b.coeffs();
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double ai = ac[i];
        if (ai == 0.0) continue;
        for (const auto& p : s.row(i)) out[p.k] += ai * bc[p.j];
    }
    return r;
}

Jet operator/(const Jet& a, const Jet& b) {
    if (b.is_constant()) return a / b.value();
    return a * reciprocal(b);
}

Jet operator+(Jet a, double s) { return a += s; }
Jet operator+(double s, Jet a) { return a += s; }
Jet operator-(Jet a, double s) { return a -= s; }
Jet operator-(double s, const Jet& a) { return (-a) += s; }
Jet operator*(Jet a, double s) { return a *= s; }
Jet operator*(double s, Jet a) { return a *= s; }
Jet operator/(Jet a, double s) { return a /= s; }
Jet operator/(double s, const Jet& a) { return reciprocal(a) *= s; }

Jet apply_series(const Jet& x, std::span<const double> taylor) {
    const int K = x.order();
    Jet delta = x.increment();
    Jet r(x.space(), taylor[static_cast<std::size_t>(K)]);
    for (int k = K - 1; k >= 0; --k) {
        r = r * delta;
        r += taylor[static_cast<std::size_t>(k)];
    }
    return r;
}

Jet reciprocal(const Jet& x) {
    const double x0 = x.value();
    if (x0 == 0.0) throw DomainError("division by a jet with zero value");
    std::vector<double> t(static_cast<std::size_t>(x.order()) + 1);
    double p = 1.0 / x0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = (k % 2 == 0 ? 1.0 : -1.0) * p;
        p /= x0;
    }
    return apply_series(x, t);
}

Jet exp(const Jet& x) {
    std::vector<double> t(static_cast<std::size_t>(x.order()) + 1);
    double e = std::exp(x.value());
    for (std::size_t k = 0; k < t.size(); ++k) {
        t[k] = e;
        e /= static_cast<double>(k + 1);
    }
    return apply_series(x, t);
}

Jet log(const Jet& x) {
    const double x0 = x.value();
    if (!(x0 > 0.0)) throw DomainError("log of a non-positive value");
    std::vector<double> t(static_cast<std::size_t>(x.order()) + 1);
    t[0] = std::log(x0);
    double p = x0;
    for (std::size_t k = 1; k < t.size(); ++k) {
        t[k] = (k % 2 == 1 ? 1.0 : -1.0) / (static_cast<double>(k) * p);
        p *= x0;
    }
    return apply_series(x, t);
}

namespace {
Jet trig(const Jet& x, int shift) {
    const double s = std::sin(x.value());
    const double c = std::cos(x.value());
    const double cyc[4] = {s, c, -s, -c};
    std::vector<double> t(static_cast<std::size_t>(x.order()) + 1);
    double fact = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        if (k > 0) fact *= static_cast<double>(k);
        t[k] = cyc[(k + static_cast<std::size_t>(shift)) % 4] / fact;
    }
    return apply_series(x, t);
}
}  // namespace

Jet sin(const Jet& x) { return trig(x, 0); }
Jet cos(const Jet& x) { return trig(x, 1); }

Jet pow(const Jet& x, double p) {
    const double x0 = x.value();
    const bool integral = std::floor(p) == p && std::fabs(p) < 1e9;
    if (integral && p >= 0.0) {
        const int ip = static_cast<int>(p);
        if (ip <= 3) {
            Jet r(x.space(), 1.0);
            for (int i = 0; i < ip; ++i) r = r * x;
            return r;
        }
    }
    if (!integral && !(x0 > 0.0)) throw DomainError("non-integer power of a non-positive value");
    if (integral && p < 0.0 && x0 == 0.0) throw DomainError("negative power of zero");
    std::vector<double> t(static_cast<std::size_t>(x.order()) + 1);
    double binom = 1.0;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double e = p - static_cast<double>(k);
        if (integral && p >= 0.0 && e < 0.0) {
            t[k] = 0.0;
        } else {
            t[k] = binom * std::pow(x0, e);
        }
        binom *= (p - static_cast<double>(k)) / static_cast<double>(k + 1);
    }
    return apply_series(x, t);
}

Jet sqrt(const Jet& x) {
    if (!(x.value() > 0.0)) throw DomainError("sqrt of a non-positive value");
    return pow(x, 0.5);
}

Jet abs(const Jet& x, double guard) {
    if (std::fabs(x.value()) <= guard) throw DomainError("abs evaluated at its non-smooth point");
    return x.value() > 0.0 ? x : -x;
}

Jet compose(const Jet& local, std::span<const Jet> args) {
    if (static_cast<int>(args.size()) != local.nvars()) throw ShapeError("compose: argument count mismatch");
    if (args.empty()) throw ShapeError("compose: no arguments");
    const int n = args[0].nvars();
    int R = local.order();
    for (const auto& a : args) {
        if (a.nvars() != n) throw ShapeError("compose: arguments over different spaces");
        R = std::min(R, a.order());
    }
    const JetSpace& out_space = JetSpace::get(n, R);
    const JetSpace& loc_space = JetSpace::get(local.nvars(), R);
    std::vector<Jet> delta;
    delta.reserve(args.size());
    for (const auto& a : args) delta.push_back(a.truncated(R).increment());
    const std::size_t m = loc_space.size();
    std::vector<Jet> powers(m);
    powers[0] = Jet(out_space, 1.0);
    auto lc = local.coeffs();
    Jet result(out_space, lc[0]);
    for (std::size_t i = 1; i < m; ++i) {
        const auto [v, prev] = loc_space.predecessor(i);
        powers[i] = powers[prev] * delta[static_cast<std::size_t>(v)];
        if (lc[i] != 0.0) result += powers[i] * lc[i];
    }
    return result;
}

Jet embed(const Jet& src, int nvars, std::span<const int> map) {
    if (static_cast<int>(map.size()) != src.nvars()) throw ShapeError("embed: map size mismatch");
    const JetSpace& dst = JetSpace::get(nvars, src.order());
    Jet r(dst, 0.0);
    const JetSpace& s = src.space();
    std::vector<int> alpha(static_cast<std::size_t>(nvars));
    auto sc = src.coeffs();
    auto rc = r.coeffs();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (sc[i] == 0.0) continue;
        std::fill(alpha.begin(), alpha.end(), 0);
        auto e = s.exponents(i);
        for (std::size_t k = 0; k < e.size(); ++k) alpha[static_cast<std::size_t>(map[k])] += e[k];
        rc[dst.index(alpha)] = sc[i];
    }
    return r;
}

}  // namespace efg
