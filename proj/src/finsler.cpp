#include "efg/finsler.hpp"

#include <cmath>
#include <mutex>
#include <numeric>

#include "efg/errors.hpp"
#include "efg/linalg.hpp"

namespace efg {

namespace {

class ScaledField final : public FieldImpl {
public:
    ScaledField(FieldPtr base, double s) : base_(std::move(base)), s_(s) {}
    int arity() const override { return base_->arity(); }
    Jet local_jet(std::span<const double> p, int order) const override { return base_->local_jet(p, order) * s_; }
    Jet evaluate(std::span<const Jet> args) const override { return base_->evaluate(args) * s_; }
    FieldPtr partial(int var) const override {
        auto d = base_->partial(var);
        if (d->is_zero()) return zero_field(arity());
        return std::make_shared<ScaledField>(d, s_);
    }
    bool is_zero() const override { return s_ == 0.0 || base_->is_zero(); }
    std::string describe() const override { return std::to_string(s_) + "*" + base_->describe(); }

private:
    FieldPtr base_;
    double s_;
};

bool zero_jet(const Jet& j) { return j.is_constant() && j.value() == 0.0; }

}  // namespace

// ---------------------------------------------------------------------------

SymmetricFields::SymmetricFields(int n, int arity) : n_(n), arity_(arity) {
    if (n < 1) throw ShapeError("symmetric block needs n >= 1");
    upper_.assign(static_cast<std::size_t>(n * (n + 1) / 2), zero_field(arity));
}

SymmetricFields SymmetricFields::diagonal(std::vector<FieldPtr> entries) {
    if (entries.empty()) throw ShapeError("empty diagonal");
    SymmetricFields s(static_cast<int>(entries.size()), entries[0]->arity());
    for (int i = 0; i < s.n(); ++i) s.set(i, i, entries[static_cast<std::size_t>(i)]);
    return s;
}

std::size_t SymmetricFields::slot(int i, int j) const {
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n_) throw ShapeError("symmetric block index out of range");
    return static_cast<std::size_t>(i * n_ - i * (i - 1) / 2 + (j - i));
}

void SymmetricFields::set(int i, int j, FieldPtr f) {
    if (f->arity() != arity_) throw ShapeError("block entry arity mismatch");
    upper_[slot(i, j)] = std::move(f);
}

std::vector<Jet> SymmetricFields::jets(std::span<const double> point, int order) const {
    std::vector<Jet> up;
    up.reserve(upper_.size());
    for (const auto& f : upper_) up.push_back(f->local_jet(point, order));
    std::vector<Jet> out;
    out.reserve(static_cast<std::size_t>(n_ * n_));
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j) out.push_back(up[slot(i, j)]);
    return out;
}

Eigen::MatrixXd SymmetricFields::values(std::span<const double> point) const {
    Eigen::MatrixXd m(n_, n_);
    for (int i = 0; i < n_; ++i)
        for (int j = i; j < n_; ++j) m(i, j) = m(j, i) = (*this)(i, j)->value(point);
    return m;
}

NConnection NConnection::zero(int n, int arity) {
    NConnection c;
    c.n = n;
    c.arity = arity;
    c.coeff.assign(static_cast<std::size_t>(n * n), zero_field(arity));
    return c;
}

void NConnection::set(int i, int a, FieldPtr f) {
    if (f->arity() != arity) throw ShapeError("N-connection coefficient arity mismatch");
    coeff[static_cast<std::size_t>(i * n + a)] = std::move(f);
}

std::vector<Jet> NConnection::jets(std::span<const double> point, int order) const {
    std::vector<Jet> out;
    out.reserve(coeff.size());
    for (const auto& f : coeff) out.push_back(f->local_jet(point, order));
    return out;
}

Eigen::MatrixXd NConnection::values(std::span<const double> point) const {
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) m(i, a) = at(i, a)->value(point);
    return m;
}

SasakiData make_sasaki(SymmetricFields g, SymmetricFields h, NConnection N, double lP, DomainBox domain) {
    const int n = g.n();
    if (h.n() != n || N.n != n) throw ShapeError("h-block, v-block and N-connection dimensions differ");
    if (g.arity() != 2 * n || h.arity() != 2 * n || N.arity != 2 * n)
        throw ShapeError("tangent-bundle fields must take 2n coordinates");
    if (domain.arity() == 0) domain = DomainBox::unbounded(2 * n);
    if (domain.arity() != 2 * n) throw ShapeError("domain arity does not match the bundle");
    return SasakiData{MetricBlocks{std::move(g), std::move(h), lP}, std::move(N), std::move(domain)};
}

// ---------------------------------------------------------------------------

namespace {
std::vector<int> fiber_coords(int n) {
    std::vector<int> c(static_cast<std::size_t>(n));
    std::iota(c.begin(), c.end(), n);
    return c;
}
}  // namespace

GeneratingFunction GeneratingFunction::from_square(FieldPtr L, int n) {
    if (n < 1 || n > 8) throw ShapeError("base dimension out of range");
    if (L->arity() != 2 * n) throw ShapeError("generating function must take 2n coordinates");
    GeneratingFunction gf;
    gf.n = n;
    gf.L = std::move(L);
    gf.domain = DomainBox::unbounded(2 * n, fiber_coords(n));
    return gf;
}

GeneratingFunction GeneratingFunction::from_norm(FieldPtr F, int n) {
    FieldPtr sq = lambda_field(F->arity(), [F](std::span<const double> p, int order) {
        Jet f = F->local_jet(p, order);
        return f * f;
    }, "square(" + F->describe() + ")");
    return from_square(sq, n);
}

Eigen::MatrixXd hessian_metric(const GeneratingFunction& gf, std::span<const double> point) {
    gf.domain.check(point);
    const int n = gf.n;
    const Jet L = gf.L->local_jet(point, 2);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = 0.5 * L.d2(n + i, n + j);
    double det = 0.0;
    if (is_degenerate(m, gf.degeneracy_threshold, &det)) throw DegeneracyError("degenerate Hessian metric", det);
    return m;
}

HomogeneityReport check_homogeneity(const GeneratingFunction& gf, const std::vector<std::vector<double>>& points,
                                    std::span<const double> betas) {
    HomogeneityReport r;
    for (const auto& p : points) {
        const double F = std::sqrt(std::fabs(gf.L->value(p)));
        for (double beta : betas) {
            std::vector<double> q = p;
            for (int a = 0; a < gf.n; ++a) q[static_cast<std::size_t>(gf.n + a)] *= beta;
            const double Fb = std::sqrt(std::fabs(gf.L->value(q)));
            const double dev = std::fabs(Fb - beta * F) / (std::fabs(beta * F) + 1e-30);
            if (dev > r.max_deviation || r.worst_point.empty()) {
                r.max_deviation = std::max(r.max_deviation, dev);
                r.worst_point = p;
                r.worst_beta = beta;
            }
        }
    }
    r.pass = r.max_deviation <= gf.homogeneity_tolerance;
    return r;
}

std::vector<Jet> semispray_jets(const GeneratingFunction& gf, std::span<const double> point, int order) {
    const int n = gf.n;
    const auto N = static_cast<std::size_t>(n);
    const Jet L = gf.L->local_jet(point, order + 2);
    std::vector<Jet> dLdy;
    for (int j = 0; j < n; ++j) dLdy.push_back(L.derivative(n + j));
    std::vector<Jet> hess;
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) hess.push_back(dLdy[static_cast<std::size_t>(j)].derivative(n + k) * 0.5);
    double det = 0.0;
    if (is_degenerate(jet_values(hess, n), gf.degeneracy_threshold, &det))
        throw DegeneracyError("degenerate Hessian metric", det);
    const auto ginv = jet_inverse(hess, n);
    const JetSpace& s = JetSpace::get(2 * n, order);
    std::vector<Jet> term;
    for (int j = 0; j < n; ++j) {
        Jet t = -L.derivative(j).truncated(order);
        for (int i = 0; i < n; ++i)
            t += Jet::variable(s, n + i, point[N + static_cast<std::size_t>(i)]) *
                 dLdy[static_cast<std::size_t>(j)].derivative(i);
        term.push_back(std::move(t));
    }
    std::vector<Jet> G;
    for (std::size_t k = 0; k < N; ++k) {
        Jet acc(s, 0.0);
        for (std::size_t j = 0; j < N; ++j) acc += ginv[k * N + j] * term[j];
        G.push_back(acc * 0.25);
    }
    return G;
}

Eigen::VectorXd semispray(const GeneratingFunction& gf, std::span<const double> point) {
    gf.domain.check(point);
    const auto G = semispray_jets(gf, point, 0);
    Eigen::VectorXd v(gf.n);
    for (int k = 0; k < gf.n; ++k) v(k) = G[static_cast<std::size_t>(k)].value();
    return v;
}

namespace {

class CanonicalCache {
public:
    explicit CanonicalCache(GeneratingFunction gf) : gf_(std::move(gf)) {}
    const GeneratingFunction& gf() const { return gf_; }

    Jet get(std::span<const double> p, int order, std::size_t slot) const {
        std::lock_guard<std::mutex> lock(mu_);
        if (order != order_ || !std::equal(p.begin(), p.end(), point_.begin(), point_.end())) {
            const int n = gf_.n;
            const auto G = semispray_jets(gf_, p, order + 1);
            std::vector<Jet> N;
            for (int j = 0; j < n; ++j)
                for (int a = 0; a < n; ++a) N.push_back(G[static_cast<std::size_t>(a)].derivative(n + j));
            N_ = std::move(N);
            point_.assign(p.begin(), p.end());
            order_ = order;
        }
        return N_[slot];
    }

private:
    GeneratingFunction gf_;
    mutable std::mutex mu_;
    mutable std::vector<double> point_;
    mutable int order_ = -1;
    mutable std::vector<Jet> N_;
};

}  // namespace

NConnection canonical_nconnection(const GeneratingFunction& gf) {
    auto cache = std::make_shared<CanonicalCache>(gf);
    NConnection c = NConnection::zero(gf.n, 2 * gf.n);
    for (int j = 0; j < gf.n; ++j)
        for (int a = 0; a < gf.n; ++a) {
            const auto slot = static_cast<std::size_t>(j * gf.n + a);
            c.set(j, a, lambda_field(2 * gf.n, [cache, slot](std::span<const double> p, int order) {
                return cache->get(p, order, slot);
            }, "canonicalN"));
        }
    return c;
}

SymmetricFields hessian_fields(const GeneratingFunction& gf) {
    const int n = gf.n;
    SymmetricFields s(n, 2 * n);
    for (int i = 0; i < n; ++i) {
        auto Li = gf.L->partial(n + i);
        for (int j = i; j < n; ++j) {
            auto Lij = Li->partial(n + j);
            s.set(i, j, Lij->is_zero() ? zero_field(2 * n) : std::make_shared<ScaledField>(Lij, 0.5));
        }
    }
    return s;
}

SasakiData sasaki_lift(const GeneratingFunction& gf, const NConnection& N, double lP) {
    auto g = hessian_fields(gf);
    return make_sasaki(g, g, N, lP, gf.domain);
}

Eigen::MatrixXd assemble_coordinate_metric(const SasakiData& data, std::span<const double> point) {
    data.domain.check(point);
    const int n = data.n();
    const Eigen::MatrixXd g = data.blocks.g.values(point);
    const Eigen::MatrixXd H = data.blocks.lP * data.blocks.lP * data.blocks.h.values(point);
    const Eigen::MatrixXd N = data.nconn.values(point);
    Eigen::MatrixXd G(2 * n, 2 * n);
    G.topLeftCorner(n, n) = g + N * H * N.transpose();
    G.topRightCorner(n, n) = N * H;
    G.bottomLeftCorner(n, n) = H * N.transpose();
    G.bottomRightCorner(n, n) = H;
    return G;
}

RecoveredBlocks recover_blocks(const Eigen::MatrixXd& G, int n, double lP) {
    if (G.rows() != 2 * n || G.cols() != 2 * n) throw ShapeError("coordinate metric must be 2n x 2n");
    if (lP == 0.0) throw DegeneracyError("cannot recover blocks with lP = 0", 0.0);
    const Eigen::MatrixXd H = G.bottomRightCorner(n, n);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
    if (!lu.isInvertible()) throw DegeneracyError("v-block of the coordinate metric is singular", H.determinant());
    RecoveredBlocks r;
    r.N = lu.solve(G.bottomLeftCorner(n, n)).transpose();
    r.h = H / (lP * lP);
    r.g = G.topLeftCorner(n, n) - r.N * H * r.N.transpose();
    return r;
}

namespace {

class SasakiCoordinateMetric final : public CoordinateMetric {
public:
    explicit SasakiCoordinateMetric(SasakiData d) : d_(std::move(d)) {}
    int dim() const override { return d_.dim(); }
    std::vector<Jet> jets(std::span<const double> p, int order) const override {
        const int n = d_.n();
        const auto D = static_cast<std::size_t>(2 * n);
        const auto N = static_cast<std::size_t>(n);
        const auto g = d_.blocks.g.jets(p, order);
        auto h = d_.blocks.h.jets(p, order);
        const double s = d_.blocks.lP * d_.blocks.lP;
        for (auto& x : h) x *= s;
        const auto Nj = d_.nconn.jets(p, order);
        std::vector<Jet> NH;  // (N H)_{i b}
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t b = 0; b < N; ++b) {
                Jet acc(g[0].space(), 0.0);
                for (std::size_t a = 0; a < N; ++a)
                    if (!zero_jet(Nj[i * N + a])) acc += Nj[i * N + a] * h[a * N + b];
                NH.push_back(std::move(acc));
            }
        std::vector<Jet> out(D * D);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                Jet acc = g[i * N + j];
                for (std::size_t b = 0; b < N; ++b)
                    if (!zero_jet(Nj[j * N + b])) acc += NH[i * N + b] * Nj[j * N + b];
                out[i * D + j] = std::move(acc);
            }
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t b = 0; b < N; ++b) {
                out[i * D + N + b] = NH[i * N + b];
                out[(N + b) * D + i] = NH[i * N + b];
            }
        for (std::size_t a = 0; a < N; ++a)
            for (std::size_t b = 0; b < N; ++b) out[(N + a) * D + N + b] = h[a * N + b];
        return out;
    }

private:
    SasakiData d_;
};

class FieldCoordinateMetric final : public CoordinateMetric {
public:
    explicit FieldCoordinateMetric(SymmetricFields m) : m_(std::move(m)) {
        if (m_.arity() != m_.n()) throw ShapeError("coordinate metric entries must take dim coordinates");
    }
    int dim() const override { return m_.n(); }
    std::vector<Jet> jets(std::span<const double> p, int order) const override { return m_.jets(p, order); }

private:
    SymmetricFields m_;
};

}  // namespace

std::shared_ptr<const CoordinateMetric> sasaki_coordinate_metric(SasakiData data) {
    return std::make_shared<SasakiCoordinateMetric>(std::move(data));
}

std::shared_ptr<const CoordinateMetric> field_coordinate_metric(SymmetricFields entries) {
    return std::make_shared<FieldCoordinateMetric>(std::move(entries));
}

// ---------------------------------------------------------------------------

Jet frame_derivative(const Jet& f, int alpha, int n, std::span<const Jet> Njets) {
    if (f.order() < 1) throw UnsupportedOrderError("frame derivative of an order-0 jet");
    Jet d = f.derivative(alpha);
    if (alpha >= n) return d;
    for (int a = 0; a < n; ++a) {
        const Jet& Na = Njets[static_cast<std::size_t>(alpha * n + a)];
        if (zero_jet(Na)) continue;
        d -= (Na.order() == d.order() ? Na : Na.truncated(d.order())) * f.derivative(n + a);
    }
    return d;
}

std::vector<double> nconnection_curvature_from_jets(std::span<const Jet> Nj, int n) {
    const auto N = static_cast<std::size_t>(n);
    std::vector<double> om(N * N * N, 0.0);
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double v = frame_derivative(Nj[static_cast<std::size_t>(j * n + a)], i, n, Nj).value() -
                                 frame_derivative(Nj[static_cast<std::size_t>(i * n + a)], j, n, Nj).value();
                om[(static_cast<std::size_t>(a) * N + static_cast<std::size_t>(i)) * N + static_cast<std::size_t>(j)] = v;
                om[(static_cast<std::size_t>(a) * N + static_cast<std::size_t>(j)) * N + static_cast<std::size_t>(i)] = -v;
            }
    return om;
}

std::vector<double> anholonomy_from_jets(std::span<const Jet> Nj, int n) {
    const auto N = static_cast<std::size_t>(n);
    const std::size_t D = 2 * N;
    std::vector<double> W(D * D * D, 0.0);
    auto at = [&](std::size_t mu, std::size_t g, std::size_t d) -> double& { return W[(mu * D + g) * D + d]; };
    const auto om = nconnection_curvature_from_jets(Nj, n);
    for (std::size_t a = 0; a < N; ++a) {
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) at(N + a, i, j) = -om[(a * N + i) * N + j];
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t b = 0; b < N; ++b) {
                const double v = Nj[i * N + a].d(n + static_cast<int>(b));
                at(N + a, i, N + b) = v;
                at(N + a, N + b, i) = -v;
            }
    }
    return W;
}

std::vector<double> anholonomy_coefficients(const NConnection& N, std::span<const double> point) {
    return anholonomy_from_jets(N.jets(point, 1), N.n);
}

std::vector<double> nconnection_curvature(const NConnection& N, std::span<const double> point) {
    return nconnection_curvature_from_jets(N.jets(point, 1), N.n);
}

}  // namespace efg
