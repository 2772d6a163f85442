#include "efg/dgeometry.hpp"

#include <algorithm>
#include <cmath>

#include "efg/errors.hpp"
#include "efg/linalg.hpp"

namespace efg {

namespace {

// Jets of the blocks and N-connection at one point, with adapted-frame derivatives.
struct FramePoint {
    int n = 0, D = 0, K = 0;
    std::vector<Jet> g, h, H, N;  // H = lP^2 h

    FramePoint(const SasakiData& data, std::span<const double> p, int order) : n(data.n()), D(2 * n), K(order) {
        data.domain.check(p);
        g = data.blocks.g.jets(p, K);
        h = data.blocks.h.jets(p, K);
        H = h;
        const double s = data.blocks.lP * data.blocks.lP;
        for (auto& x : H) x *= s;
        N = data.nconn.jets(p, std::max(K, 1));
    }

    std::size_t ix(int i, int j) const { return static_cast<std::size_t>(i * n + j); }
    Jet E(const Jet& f, int alpha) const { return frame_derivative(f, alpha, n, N); }

    // Adapted metric entry as a jet (blocks only).
    Jet G(int a, int b) const {
        if (a < n && b < n) return g[ix(a, b)];
        if (a >= n && b >= n) return H[ix(a - n, b - n)];
        return Jet(g[0].space(), 0.0);
    }

    Eigen::MatrixXd metric() const {
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(D, D);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                m(i, j) = g[ix(i, j)].value();
                m(n + i, n + j) = H[ix(i, j)].value();
            }
        return m;
    }
};

void check_block(const std::vector<Jet>& m, int n, const char* what) {
    double det = 0.0;
    if (is_degenerate(jet_values(m, n), 1e-14, &det)) throw DegeneracyError(std::string("singular ") + what, det);
}

// Gamma^alpha_{beta gamma} as jets of order K - 1, flattened like Table3.
std::vector<Jet> gamma_jets(const FramePoint& fp, const DConnectionOptions& opt) {
    const int n = fp.n, D = fp.D, M = fp.K - 1;
    check_block(fp.g, n, "h-block metric");
    check_block(fp.h, n, "v-block metric");
    const auto ginv = jet_inverse(truncate_all(fp.g, M), n);
    const auto hinv = jet_inverse(truncate_all(fp.h, M), n);
    const JetSpace& s = JetSpace::get(D, M);
    std::vector<Jet> G(static_cast<std::size_t>(D * D * D), Jet(s, 0.0));
    auto at = [&](int a, int b, int c) -> Jet& { return G[static_cast<std::size_t>((a * D + b) * D + c)]; };
    auto nn = static_cast<std::size_t>(n);

    // e_k g_jh for horizontal k, d_c g_jh and d_c h_bd for fiber c.
    std::vector<Jet> Eg(nn * nn * nn), dg(nn * nn * nn), dh(nn * nn * nn);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int l = 0; l < n; ++l) {
                const std::size_t q = (static_cast<std::size_t>(k) * nn + static_cast<std::size_t>(j)) * nn +
                                      static_cast<std::size_t>(l);
                Eg[q] = fp.E(fp.g[fp.ix(j, l)], k);
                dg[q] = fp.g[fp.ix(j, l)].derivative(n + k);
                dh[q] = fp.h[fp.ix(j, l)].derivative(n + k);
            }
    auto T3 = [&](const std::vector<Jet>& t, int a, int b, int c) -> const Jet& {
        return t[(static_cast<std::size_t>(a) * nn + static_cast<std::size_t>(b)) * nn + static_cast<std::size_t>(c)];
    };

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                Jet L(s, 0.0);
                for (int l = 0; l < n; ++l)
                    L += ginv[fp.ix(i, l)] * (T3(Eg, k, j, l) + T3(Eg, j, k, l) - T3(Eg, l, j, k));
                L *= 0.5;
                at(n + i, n + j, k) = L;
                at(i, j, k) = std::move(L);
            }
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) {
                Jet C(s, 0.0);
                for (int d = 0; d < n; ++d)
                    C += hinv[fp.ix(a, d)] * (T3(dh, c, b, d) + T3(dh, b, c, d) - T3(dh, d, b, c));
                C *= 0.5;
                if (opt.mixing == VerticalMixing::Identified) at(a, b, n + c) = C;
                at(n + a, n + b, n + c) = std::move(C);
            }
    if (opt.mixing == VerticalMixing::Canonical)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int c = 0; c < n; ++c) {
                    Jet C(s, 0.0);
                    for (int l = 0; l < n; ++l) C += ginv[fp.ix(i, l)] * T3(dg, c, j, l);
                    at(i, j, n + c) = C * 0.5;
                }
    return G;
}

Table3 values3(const std::vector<Jet>& J, int D) {
    Table3 t(D);
    for (std::size_t q = 0; q < J.size(); ++q) t.v[q] = J[q].value();
    return t;
}

Table3 anholonomy_table(const FramePoint& fp) {
    Table3 W(fp.D);
    W.v = anholonomy_from_jets(fp.N, fp.n);
    return W;
}

Eigen::MatrixXd block_inverse(const Eigen::MatrixXd& G, int n) {
    Eigen::MatrixXd inv = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    inv.topLeftCorner(n, n) = G.topLeftCorner(n, n).inverse();
    inv.bottomRightCorner(n, n) = G.bottomRightCorner(n, n).inverse();
    return inv;
}

// Levi-Civita coefficients in the adapted frame from the Koszul formula with anholonomy.
Table3 frame_levi_civita(const FramePoint& fp, const Table3& W, const Eigen::MatrixXd& Ginv) {
    const int D = fp.D;
    Table3 dG(D);  // dG(g, a, b) = e_g G_ab
    Eigen::MatrixXd G = fp.metric();
    for (int c = 0; c < D; ++c)
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                const bool same = (a < fp.n) == (b < fp.n);
                dG(c, a, b) = same ? fp.E(fp.G(a, b), c).value() : 0.0;
            }
    Table3 out(D);
    std::vector<double> rhs(static_cast<std::size_t>(D));
    for (int b = 0; b < D; ++b)
        for (int c = 0; c < D; ++c) {
            for (int m = 0; m < D; ++m) {
                double r = dG(c, b, m) + dG(b, c, m) - dG(m, c, b);
                for (int v = 0; v < D; ++v)
                    r += W(v, c, b) * G(v, m) - W(v, c, m) * G(v, b) - W(v, b, m) * G(v, c);
                rhs[static_cast<std::size_t>(m)] = r;
            }
            for (int a = 0; a < D; ++a) {
                double s = 0.0;
                for (int m = 0; m < D; ++m) s += Ginv(a, m) * rhs[static_cast<std::size_t>(m)];
                out(a, b, c) = 0.5 * s;
            }
        }
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------

DGeometryBundle geometry_at(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt) {
    FramePoint fp(data, point, 2);
    const int n = fp.n, D = fp.D;
    DGeometryBundle b;
    b.n = n;
    const auto GJ = gamma_jets(fp, opt);
    b.connection.n = n;
    b.connection.gamma = values3(GJ, D);
    const Table3& Gm = b.connection.gamma;
    b.anholonomy = anholonomy_table(fp);
    const Table3& W = b.anholonomy;
    b.omega = nconnection_curvature_from_jets(fp.N, n);

    b.torsion.n = n;
    b.torsion.T = Table3(D);
    for (int a = 0; a < D; ++a)
        for (int c = 0; c < D; ++c)
            for (int e = 0; e < D; ++e) b.torsion.T(a, c, e) = Gm(a, c, e) - Gm(a, e, c) + W(a, c, e);

    // e_delta Gamma^alpha_{beta gamma}
    Table4 dGm(D);
    for (int a = 0; a < D; ++a)
        for (int c = 0; c < D; ++c)
            for (int e = 0; e < D; ++e) {
                const Jet& j = GJ[static_cast<std::size_t>((a * D + c) * D + e)];
                if (j.is_constant()) continue;
                for (int d = 0; d < D; ++d) dGm(a, c, e, d) = fp.E(j, d).value();
            }
    b.curvature.n = n;
    b.curvature.R = Table4(D);
    for (int a = 0; a < D; ++a)
        for (int c = 0; c < D; ++c)
            for (int g = 0; g < D; ++g)
                for (int d = 0; d < D; ++d) {
                    double r = dGm(a, c, g, d) - dGm(a, c, d, g);
                    for (int m = 0; m < D; ++m)
                        r += Gm(m, c, g) * Gm(a, m, d) - Gm(m, c, d) * Gm(a, m, g) - W(m, d, g) * Gm(a, c, m);
                    b.curvature.R(a, c, g, d) = r;
                }
    b.metric = fp.metric();
    b.inverse = block_inverse(b.metric, n);
    b.ricci = ricci_and_scalar(b.curvature, data, point);
    return b;
}

DConnection cartan_dconnection(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt) {
    FramePoint fp(data, point, 1);
    DConnection c;
    c.n = fp.n;
    c.gamma = values3(gamma_jets(fp, opt), fp.D);
    return c;
}

CompatibilityReport metric_compatibility_residual(const DConnection& conn, const SasakiData& data,
                                                  std::span<const double> point) {
    FramePoint fp(data, point, 1);
    const int n = fp.n, D = fp.D;
    const Eigen::MatrixXd G = fp.metric();
    CompatibilityReport r;
    for (int a = 0; a < D; ++a)
        for (int b = a; b < D; ++b) {
            if ((a < n) != (b < n)) continue;
            const Jet Gab = fp.G(a, b);
            for (int c = 0; c < D; ++c) {
                double v = fp.E(Gab, c).value();
                for (int m = 0; m < D; ++m) v -= conn.gamma(m, a, c) * G(m, b) + conn.gamma(m, b, c) * G(a, m);
                v = std::fabs(v);
                double& fam = a < n ? (c < n ? r.hh_h : r.hh_v) : (c < n ? r.vv_h : r.vv_v);
                fam = std::max(fam, v);
                r.max = std::max(r.max, v);
            }
        }
    return r;
}

TorsionComponents torsion(const DConnection& conn, const NConnection& N, std::span<const double> point) {
    const int D = 2 * conn.n;
    Table3 W(D);
    W.v = anholonomy_coefficients(N, point);
    TorsionComponents t;
    t.n = conn.n;
    t.T = Table3(D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int c = 0; c < D; ++c) t.T(a, b, c) = conn.gamma(a, b, c) - conn.gamma(a, c, b) + W(a, b, c);
    return t;
}

CurvatureComponents curvature(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt) {
    return geometry_at(data, point, opt).curvature;
}

RicciData ricci_and_scalar(const CurvatureComponents& curv, const SasakiData& data, std::span<const double> point) {
    const int n = curv.n, D = 2 * n;
    RicciData r;
    r.ricci = Eigen::MatrixXd::Zero(D, D);
    for (int b = 0; b < D; ++b)
        for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int t = 0; t < D; ++t) s += curv.R(t, b, d, t);
            r.ricci(b, d) = s;
        }
    const Eigen::MatrixXd g = data.blocks.g.values(point);
    const Eigen::MatrixXd H = data.blocks.lP * data.blocks.lP * data.blocks.h.values(point);
    const Eigen::MatrixXd gi = g.inverse(), Hi = H.inverse();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            r.hscalar += gi(i, j) * r.ricci(i, j);
            r.vscalar += Hi(i, j) * r.ricci(n + i, n + j);
        }
    r.scalar = r.hscalar + r.vscalar;
    return r;
}

// ---------------------------------------------------------------------------

SourceSpec SourceSpec::zero(int dim) { return cosmological(dim, 0.0); }

SourceSpec SourceSpec::cosmological(int dim, double lambda) {
    SourceSpec s;
    s.diag.assign(static_cast<std::size_t>(dim), constant_field(dim, lambda));
    return s;
}

SourceSpec SourceSpec::killing(FieldPtr h_lambda, FieldPtr v_lambda) {
    if (h_lambda->arity() != 4 || v_lambda->arity() != 4) throw ShapeError("2+2 sources take four coordinates");
    return SourceSpec{{v_lambda, v_lambda, h_lambda, h_lambda}};
}

SourceSpec SourceSpec::paired(std::vector<FieldPtr> per_pair) {
    SourceSpec s;
    for (auto& f : per_pair) {
        if (f->arity() != 2 * static_cast<int>(per_pair.size())) throw ShapeError("paired source arity mismatch");
        s.diag.push_back(f);
        s.diag.push_back(f);
    }
    return s;
}

std::vector<double> SourceSpec::values(std::span<const double> point) const {
    std::vector<double> v;
    for (const auto& f : diag) v.push_back(f->value(point));
    return v;
}

SplitSource split_lambdas(double h_lambda, double v_lambda, double lambda5, double lambda7) {
    const double total = (h_lambda + v_lambda + lambda5 + lambda7) / 3.0;
    return {total - h_lambda, total - v_lambda, total - lambda5, total - lambda7};
}

Eigen::MatrixXd einstein_residual_from(const DGeometryBundle& b, const SourceSpec& source,
                                       std::span<const double> point) {
    const int D = 2 * b.n;
    if (source.dim() != D) throw ShapeError("source dimension does not match the geometry");
    Eigen::MatrixXd E = b.inverse * b.ricci.ricci;
    const auto ups = source.values(point);
    for (int a = 0; a < D; ++a) E(a, a) -= 0.5 * b.ricci.scalar + ups[static_cast<std::size_t>(a)];
    return E;
}

Eigen::MatrixXd einstein_finsler_residual(const SasakiData& data, const SourceSpec& source,
                                          std::span<const double> point, const DConnectionOptions& opt) {
    return einstein_residual_from(geometry_at(data, point, opt), source, point);
}

LeviCivitaData levi_civita(const CoordinateMetric& metric, std::span<const double> point) {
    const int D = metric.dim();
    if (static_cast<int>(point.size()) != D) throw ShapeError("point dimension does not match the metric");
    const auto g = metric.jets(point, 2);
    LeviCivitaData out;
    out.metric = jet_values(g, D);
    double det = 0.0;
    if (is_degenerate(out.metric, 1e-14, &det)) throw DegeneracyError("singular coordinate metric", det);
    const auto ginv = jet_inverse(truncate_all(g, 1), D);
    out.inverse = jet_values(ginv, D);
    const auto d = static_cast<std::size_t>(D);
    std::vector<Jet> dg(d * d * d);  // dg[(c*D + a)*D + b] = d_c g_ab
    for (int c = 0; c < D; ++c)
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b)
                dg[(static_cast<std::size_t>(c) * d + static_cast<std::size_t>(a)) * d + static_cast<std::size_t>(b)] =
                    g[static_cast<std::size_t>(a * D + b)].derivative(c);
    auto DG = [&](int c, int a, int b) -> const Jet& {
        return dg[(static_cast<std::size_t>(c) * d + static_cast<std::size_t>(a)) * d + static_cast<std::size_t>(b)];
    };
    const JetSpace& s = JetSpace::get(D, 1);
    std::vector<Jet> Gm(d * d * d, Jet(s, 0.0));
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int c = b; c < D; ++c) {
                Jet acc(s, 0.0);
                for (int m = 0; m < D; ++m) {
                    const Jet& gi = ginv[static_cast<std::size_t>(a * D + m)];
                    if (gi.is_constant() && gi.value() == 0.0) continue;
                    acc += gi * (DG(b, m, c) + DG(c, m, b) - DG(m, b, c));
                }
                acc *= 0.5;
                Gm[static_cast<std::size_t>((a * D + c) * D + b)] = acc;
                Gm[static_cast<std::size_t>((a * D + b) * D + c)] = std::move(acc);
            }
    out.christoffel = values3(Gm, D);
    const Table3& C = out.christoffel;
    out.ricci = Eigen::MatrixXd::Zero(D, D);
    for (int b = 0; b < D; ++b)
        for (int e = 0; e < D; ++e) {
            double r = 0.0;
            for (int t = 0; t < D; ++t) {
                r += Gm[static_cast<std::size_t>((t * D + b) * D + e)].d(t) -
                     Gm[static_cast<std::size_t>((t * D + b) * D + t)].d(e);
                for (int m = 0; m < D; ++m) r += C(m, b, e) * C(t, m, t) - C(m, b, t) * C(t, m, e);
            }
            out.ricci(b, e) = r;
        }
    out.scalar = (out.inverse.cwiseProduct(out.ricci)).sum();
    return out;
}

Eigen::MatrixXd levi_civita_residual(const CoordinateMetric& metric, const SourceSpec& source,
                                     std::span<const double> point) {
    const auto lc = levi_civita(metric, point);
    const int D = metric.dim();
    if (source.dim() != D) throw ShapeError("source dimension does not match the metric");
    Eigen::MatrixXd E = lc.inverse * lc.ricci;
    const auto ups = source.values(point);
    for (int a = 0; a < D; ++a) E(a, a) -= 0.5 * lc.scalar + ups[static_cast<std::size_t>(a)];
    return E;
}

DistortionTable distortion(const SasakiData& data, std::span<const double> point, const DConnectionOptions& opt) {
    FramePoint fp(data, point, 1);
    DistortionTable t;
    t.cartan.n = fp.n;
    t.cartan.gamma = values3(gamma_jets(fp, opt), fp.D);
    const Table3 W = anholonomy_table(fp);
    t.levi_civita = frame_levi_civita(fp, W, block_inverse(fp.metric(), fp.n));
    t.Z = Table3(fp.D);
    for (std::size_t q = 0; q < t.Z.v.size(); ++q) t.Z.v[q] = t.cartan.gamma.v[q] - t.levi_civita.v[q];
    return t;
}

Eigen::VectorXd nonholonomic_conservation_residual(const SasakiData& data, const SourceSpec& source,
                                                   std::span<const double> point, const DConnectionOptions& opt) {
    FramePoint fp(data, point, 1);
    const int n = fp.n, D = fp.D;
    if (source.dim() != D) throw ShapeError("source dimension does not match the geometry");
    const DistortionTable dt = distortion(data, point, opt);
    const Table3& lc = dt.levi_civita;
    // Upsilon^{ab} = Upsilon^a_a G^{ab} as jets.
    const auto gi = jet_inverse(fp.g, n);
    const auto Hi = jet_inverse(fp.H, n);
    const JetSpace& s = JetSpace::get(D, 1);
    std::vector<Jet> U(static_cast<std::size_t>(D * D), Jet(s, 0.0));
    for (int a = 0; a < D; ++a) {
        const Jet ua = source.diag[static_cast<std::size_t>(a)]->local_jet(point, 1);
        for (int b = 0; b < D; ++b) {
            if ((a < n) != (b < n)) continue;
            const Jet& inv = a < n ? gi[fp.ix(a, b)] : Hi[fp.ix(a - n, b - n)];
            U[static_cast<std::size_t>(a * D + b)] = ua * inv;
        }
    }
    auto Uv = [&](int a, int b) { return U[static_cast<std::size_t>(a * D + b)].value(); };
    Eigen::VectorXd r = Eigen::VectorXd::Zero(D);
    for (int b = 0; b < D; ++b) {
        double v = 0.0;
        for (int a = 0; a < D; ++a) {
            v += fp.E(U[static_cast<std::size_t>(a * D + b)], a).value();
            for (int m = 0; m < D; ++m) {
                v += lc(a, m, a) * Uv(m, b) + lc(b, m, a) * Uv(a, m);
                v -= dt.Z(b, a, m) * Uv(a, m);
            }
        }
        r(b) = v;
    }
    return r;
}

}  // namespace efg
