#include "efg/killing.hpp"

#include <algorithm>
#include <cmath>

#include "efg/errors.hpp"
#include "efg/random_fields.hpp"

namespace efg {

namespace {

void need(const FieldPtr& f, int arity, const char* what) {
    if (!f) throw ShapeError(std::string("Killing ansatz is missing ") + what);
    if (f->arity() != arity)
        throw ShapeError(std::string("Killing ansatz coefficient ") + what + " must take " + std::to_string(arity) +
                         " arguments");
}

LevelJets ansatz_jets(const KillingAnsatz& a, std::span<const double> xv) {
    if (xv.size() != 3) throw ShapeError("Killing closed forms take a point (x1, x2, v)");
    validate(a);
    const std::vector<double> x{xv[0], xv[1]};
    static const int map[2] = {0, 1};
    LevelJets j;
    j.fiber = 2;
    j.g1 = embed(a.g1->local_jet(x, 2), 3, map);
    j.g2 = embed(a.g2->local_jet(x, 2), 3, map);
    j.h3 = a.h3->local_jet(xv, 2);
    j.h4 = a.h4->local_jet(xv, 2);
    for (int i = 0; i < 2; ++i) {
        j.w[static_cast<std::size_t>(i)] = a.w[static_cast<std::size_t>(i)]->local_jet(xv, 1);
        j.n[static_cast<std::size_t>(i)] = a.n[static_cast<std::size_t>(i)]->local_jet(xv, 1);
    }
    return j;
}

constexpr int kV = 2;

}  // namespace

void validate(const KillingAnsatz& a) {
    need(a.g1, 2, "g1");
    need(a.g2, 2, "g2");
    need(a.h3, 3, "h3");
    need(a.h4, 3, "h4");
    for (int i = 0; i < 2; ++i) {
        need(a.w[static_cast<std::size_t>(i)], 3, "w_i");
        need(a.n[static_cast<std::size_t>(i)], 3, "n_i");
    }
    for (int e : a.eps)
        if (e != 1 && e != -1) throw ParameterError("signature signs must be +1 or -1");
}

KillingAnsatz random_killing_ansatz(std::mt19937_64& rng, std::array<int, 4> eps) {
    KillingAnsatz a;
    a.eps = eps;
    const std::vector<int> x{0, 1}, xv{0, 1, 2};
    a.g1 = expr_field(random_signed(rng, x, eps[0]), 2, "g1");
    a.g2 = expr_field(random_signed(rng, x, eps[1]), 2, "g2");
    a.h3 = expr_field(random_signed(rng, xv, eps[2]), 3, "h3");
    a.h4 = expr_field(random_signed(rng, xv, eps[3]), 3, "h4");
    for (int i = 0; i < 2; ++i) {
        a.w[static_cast<std::size_t>(i)] = expr_field(random_smooth(rng, xv, 0.0, 1.0), 3, "w");
        a.n[static_cast<std::size_t>(i)] = expr_field(random_smooth(rng, xv, 0.0, 1.0), 3, "n");
    }
    return a;
}

SasakiData killing_sasaki(const KillingAnsatz& a, double lP, DomainBox domain) {
    validate(a);
    const std::vector<int> xs{0, 1}, xvs{0, 1, 2};
    auto g = SymmetricFields::diagonal({embed_field(a.g1, 4, xs), embed_field(a.g2, 4, xs)});
    auto h = SymmetricFields::diagonal({embed_field(a.h3, 4, xvs), embed_field(a.h4, 4, xvs)});
    NConnection N = NConnection::zero(2, 4);
    for (int i = 0; i < 2; ++i) {
        N.set(i, 0, embed_field(a.w[static_cast<std::size_t>(i)], 4, xvs));
        N.set(i, 1, embed_field(a.n[static_cast<std::size_t>(i)], 4, xvs));
    }
    return make_sasaki(g, h, N, lP, std::move(domain));
}

KillingBlocks killing_blocks(const KillingAnsatz& a, std::span<const double> xv, ClosedFormVariant variant) {
    const auto j = ansatz_jets(a, xv);
    const Jet h3 = j.h3.truncated(1), h4 = j.h4.truncated(1);
    const Jet Aj = j.h3.derivative(kV) / (2.0 * h3) + j.h4.derivative(kV) / (2.0 * h4);
    const double g1 = j.g1.value(), g2 = j.g2.value();
    const double h3v = j.h3.value(), h4v = j.h4.value();
    const double h3s = j.h3.d(kV), h4s = j.h4.d(kV);
    KillingBlocks b;
    b.A = Aj.value();
    b.A_v = Aj.d(kV);
    for (int k = 0; k < 2; ++k)
        b.B[static_cast<std::size_t>(k)] =
            h4s / (2 * h4v) * (j.g1.d(k) / (2 * g1) - j.g2.d(k) / (2 * g2)) - Aj.d(k);
    const double g1p = j.g1.d(1), g2b = j.g2.d(0), g2p = j.g2.d(1);
    if (variant == ClosedFormVariant::Quoted) {
        b.K[0] = -0.5 * (g1p / (g2 * h3v) + g2b / (g2 * h4v));
        b.K[1] = 0.5 * (g2b / (g1 * h3v) - g2p / (g2 * h4v));
    } else {
        // Singular where h4* = 0; the residual below uses the product (h4*/2) K instead.
        b.K[0] = g1p * h3s / (2 * g1 * h3v * h4s) - g1p / (2 * g2 * h3v);
        b.K[1] = -g2b * h3s / (2 * g1 * h3v * h4s) + g2b / (2 * g2 * h3v);
    }
    return b;
}

namespace {

// (h4*/2) K_k without dividing by h4*.
std::array<double, 2> half_h4s_K(const LevelJets& j, ClosedFormVariant variant) {
    const double g1 = j.g1.value(), g2 = j.g2.value(), h3 = j.h3.value(), h4 = j.h4.value();
    const double h3s = j.h3.d(j.fiber), h4s = j.h4.d(j.fiber);
    const double g1p = j.g1.d(1), g2b = j.g2.d(0), g2p = j.g2.d(1);
    if (variant == ClosedFormVariant::Quoted)
        return {0.5 * h4s * (-0.5 * (g1p / (g2 * h3) + g2b / (g2 * h4))),
                0.5 * h4s * (0.5 * (g2b / (g1 * h3) - g2p / (g2 * h4)))};
    return {g1p / (4 * h3) * (h3s / g1 - h4s / g2), g2b / (4 * h3) * (-h3s / g1 + h4s / g2)};
}

struct RicciClosed {
    double hh, vv;
    std::array<double, 2> r3, r4;
};

RicciClosed ricci_closed(const LevelJets& j, ClosedFormVariant variant) {
    const double g1 = j.g1.value(), g2 = j.g2.value();
    const double g1b = j.g1.d(0), g1p = j.g1.d(1), g2b = j.g2.d(0), g2p = j.g2.d(1);
    const double g1pp = j.g1.d2(1, 1), g2bb = j.g2.d2(0, 0);
    RicciClosed r;
    r.hh = (g1b * g2b / (2 * g1) + g2b * g2b / (2 * g2) - g2bb + g1p * g2p / (2 * g2) + g1p * g1p / (2 * g1) - g1pp) /
           (2 * g1 * g2);
    const double h3 = j.h3.value(), h4 = j.h4.value();
    const double h3s = j.h3.d(j.fiber), h4s = j.h4.d(j.fiber), h4ss = j.h4.d2(j.fiber, j.fiber);
    r.vv = (-h4ss + h4s * h4s / (2 * h4) + h3s * h4s / (2 * h3)) / (2 * h3 * h4);

    const Jet h3t = j.h3.truncated(1), h4t = j.h4.truncated(1);
    const Jet Aj = j.h3.derivative(j.fiber) / (2.0 * h3t) + j.h4.derivative(j.fiber) / (2.0 * h4t);
    const auto hk = half_h4s_K(j, variant);
    for (int k = 0; k < 2; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const double B = h4s / (2 * h4) * (j.g1.d(k) / (2 * g1) - j.g2.d(k) / (2 * g2)) - Aj.d(k);
        r.r3[ks] = h3s / (2 * h3) * j.w[ks].d(j.fiber) + Aj.d(j.fiber) * j.w[ks].value() + B;
        r.r4[ks] = -h4s / (2 * h3) * j.n[ks].d(j.fiber) + hk[ks];
    }
    return r;
}

}  // namespace

std::vector<NamedValue> killing_closed_forms(const KillingAnsatz& a, std::span<const double> xv,
                                             ClosedFormVariant variant) {
    const auto j = ansatz_jets(a, xv);
    const double g1 = j.g1.value(), g2 = j.g2.value(), h3 = j.h3.value(), h4 = j.h4.value();
    const double g1b = j.g1.d(0), g1p = j.g1.d(1), g2b = j.g2.d(0), g2p = j.g2.d(1);
    const double h3s = j.h3.d(kV), h4s = j.h4.d(kV);
    const auto& w = j.w;
    const auto& n = j.n;

    const double om3 = w[1].d(0) - w[0].d(1) - w[0].value() * w[1].d(kV) + w[1].value() * w[0].d(kV);
    const double om4 = n[1].d(0) - n[0].d(1) - w[0].value() * n[1].d(kV) + w[1].value() * n[0].d(kV);
    const double p423 = variant == ClosedFormVariant::Quoted ? n[1].d(kV) - g2b / (2 * g1) : n[1].d(kV) - g2b / (2 * g2);
    const auto r = ricci_closed(j, variant);

    return {
        {"L1_11", g1b / (2 * g1)},
        {"L1_12", g1p / (2 * g1)},
        {"L1_22", -g2b / (2 * g1)},
        {"L2_11", -g1p / (2 * g2)},
        {"L2_12", g2b / (2 * g2)},
        {"L2_22", g2p / (2 * g2)},
        {"C3_33", h3s / (2 * h3)},
        {"C3_44", -h4s / (2 * h3)},
        {"C4_34", h4s / (2 * h4)},
        {"Omega3_12", om3},
        {"Omega4_12", om4},
        {"T3_12", -om3},
        {"T4_12", -om4},
        {"P3_13", w[0].d(kV) - g1b / (2 * g1)},
        {"P3_23", w[1].d(kV) - g1p / (2 * g1)},
        {"P3_14", -g1p / (2 * g1)},
        {"P3_24", g2b / (2 * g1)},
        {"P4_13", n[0].d(kV) + g1p / (2 * g2)},
        {"P4_23", p423},
        {"P4_14", -g2b / (2 * g2)},
        {"P4_24", -g2p / (2 * g2)},
        {"R1_1", r.hh},
        {"R2_2", r.hh},
        {"R3_3", r.vv},
        {"R4_4", r.vv},
        {"R_31", r.r3[0]},
        {"R_32", r.r3[1]},
        {"R_41", r.r4[0]},
        {"R_42", r.r4[1]},
    };
}

std::vector<NamedValue> killing_pipeline_values(const DGeometryBundle& b) {
    if (b.n != 2) throw ShapeError("Killing tables need a 2 + 2 bundle");
    const auto& G = b.connection.gamma;
    const auto& T = b.torsion.T;
    const Eigen::MatrixXd mixed = b.inverse * b.ricci.ricci;
    auto om = [&](int a, int i, int j) { return b.omega[static_cast<std::size_t>((a * 2 + i) * 2 + j)]; };
    return {
        {"L1_11", G(0, 0, 0)},
        {"L1_12", G(0, 0, 1)},
        {"L1_22", G(0, 1, 1)},
        {"L2_11", G(1, 0, 0)},
        {"L2_12", G(1, 0, 1)},
        {"L2_22", G(1, 1, 1)},
        {"C3_33", G(2, 2, 2)},
        {"C3_44", G(2, 3, 3)},
        {"C4_34", G(3, 2, 3)},
        {"Omega3_12", om(0, 0, 1)},
        {"Omega4_12", om(1, 0, 1)},
        {"T3_12", T(2, 0, 1)},
        {"T4_12", T(3, 0, 1)},
        {"P3_13", T(2, 0, 2)},
        {"P3_23", T(2, 1, 2)},
        {"P3_14", T(2, 0, 3)},
        {"P3_24", T(2, 1, 3)},
        {"P4_13", T(3, 0, 2)},
        {"P4_23", T(3, 1, 2)},
        {"P4_14", T(3, 0, 3)},
        {"P4_24", T(3, 1, 3)},
        {"R1_1", mixed(0, 0)},
        {"R2_2", mixed(1, 1)},
        {"R3_3", mixed(2, 2)},
        {"R4_4", mixed(3, 3)},
        {"R_31", b.ricci.ricci(2, 0)},
        {"R_32", b.ricci.ricci(2, 1)},
        {"R_41", b.ricci.ricci(3, 0)},
        {"R_42", b.ricci.ricci(3, 1)},
    };
}

double DecoupledResiduals::max() const {
    double m = std::max(std::fabs(hh), std::fabs(vv));
    for (int i = 0; i < 2; ++i)
        m = std::max({m, std::fabs(w[static_cast<std::size_t>(i)]), std::fabs(n[static_cast<std::size_t>(i)])});
    return m;
}

DecoupledResiduals decoupled_residuals(const LevelJets& j, double h_lambda, double v_lambda,
                                       ClosedFormVariant variant) {
    const auto r = ricci_closed(j, variant);
    return {r.hh + h_lambda, r.vv + v_lambda, r.r3, r.r4};
}

DecoupledResiduals killing_decoupled_residuals(const KillingAnsatz& a, std::span<const double> xv, double h_lambda,
                                               double v_lambda, ClosedFormVariant variant) {
    return decoupled_residuals(ansatz_jets(a, xv), h_lambda, v_lambda, variant);
}

}  // namespace efg
