#include "efg/cascade.hpp"

#include <cmath>
#include <list>
#include <map>
#include <tuple>
#include <mutex>

#include <boost/numeric/odeint.hpp>

#include "efg/errors.hpp"

namespace efg {

namespace {

using State = std::vector<double>;

// Index bookkeeping between the full space (m vars) and the transverse space (all but s).
struct Layout {
    int m = 0, s = 0;
    // For each index of the full space of a given order: transverse index, or
    // (index in the full space of order - 1 of alpha - e_s, exponent of s).
    struct Slot {
        bool transverse;
        std::size_t idx;
        int e;
    };
    static const std::vector<Slot>& slots(int m, int s, int order) {
        static std::mutex mu;
        static std::map<std::tuple<int, int, int>, std::vector<Slot>> memo;
        std::lock_guard<std::mutex> lock(mu);
        auto key = std::make_tuple(m, s, order);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        const JetSpace& full = JetSpace::get(m, order);
        const JetSpace& tr = JetSpace::get(m - 1, order);
        std::vector<Slot> out;
        std::vector<int> a(static_cast<std::size_t>(m - 1)), b(static_cast<std::size_t>(m));
        for (std::size_t i = 0; i < full.size(); ++i) {
            auto ex = full.exponents(i);
            const int e = ex[static_cast<std::size_t>(s)];
            if (e == 0) {
                for (int k = 0, q = 0; k < m; ++k)
                    if (k != s) a[static_cast<std::size_t>(q++)] = ex[static_cast<std::size_t>(k)];
                out.push_back({true, tr.index(a), 0});
            } else {
                for (int k = 0; k < m; ++k) b[static_cast<std::size_t>(k)] = ex[static_cast<std::size_t>(k)];
                b[static_cast<std::size_t>(s)] -= 1;
                out.push_back({false, JetSpace::get(m, order - 1).index(b), e});
            }
        }
        return memo.emplace(key, std::move(out)).first->second;
    }
};

// Full jet of order `order` from its transverse coefficients and the jet of its s-derivative.
Jet assemble(int m, int s, int order, const double* transverse, const Jet* ds) {
    Jet out(m, order, 0.0);
    auto c = out.coeffs();
    const auto& sl = Layout::slots(m, s, order);
    for (std::size_t i = 0; i < sl.size(); ++i) {
        if (sl[i].transverse)
            c[i] = transverse[sl[i].idx];
        else if (ds)
            c[i] = ds->coeffs()[sl[i].idx] / sl[i].e;
    }
    return out;
}

// Transverse (s-free) coefficients of a full jet, into dst.
void transverse_part(const Jet& j, int s, double* dst) {
    const auto& sl = Layout::slots(j.nvars(), s, j.order());
    auto c = j.coeffs();
    for (std::size_t i = 0; i < sl.size(); ++i)
        if (sl[i].transverse) dst[sl[i].idx] = c[i];
}

struct Outputs {
    Jet ha, hb, varsigma;
    std::array<Jet, 2> w, n;
};

class Level {
public:
    explicit Level(FiberLevelSpec spec) : sp_(std::move(spec)) {
        m_ = sp_.f->arity();
        s_ = m_ - 1;
    }

    int arity() const { return m_; }

    Outputs jets(std::span<const double> p, int order) const {
        {
            std::lock_guard<std::mutex> lock(mu_);
            for (const auto& e : cache_)
                if (e.order >= order && std::equal(e.point.begin(), e.point.end(), p.begin(), p.end()))
                    return truncate(e.out, order);
        }
        // One integration serves every order up to the floor, so jets of different fields agree.
        Outputs out = compute(p, std::max(order, 2));
        std::lock_guard<std::mutex> lock(mu_);
        cache_.push_front({std::vector<double>(p.begin(), p.end()), std::max(order, 2), out});
        if (cache_.size() > 16) cache_.pop_back();
        return truncate(out, order);
    }

private:
    struct Sizes {
        std::size_t I, R;  // transverse sizes at orders R + 2 and R
    };

    static Outputs truncate(const Outputs& o, int order) {
        Outputs r;
        r.ha = o.ha.truncated(order);
        r.hb = o.hb.truncated(order);
        r.varsigma = o.varsigma.truncated(order);
        for (int k = 0; k < 2; ++k) {
            r.w[static_cast<std::size_t>(k)] = o.w[static_cast<std::size_t>(k)].truncated(order);
            r.n[static_cast<std::size_t>(k)] = o.n[static_cast<std::size_t>(k)].truncated(order);
        }
        return r;
    }

    Sizes sizes(int R) const {
        return {JetSpace::get(m_ - 1, R + 2).size(), JetSpace::get(m_ - 1, R).size()};
    }

    // Full jets at u = (x, t) from the transverse state; fills rhs when given.
    Outputs evaluate(std::span<const double> x, double t, int R, const State& st, State* rhs) const {
        const Sizes z = sizes(R);
        std::vector<double> u(x.begin(), x.end());
        u[static_cast<std::size_t>(s_)] = t;
        const std::vector<double> x2{u[0], u[1]};
        static const int map2[2] = {0, 1};
        auto on_x = [&](const FieldPtr& f, int order) { return embed(f->local_jet(x2, order), m_, map2); };

        const Jet F = sp_.f->local_jet(u, R + 3);
        const Jet Fs = F.derivative(s_);                      // R + 2
        const Jet dev = (F - on_x(sp_.f0, R + 3)).truncated(R + 2);
        const Jet H0 = on_x(sp_.h0, R + 2), S0 = on_x(sp_.s0, R + 2);
        if (Fs.value() == 0.0) throw RegimeError("generating function has a vanishing fiber derivative", u);

        // varsigma integral
        Jet I(m_, R + 2, 0.0);
        if (!sp_.lambda->is_zero()) {
            const Jet integrand = sp_.lambda->local_jet(u, R + 2) * Fs * dev;
            I = assemble(m_, s_, R + 2, st.data(), &integrand);
            if (rhs) transverse_part(integrand, s_, rhs->data());
        }
        const double sgn = S0.value() > 0 ? 1.0 : -1.0;
        const Jet inv = reciprocal(S0) + (2.0 * sp_.eps_a * sgn) * H0 * I;
        if (!(sgn * inv.value() > 0.0)) throw RegimeError("varsigma diverges along the fiber", u);
        const Jet vs = reciprocal(inv);
        const Jet ha = static_cast<double>(sp_.eps_a) * H0 * Fs * Fs * (vs.value() < 0 ? -vs : vs);
        const Jet hb = static_cast<double>(sp_.eps_b) * dev * dev;

        const Jet has = ha.derivative(s_), hbs = hb.derivative(s_);  // R + 1
        const bool algebraic = sp_.algebraic_w;
        if (!algebraic && std::fabs(has.value()) <= 1e-300) throw RegimeError("ha* vanishes along the fiber", u);
        const Jet G1 = on_x(sp_.g1, R + 1), G2 = on_x(sp_.g2, R + 1);
        const Jet g1r = G1.truncated(R), g2r = G2.truncated(R);
        const Jet hbr = hb.truncated(R), har = ha.truncated(R);
        const Jet hasr = has.truncated(R), hbsr = hbs.truncated(R);
        const Jet g1p = G1.derivative(1), g2b = G2.derivative(0);
        std::array<Jet, 2> haK;
        if (algebraic) {
            // ha* = 0 removes the hb*-singular parts, so f - f0 may vanish at the lower limit.
            haK[0] = -g1p / (2.0 * g2r);
            haK[1] = g2b / (2.0 * g2r);
        } else {
            haK[0] = g1p * hasr / (2.0 * g1r * hbsr) - g1p / (2.0 * g2r);
            haK[1] = g2b / (2.0 * g2r) - g2b * hasr / (2.0 * g1r * hbsr);
        }
        // A and B are only needed where w is formed: at the output point, or along the path
        // when w is integrated.
        Jet As;
        std::array<Jet, 2> B;
        if (!algebraic || !rhs) {
            const Jet A = has / (2.0 * ha.truncated(R + 1)) + hbs / (2.0 * hb.truncated(R + 1));
            As = A.derivative(s_);
            for (int k = 0; k < 2; ++k)
                B[static_cast<std::size_t>(k)] =
                    hbsr / (2.0 * hbr) * (G1.derivative(k) / (2.0 * g1r) - G2.derivative(k) / (2.0 * g2r)) -
                    A.derivative(k);
        }

        Outputs o;
        o.ha = ha.truncated(R);
        o.hb = hb.truncated(R);
        o.varsigma = vs.truncated(R);
        for (int k = 0; k < 2; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const double* sM = st.data() + z.I + (3 + ks) * z.R;
            const Jet haKm = R > 0 ? haK[ks].truncated(R - 1) : Jet();
            o.n[ks] = on_x(sp_.n0[ks], R) + assemble(m_, s_, R, sM, R > 0 ? &haKm : nullptr);
            if (rhs) transverse_part(haK[ks], s_, rhs->data() + z.I + (3 + ks) * z.R);
        }
        if (algebraic) {
            if (rhs) return o;
            for (int k = 0; k < 2; ++k) o.w[static_cast<std::size_t>(k)] = -B[static_cast<std::size_t>(k)] / As;
            return o;
        }

        const Jet P = 2.0 * har * As / hasr;
        const Jet Pm = R > 0 ? P.truncated(R - 1) : Jet();
        const Jet Phi = assemble(m_, s_, R, st.data() + z.I, R > 0 ? &Pm : nullptr);
        const Jet E = exp(Phi);
        if (rhs) transverse_part(P, s_, rhs->data() + z.I);
        for (int k = 0; k < 2; ++k) {
            const auto ks = static_cast<std::size_t>(k);
            const double* sJ = st.data() + z.I + (1 + ks) * z.R;
            const Jet QE = 2.0 * har * B[ks] / hasr * E;
            const Jet QEm = R > 0 ? QE.truncated(R - 1) : Jet();
            const Jet Jk = assemble(m_, s_, R, sJ, R > 0 ? &QEm : nullptr);
            o.w[ks] = exp(-Phi) * (on_x(sp_.w0[ks], R) - Jk);
            if (rhs) transverse_part(QE, s_, rhs->data() + z.I + (1 + ks) * z.R);
        }
        return o;
    }

    Outputs compute(std::span<const double> p, int R) const {
        if (static_cast<int>(p.size()) != m_) throw ShapeError("level evaluated with wrong point dimension");
        const Sizes z = sizes(R);
        State st(z.I + 5 * z.R, 0.0);
        const double t1 = p[static_cast<std::size_t>(s_)];
        if (t1 != sp_.lower) {
            namespace ode = boost::numeric::odeint;
            auto sys = [&](const State& y, State& dy, double t) {
                std::fill(dy.begin(), dy.end(), 0.0);
                evaluate(p, t, R, y, &dy);
            };
            const double abs_tol = sp_.tolerance.abs_tol, rel_tol = sp_.tolerance.rel_tol;
            auto stepper = ode::make_controlled(abs_tol, rel_tol, ode::runge_kutta_dopri5<State>());
            std::size_t steps = 0;
            const std::size_t limit = static_cast<std::size_t>(std::max(1, sp_.tolerance.max_panels)) * 10;
            const double dt = (t1 - sp_.lower) / 8.0;
            ode::integrate_adaptive(stepper, sys, st, sp_.lower, t1, dt, [&](const State&, double) {
                if (++steps > limit) throw ConvergenceError("fiber integration exceeded its step budget");
            });
        }
        return evaluate(p, t1, R, st, nullptr);
    }

    FiberLevelSpec sp_;
    int m_ = 0, s_ = 0;
    struct Entry {
        std::vector<double> point;
        int order;
        Outputs out;
    };
    mutable std::mutex mu_;
    mutable std::list<Entry> cache_;
};

FieldPtr output_field(std::shared_ptr<const Level> L, int which, const std::string& name) {
    return lambda_field(L->arity(), [L, which](std::span<const double> p, int order) {
        Outputs o = L->jets(p, order);
        switch (which) {
            case 0: return o.ha;
            case 1: return o.hb;
            case 2: return o.varsigma;
            case 3: return o.w[0];
            case 4: return o.w[1];
            case 5: return o.n[0];
            default: return o.n[1];
        }
    }, name);
}

void need(const FieldPtr& f, int arity, const char* what) {
    if (!f) throw ShapeError(std::string("fiber level is missing ") + what);
    if (f->arity() != arity) throw ShapeError(std::string("fiber level coefficient ") + what + " has the wrong arity");
}

}  // namespace

LevelFields integrate_level(const FiberLevelSpec& spec) {
    if (!spec.f || spec.f->arity() < 3) throw ShapeError("fiber level needs f over (x1, x2, ..., s)");
    const int m = spec.f->arity();
    need(spec.lambda, m, "Lambda");
    for (auto* f : {&spec.f0, &spec.h0, &spec.s0, &spec.g1, &spec.g2, &spec.w0[0], &spec.w0[1], &spec.n0[0], &spec.n0[1]})
        need(*f, 2, "integration function");
    for (int e : {spec.eps_a, spec.eps_b})
        if (e != 1 && e != -1) throw ParameterError("signature signs must be +1 or -1");
    if (!(spec.tolerance.abs_tol > 0.0 || spec.tolerance.rel_tol > 0.0))
        throw ParameterError("fiber integration tolerance must be positive");
    auto L = std::make_shared<const Level>(spec);
    LevelFields out;
    out.ha = output_field(L, 0, "ha");
    out.hb = output_field(L, 1, "hb");
    out.varsigma = output_field(L, 2, "varsigma");
    out.w = {output_field(L, 3, "w1"), output_field(L, 4, "w2")};
    out.n = {output_field(L, 5, "n1"), output_field(L, 6, "n2")};
    return out;
}

}  // namespace efg
