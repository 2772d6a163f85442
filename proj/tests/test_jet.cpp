#include <doctest.h>

#include <cmath>
#include <random>

#include "efg/errors.hpp"
#include "efg/expr.hpp"
#include "field_library.hpp"

using namespace efg;

namespace {
FieldPtr parse3(const std::string& s) {
    ExpressionParser p({"x1", "x2", "x3"}, {});
    return expr_field(p.parse(s), 3);
}
}  // namespace

TEST_CASE("polynomial jet at (3,2)") {
    ExpressionParser p({"x1", "x2"}, {});
    ScalarField f(expr_field(p.parse("(* (^ x1 2) x2)"), 2));
    const double pt[] = {3.0, 2.0};
    Jet j = f.jet(pt, 2);
    CHECK(j.value() == 18.0);
    CHECK(j.d(0) == 12.0);
    CHECK(j.d(1) == 9.0);
    CHECK(j.d2(0, 0) == 4.0);
    CHECK(j.d2(0, 1) == 6.0);
    CHECK(j.d2(1, 1) == 0.0);
}

TEST_CASE("sine Taylor coefficients at 0") {
    ExpressionParser p({"x1"}, {});
    ScalarField f(expr_field(p.parse("(sin x1)"), 1));
    const double pt[] = {0.0};
    Jet j = f.jet(pt, 3);
    CHECK(j.value() == 0.0);
    CHECK(j.partial({1}) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(j.partial({2}) == doctest::Approx(0.0));
    CHECK(j.partial({3}) == doctest::Approx(-1.0).epsilon(1e-15));
}

TEST_CASE("order above four is refused") {
    ScalarField f(parse3("(* x1 x2)"));
    const double pt[] = {1, 2, 3};
    CHECK_THROWS_AS(f.jet(pt, 5), UnsupportedOrderError);
    CHECK_NOTHROW(f.jet(pt, 4));
}

TEST_CASE("domain box and null section") {
    DomainBox box({{-1, 1}, {-1, 1}, {-1, 1}}, {1, 2}, 1e-8);
    ScalarField f(parse3("(+ x1 x2)"), box);
    const double out[] = {2.0, 0.5, 0.5};
    const double null_pt[] = {0.3, 0.0, 1e-9};
    const double ok[] = {0.3, 0.1, 0.0};
    CHECK_THROWS_AS(f.jet(out, 1), DomainError);
    CHECK_THROWS_AS(f.jet(null_pt, 1), DomainError);
    CHECK(f.value(ok) == doctest::Approx(0.4));
    CHECK_THROWS_AS(DomainBox({{1, 0}}), ShapeError);
}

TEST_CASE("directional derivatives") {
    ExpressionParser p({"x1", "x2", "y3", "y4"}, {});
    ScalarField f(expr_field(p.parse("y3"), 4));
    const double pt[] = {0.2, 0.3, 0.7, 1.1};
    const double v[] = {1.0, 0.0, -5.0, 0.0};
    CHECK(f.directional_derivative(pt, v) == -5.0);
    const double bad[] = {1.0, 0.0};
    CHECK_THROWS_AS(f.directional_derivative(pt, bad), ShapeError);

    ScalarField g(expr_field(p.parse("(* x1 (sin x2))"), 4));
    const double e1[] = {1.0, 0.0, -2.0, -3.0};
    CHECK(g.directional_derivative(pt, e1) == doctest::Approx(std::sin(0.3)));

    // e_1 h4 with w_1 = v x1 against the recomposed partials.
    ExpressionParser q({"x1", "x2", "v"}, {});
    ScalarField h4(expr_field(q.parse("(* (exp v) (+ 1 (* x1 x2)))"), 3));
    const double u[] = {0.4, -0.6, 0.9};
    const double w1 = u[2] * u[0];
    const double e[] = {1.0, 0.0, -w1};
    Jet j = h4.jet(u, 1);
    CHECK(h4.directional_derivative(u, e) == doctest::Approx(j.d(0) - w1 * j.d(2)).epsilon(1e-15));
}

TEST_CASE("library jets agree with extrapolated finite differences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-0.8, 0.8);
    for (std::size_t i = 0; i < testlib::field_library().size(); ++i) {
        FieldPtr f = testlib::library_field(i);
        testlib::Fn fn = [&](const std::array<double, 3>& q) { return f->value(q); };
        for (int rep = 0; rep < 3; ++rep) {
            std::array<double, 3> p{U(rng), U(rng), U(rng)};
            Jet j = f->local_jet(p, 2);
            for (int a = 0; a < 3; ++a) {
                const double ref = testlib::fd_first(fn, p, a, 1e-3);
                CHECK(std::fabs(j.d(a) - ref) <= 1e-6 * std::max(1.0, std::fabs(ref)));
                for (int b = a; b < 3; ++b) {
                    const double ref2 = testlib::fd_second(fn, p, a, b, 1e-2);
                    CHECK(std::fabs(j.d2(a, b) - ref2) <= 1e-6 * std::max(1.0, std::fabs(ref2)));
                }
            }
        }
    }
}

TEST_CASE("mixed partials are symmetric") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-0.8, 0.8);
    for (std::size_t i = 0; i < testlib::field_library().size(); ++i) {
        FieldPtr f = testlib::library_field(i);
        std::array<double, 3> p{U(rng), U(rng), U(rng)};
        // Derivatives taken in different orders through the symbolic partial fields.
        FieldPtr fxy = f->partial(0)->partial(1);
        FieldPtr fyx = f->partial(1)->partial(0);
        FieldPtr fxzy = f->partial(0)->partial(2)->partial(1);
        FieldPtr fyzx = f->partial(1)->partial(2)->partial(0);
        Jet j = f->local_jet(p, 3);
        const double a = fxy->value(p), b = fyx->value(p), c = j.d2(0, 1);
        CHECK(std::fabs(a - b) <= 1e-12 * std::max(1.0, std::fabs(a)));
        CHECK(std::fabs(a - c) <= 1e-12 * std::max(1.0, std::fabs(a)));
        const double d = fxzy->value(p), e = fyzx->value(p), g = j.partial({1, 1, 1});
        CHECK(std::fabs(d - e) <= 1e-12 * std::max(1.0, std::fabs(d)));
        CHECK(std::fabs(d - g) <= 1e-12 * std::max(1.0, std::fabs(d)));
    }
}

TEST_CASE("composition matches closed forms") {
    // sin(x^2 + y) composed through a call node against the expanded closed form.
    auto inner = parse3("(+ (* x1 x1) x2)");
    ExpressionParser p1({"t"}, {});
    auto outer = expr_field(p1.parse("(sin t)"), 1);
    Expr composed = ex::call(outer, {ex::call_on(inner, {0, 1, 2})});
    auto field = expr_field(composed, 3);
    auto closed = parse3("(sin (+ (* x1 x1) x2))");
    const double pt[] = {0.3, -0.4, 0.9};
    Jet a = field->local_jet(pt, 4);
    Jet b = closed->local_jet(pt, 4);
    for (std::size_t i = 0; i < a.coeffs().size(); ++i)
        CHECK(std::fabs(a.coeffs()[i] - b.coeffs()[i]) <= 1e-12 * std::max(1.0, std::fabs(b.coeffs()[i])));

    // Generic jet composition through a field without symbolic partials.
    auto lam = lambda_field(1, [](std::span<const double> u, int order) {
        return exp(Jet::variable(1, order, 0, u[0]) * 2.0);
    });
    Expr viaLambda = ex::call(lam, {ex::var(0) * ex::var(1)});
    auto f2 = expr_field(viaLambda, 3);
    auto c2 = parse3("(exp (* 2 x1 x2))");
    Jet a2 = f2->local_jet(pt, 3);
    Jet b2 = c2->local_jet(pt, 3);
    for (std::size_t i = 0; i < a2.coeffs().size(); ++i)
        CHECK(std::fabs(a2.coeffs()[i] - b2.coeffs()[i]) <= 1e-12 * std::max(1.0, std::fabs(b2.coeffs()[i])));
    // The generic derivative field goes through one extra jet order.
    CHECK(f2->partial(1)->value(pt) == doctest::Approx(2 * pt[0] * std::exp(2 * pt[0] * pt[1])).epsilon(1e-13));
}

TEST_CASE("evaluation is bit-reproducible") {
    auto f = testlib::library_field(9);
    const double pt[] = {0.1, 0.2, 0.3};
    Jet a = f->local_jet(pt, 4);
    Jet b = f->local_jet(pt, 4);
    for (std::size_t i = 0; i < a.coeffs().size(); ++i) CHECK(a.coeffs()[i] == b.coeffs()[i]);
}

TEST_CASE("abs guard") {
    auto f = parse3("(abs x1)");
    const double zero[] = {0.0, 0.0, 0.0};
    const double neg[] = {-2.0, 0.0, 0.0};
    CHECK_THROWS_AS(f->local_jet(zero, 1), DomainError);
    CHECK(f->local_jet(neg, 1).d(0) == -1.0);
}
