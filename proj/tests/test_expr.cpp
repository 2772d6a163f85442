#include <doctest.h>

#include <cmath>

#include "efg/errors.hpp"
#include "efg/expr.hpp"

using namespace efg;

TEST_CASE("parser resolves coordinates then functions") {
    ExpressionParser p({"x1", "x2", "v"}, {{"f", "(* v (exp x1))"}, {"g", "(+ f 1)"}});
    Expr e = p.parse("(* g x2)");
    auto field = expr_field(e, 3);
    const double pt[] = {0.5, 2.0, 3.0};
    CHECK(field->value(pt) == doctest::Approx((3.0 * std::exp(0.5) + 1.0) * 2.0));
    CHECK(p.parse("pi")->value == doctest::Approx(M_PI));
    CHECK(p.parse("(- 3)")->value == -3.0);
    CHECK(p.parse("(- 10 2 3)")->value == 5.0);
}

TEST_CASE("parser errors name the problem") {
    ExpressionParser p({"x1"}, {{"a", "(+ b 1)"}, {"b", "(* a 2)"}});
    try {
        p.parse("(+ x1 h9)");
        FAIL("expected an error");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("'h9'") != std::string::npos);
    }
    CHECK_THROWS_AS(p.parse("a"), ConfigError);
    CHECK_THROWS_AS(p.parse("(+ x1"), ConfigError);
    CHECK_THROWS_AS(p.parse("(/ x1)"), ConfigError);
    CHECK_THROWS_AS(p.parse("(frob x1)"), ConfigError);
    CHECK_THROWS_AS(p.parse("x1 x1"), ConfigError);
}

TEST_CASE("builders fold constants") {
    using namespace ex;
    Expr x = var(0);
    CHECK(is_const(x * num(0.0), 0.0));
    CHECK((x * num(1.0)).get() == x.get());
    CHECK(is_const(num(2.0) + num(3.0), 5.0));
    CHECK(is_const(differentiate(num(4.0), 0), 0.0));
    CHECK(is_const(differentiate(x, 1), 0.0));
}

TEST_CASE("symbolic derivative agrees with jets") {
    ExpressionParser p({"x", "y"}, {});
    Expr e = p.parse("(* (sqrt (+ 2 (* x y))) (^ (abs (- y 3)) 1.5) (log (+ 2 x)) (^ x y))");
    auto f = expr_field(e, 2);
    const double pt[] = {0.7, 0.4};
    Jet j = f->local_jet(pt, 2);
    CHECK(f->partial(0)->value(pt) == doctest::Approx(j.d(0)).epsilon(1e-13));
    CHECK(f->partial(1)->value(pt) == doctest::Approx(j.d(1)).epsilon(1e-13));
    CHECK(f->partial(0)->partial(1)->value(pt) == doctest::Approx(j.d2(0, 1)).epsilon(1e-12));
}

TEST_CASE("text form round trip") {
    std::vector<std::string> coords{"x1", "v"};
    ExpressionParser p(coords, {});
    Expr e = p.parse("(+ (* 0.1 x1) (exp (- v)) (^ v 2))");
    std::string s = to_sexpr(e, coords);
    Expr e2 = p.parse(s);
    CHECK(to_sexpr(e2, coords) == s);
    const double pt[] = {0.3, 1.7};
    CHECK(expr_field(e, 2)->value(pt) == expr_field(e2, 2)->value(pt));
}

TEST_CASE("used variables") {
    ExpressionParser p({"x1", "x2", "v"}, {});
    auto used = used_vars(p.parse("(* x1 (sin x1))"), 3);
    CHECK(used[0]);
    CHECK(!used[1]);
    CHECK(!used[2]);
}
