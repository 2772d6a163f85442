#pragma once

// Smooth test fields over (x, y, z) and a Richardson-extrapolated central-difference oracle.

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "efg/expr.hpp"

namespace efg::testlib {

inline const std::vector<std::string>& field_library() {
    static const std::vector<std::string> lib = {
        "(* (^ x 2) y)",
        "(sin x)",
        "(* (exp (* 0.5 x)) (cos y))",
        "(log (+ 2 (* x x) (* y y)))",
        "(sqrt (+ 1 (* x x) (* z z)))",
        "(/ 1 (+ 1.5 (sin (* x y))))",
        "(* x y z)",
        "(^ (+ 1 (* 0.1 x) (* 0.2 y)) 3.5)",
        "(* (sin x) (sin y) (sin z))",
        "(exp (- (* x x) (* 0.3 y z)))",
        "(/ (+ x y) (+ 3 (* z z)))",
        "(cos (+ x (* 2 y) (* 3 z)))",
        "(* (^ y 3) (log (+ 4 x)))",
        "(sqrt (+ 2 (sin (* x z))))",
        "(abs (+ 5 (* x y)))",
        "(- (* x x x x) (* 2 x x y y) (* z z z))",
        "(/ (exp y) (+ 2 (cos x)))",
        "(^ (+ 3 x) (+ 1 (* 0.2 y)))",
        "(* (+ 1 (* x x)) (+ 2 (sin z)) (cos (* 0.5 y)))",
        "(log (+ 3 (* (sin x) (cos y)) z))",
    };
    return lib;
}

inline FieldPtr library_field(std::size_t i) {
    ExpressionParser p({"x", "y", "z"}, {});
    return expr_field(p.parse(field_library()[i]), 3, "lib" + std::to_string(i));
}

using Fn = std::function<double(const std::array<double, 3>&)>;

inline double fd_first(const Fn& f, std::array<double, 3> p, int a, double h) {
    auto central = [&](double s) {
        auto pp = p, pm = p;
        pp[static_cast<std::size_t>(a)] += s;
        pm[static_cast<std::size_t>(a)] -= s;
        return (f(pp) - f(pm)) / (2.0 * s);
    };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

inline double fd_second(const Fn& f, std::array<double, 3> p, int a, int b, double h) {
    auto central = [&](double s) {
        if (a == b) {
            auto pp = p, pm = p;
            pp[static_cast<std::size_t>(a)] += s;
            pm[static_cast<std::size_t>(a)] -= s;
            return (f(pp) - 2.0 * f(p) + f(pm)) / (s * s);
        }
        auto at = [&](double da, double db) {
            auto q = p;
            q[static_cast<std::size_t>(a)] += da;
            q[static_cast<std::size_t>(b)] += db;
            return f(q);
        };
        return (at(s, s) - at(s, -s) - at(-s, s) + at(-s, -s)) / (4.0 * s * s);
    };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
}

}  // namespace efg::testlib
