#pragma once

// Builders for small tangent-bundle examples written as prefix expressions.

#include <random>
#include <string>
#include <vector>

#include "efg/expr.hpp"
#include "efg/finsler.hpp"

namespace efg::testlib {

inline std::vector<std::string> bundle_coords(int n) {
    std::vector<std::string> c;
    for (int i = 0; i < n; ++i) c.push_back("x" + std::to_string(i + 1));
    for (int a = 0; a < n; ++a) c.push_back("y" + std::to_string(a + 1));
    return c;
}

inline FieldPtr parse_field(const std::string& text, const std::vector<std::string>& coords) {
    ExpressionParser p(coords, {});
    return expr_field(p.parse(text), static_cast<int>(coords.size()), text);
}

// Upper-triangle entries row by row: (0,0), (0,1), ..., (1,1), ...
inline SymmetricFields symmetric_from(const std::vector<std::string>& upper, int n,
                                      const std::vector<std::string>& coords) {
    SymmetricFields s(n, static_cast<int>(coords.size()));
    std::size_t k = 0;
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) s.set(i, j, parse_field(upper.at(k++), coords));
    return s;
}

// Entries N_i^a listed as [i * n + a].
inline NConnection nconn_from(const std::vector<std::string>& entries, int n, const std::vector<std::string>& coords) {
    NConnection N = NConnection::zero(n, static_cast<int>(coords.size()));
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < n; ++a) N.set(i, a, parse_field(entries.at(static_cast<std::size_t>(i * n + a)), coords));
    return N;
}

inline std::vector<std::vector<double>> uniform_points(int count, const std::vector<std::pair<double, double>>& box,
                                                       unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> pts;
    for (int k = 0; k < count; ++k) {
        std::vector<double> p;
        for (const auto& [lo, hi] : box) p.push_back(std::uniform_real_distribution<double>(lo, hi)(rng));
        pts.push_back(p);
    }
    return pts;
}

// A Riemannian-type example with nontrivial N and distinct g, h (n = 2).
inline SasakiData twisted_example() {
    const auto c = bundle_coords(2);
    auto g = symmetric_from({"(+ 2 (sin x1))", "(* 0.3 x2)", "(+ 3 (* x1 x2))"}, 2, c);
    auto h = symmetric_from({"(+ 1.5 (* 0.2 y1 x2))", "(* 0.1 y2)", "(- -2 (* 0.3 (cos (* x1 y1))))"}, 2, c);
    auto N = nconn_from({"(* x2 y1)", "(* 0.5 (sin y2))", "(+ x1 (* 0.2 y1 y2))", "(* 0.3 x1 x2)"}, 2, c);
    return make_sasaki(g, h, N, 1.3);
}

}  // namespace efg::testlib
