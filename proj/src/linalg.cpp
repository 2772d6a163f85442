#include "efg/linalg.hpp"

#include <cmath>
#include <utility>

#include <Eigen/SVD>

#include "efg/errors.hpp"

namespace efg {

std::vector<Jet> jet_inverse(std::span<const Jet> m, int n) {
    if (static_cast<int>(m.size()) != n * n) throw ShapeError("jet matrix is not square");
    const auto N = static_cast<std::size_t>(n);
    std::vector<Jet> a(m.begin(), m.end());
    std::vector<Jet> inv;
    inv.reserve(N * N);
    const JetSpace& s = a[0].space();
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = 0; j < N; ++j) inv.emplace_back(s, i == j ? 1.0 : 0.0);

    double scale = 0.0;
    for (const auto& x : a) scale = std::max(scale, std::fabs(x.value()));
    for (std::size_t col = 0; col < N; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < N; ++r)
            if (std::fabs(a[r * N + col].value()) > std::fabs(a[piv * N + col].value())) piv = r;
        if (!(std::fabs(a[piv * N + col].value()) > 1e-300 + 1e-14 * scale))
            throw DegeneracyError("singular matrix in jet inversion", 0.0);
        if (piv != col)
            for (std::size_t k = 0; k < N; ++k) {
                std::swap(a[piv * N + k], a[col * N + k]);
                std::swap(inv[piv * N + k], inv[col * N + k]);
            }
        const Jet r = reciprocal(a[col * N + col]);
        for (std::size_t k = 0; k < N; ++k) {
            a[col * N + k] = a[col * N + k] * r;
            inv[col * N + k] = inv[col * N + k] * r;
        }
        for (std::size_t row = 0; row < N; ++row) {
            if (row == col) continue;
            const Jet f = a[row * N + col];
            if (f.is_constant() && f.value() == 0.0) continue;
            for (std::size_t k = 0; k < N; ++k) {
                a[row * N + k] -= f * a[col * N + k];
                inv[row * N + k] -= f * inv[col * N + k];
            }
        }
    }
    return inv;
}

std::vector<Jet> truncate_all(std::span<const Jet> m, int order) {
    std::vector<Jet> out;
    out.reserve(m.size());
    for (const auto& x : m) out.push_back(x.order() == order ? x : x.truncated(order));
    return out;
}

Eigen::MatrixXd jet_values(std::span<const Jet> m, int n) {
    Eigen::MatrixXd v(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) v(i, j) = m[static_cast<std::size_t>(i * n + j)].value();
    return v;
}

bool is_degenerate(const Eigen::MatrixXd& m, double threshold, double* det_out) {
    if (det_out) *det_out = m.determinant();
    if (m.size() == 0) return true;
    const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    const double top = sv(0);
    if (!(top > 0.0)) return true;
    return !(sv(sv.size() - 1) >= threshold * top);
}

}  // namespace efg
