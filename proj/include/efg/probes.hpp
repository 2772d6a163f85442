#pragma once

// Probe points for residual checks: a Halton sequence with a random Cranley-Patterson
// shift, so runs are deterministic for a given seed but not aligned with any grid.

#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

#include "efg/errors.hpp"

namespace efg {

inline double radical_inverse(std::uint64_t index, int base) {
    double inv = 1.0 / base, f = inv, r = 0.0;
    while (index > 0) {
        r += f * static_cast<double>(index % static_cast<std::uint64_t>(base));
        index /= static_cast<std::uint64_t>(base);
        f *= inv;
    }
    return r;
}

// `count` points in the box; the null-section ball of radius `exclude` around the origin of
// the coordinates in `null_coords` is skipped by drawing further sequence members.
inline std::vector<std::vector<double>> probe_points(const std::vector<std::pair<double, double>>& box, int count,
                                                     std::uint64_t seed, const std::vector<int>& null_coords = {},
                                                     double exclude = 0.0) {
    static constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
    if (box.size() > std::size(kPrimes)) throw ShapeError("probe box has too many coordinates");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> shift;
    for (std::size_t d = 0; d < box.size(); ++d) shift.push_back(unit(rng));

    std::vector<std::vector<double>> out;
    for (std::uint64_t k = 1; static_cast<int>(out.size()) < count; ++k) {
        if (k > 1000u * static_cast<std::uint64_t>(count) + 1000u) throw DomainError("probe box lies inside the excluded set");
        std::vector<double> p(box.size());
        for (std::size_t d = 0; d < box.size(); ++d) {
            double u = radical_inverse(k, kPrimes[d]) + shift[d];
            u -= std::floor(u);
            p[d] = box[d].first + u * (box[d].second - box[d].first);
        }
        double r2 = 0.0;
        for (int c : null_coords) r2 += p[static_cast<std::size_t>(c)] * p[static_cast<std::size_t>(c)];
        if (!null_coords.empty() && std::sqrt(r2) <= exclude) continue;
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace efg
