#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "efg/killing.hpp"
#include "efg/probes.hpp"

using namespace efg;

namespace {

std::map<std::string, double> as_map(const std::vector<NamedValue>& v) {
    std::map<std::string, double> m;
    for (const auto& e : v) m[e.name] = e.value;
    return m;
}

}  // namespace

TEST_CASE("pipeline reproduces the Killing closed forms") {
    std::mt19937_64 rng(2024);
    for (int inst = 0; inst < 4; ++inst) {
        auto a = random_killing_ansatz(rng);
        auto data = killing_sasaki(a);
        for (const auto& p : probe_points({{-1, 1}, {-1, 1}, {0.1, 1.5}, {-1, 1}}, 3, 77 + inst)) {
            auto b = geometry_at(data, p);
            const std::vector<double> xv{p[0], p[1], p[2]};
            auto closed = as_map(killing_closed_forms(a, xv, ClosedFormVariant::Derived));
            auto pipe = as_map(killing_pipeline_values(b));
            for (const auto& [name, v] : closed) {
                INFO(name);
                CHECK(pipe.at(name) == doctest::Approx(v).epsilon(1e-9).scale(1.0));
            }
        }
    }
}

TEST_CASE("quoted K and P4_23 differ from the pipeline when g2 depends on x1") {
    std::mt19937_64 rng(7);
    auto a = random_killing_ansatz(rng);
    std::vector<double> p{0.3, -0.2, 0.7, 0.1};
    auto b = geometry_at(killing_sasaki(a), p);
    auto quoted = as_map(killing_closed_forms(a, std::vector<double>{0.3, -0.2, 0.7}, ClosedFormVariant::Quoted));
    auto pipe = as_map(killing_pipeline_values(b));
    CHECK(std::fabs(quoted.at("P4_23") - pipe.at("P4_23")) > 1e-6);
    CHECK(std::fabs(quoted.at("R_41") - pipe.at("R_41")) > 1e-6);
    CHECK(quoted.at("L1_11") == doctest::Approx(pipe.at("L1_11")).epsilon(1e-10));
}

TEST_CASE("decoupled residuals and full residual agree for the Killing ansatz") {
    std::mt19937_64 rng(99);
    auto a = random_killing_ansatz(rng);
    auto data = killing_sasaki(a);
    const double hl = 0.4, vl = -0.7;
    auto src = SourceSpec::killing(constant_field(4, hl), constant_field(4, vl));
    std::vector<double> p{0.2, 0.5, 0.9, 0.0};
    auto E = einstein_finsler_residual(data, src, p);
    auto d = killing_decoupled_residuals(a, std::vector<double>{0.2, 0.5, 0.9}, hl, vl);
    CHECK(-E(0, 0) == doctest::Approx(d.vv).epsilon(1e-9));
    CHECK(-E(2, 2) == doctest::Approx(d.hh).epsilon(1e-9));
    const double h3 = a.h3->value(std::vector<double>{0.2, 0.5, 0.9});
    CHECK(h3 * E(2, 0) == doctest::Approx(d.w[0]).epsilon(1e-9));
}
