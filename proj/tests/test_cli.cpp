#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "efg/cli_io.hpp"
#include "efg/errors.hpp"

using namespace efg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / "efg_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    auto p = dir / "config.json";
    std::ofstream(p, std::ios::binary) << text;
    return p;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "efg");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::stringstream out, err;
    auto* old_out = std::cout.rdbuf(out.rdbuf());
    auto* old_err = std::cerr.rdbuf(err.rdbuf());
    const int code = cli_main(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(old_out);
    std::cerr.rdbuf(old_err);
    return {code, out.str(), err.str()};
}

std::string config_path(const std::string& name) { return std::string(EFG_CONFIG_DIR) + "/" + name; }

const char* kMinimal = R"J({"schema_version": 1, "scenario": "brane-diagonal"})J";

}  // namespace

TEST_CASE("flat geometry audit passes end to end") {
    const auto dir = scratch("audit");
    const auto r = cli({"audit", "--config", config_path("flat_audit.json"), "--out", dir.string()});
    CHECK(r.code == kExitOk);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    CHECK(rep["verdict"] == "pass");
    CHECK(rep["equations"].size() == 5);
    for (const auto& e : rep["equations"]) CHECK(e["max"].get<double>() < 1e-10);
    CHECK(rep["environment"]["seed"] == 7);
}

TEST_CASE("desk Killing case through the runner") {
    const auto dir = scratch("desk");
    const auto r = cli({"construct", "--config", config_path("desk_killing.json"), "--out", dir.string()});
    CHECK(r.code == kExitOk);
    const auto rep = nlohmann::json::parse(slurp(dir / "report.json"));
    bool seen = false;
    for (const auto& e : rep["equations"])
        if (e["label"] == "4ep2a") {
            seen = true;
            CHECK(e["max"].get<double>() < 1e-12);
        }
    CHECK(seen);
    CHECK(rep["details"]["regime"] == "case1");
    const auto csv = slurp(dir / "profile.csv");
    CHECK(csv.rfind("x1,x2,v,h3,h4,w1,w2,n1,n2\n", 0) == 0);
}

TEST_CASE("undeclared function names are config errors") {
    const auto dir = scratch("undeclared");
    const auto cfg = write_config(dir, R"J({
  "schema_version": 1,
  "scenario": "killing-construct",
  "functions": {"g": "(+ x1 h9)"},
  "parameters": {"f": "v", "psi": "g"}
})J");
    const auto r = cli({"construct", "--config", cfg.string(), "--out", dir.string()});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("h9") != std::string::npos);
    CHECK(r.err.find("/parameters/psi") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "report.json"));
    CHECK(cli({"validate", "--config", cfg.string()}).code == kExitConfig);
}

TEST_CASE("normalization round-trips byte for byte") {
    const auto first = validate_config(kMinimal);
    REQUIRE(first.ok);
    const auto second = validate_config(first.normalized);
    REQUIRE(second.ok);
    CHECK(second.normalized == first.normalized);
    const auto doc = nlohmann::json::parse(first.normalized);
    CHECK(doc["parameters"]["m"] == 2);
    CHECK(doc["grid"]["axes"]["y5"]["count"] == 41);
    CHECK(doc["tolerances"]["fd"] == 1e-6);
    CHECK(doc["scan"]["quantity"] == "K1");
    for (const auto& id : scenario_ids()) {
        std::string text = R"J({"schema_version": 1, "scenario": ")J" + id + R"J(", "functions": {"L": "(+ (- (^ y1 2)) (^ y2 2) (^ y3 2) (^ y4 2))", "f": "v"},)J";
        text += id == "geometry-audit" ? R"J("parameters": {"generating_function": "L"}})J"
                : id == "killing-construct" ? R"J("parameters": {"f": "f"}})J"
                : id == "eightd-construct" || id == "brane-offdiagonal" ? R"J("parameters": {"random": true}})J"
                                                                         : R"J("parameters": {}})J";
        const auto a = validate_config(text);
        INFO(id);
        REQUIRE(a.ok);
        CHECK(validate_config(a.normalized).normalized == a.normalized);
    }
    const auto r = cli({"validate", "--config", config_path("desk_killing.json")});
    CHECK(r.code == kExitOk);
    CHECK(validate_config(r.out).normalized == r.out);
}

TEST_CASE("validation errors are addressed") {
    SUBCASE("negative tolerance") {
        const auto v = validate_config(R"J({"schema_version": 1, "scenario": "brane-diagonal", "tolerances": {"fd": -1e-6}})J");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].find("/tolerances/fd") != std::string::npos);
    }
    SUBCASE("m out of range") {
        const auto v = validate_config(R"J({"schema_version": 1, "scenario": "brane-diagonal", "parameters": {"m": 5}})J");
        REQUIRE_FALSE(v.ok);
        CHECK(v.errors[0].find("/parameters/m") != std::string::npos);
        CHECK(v.errors[0].find("m <= 4") != std::string::npos);
    }
    SUBCASE("syntax errors carry line and column") {
        const auto v = validate_config("{\n  \"schema_version\": 1,\n  \"scenario\" \"brane-diagonal\"\n}");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].rfind("line 3", 0) == 0);
    }
    SUBCASE("unknown keys, bad scenario, missing version") {
        auto v = validate_config(R"J({"schema_version": 1, "scenario": "brane-diagonal", "parameters": {"mm": 2}})J");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].find("/parameters/mm") != std::string::npos);
        v = validate_config(R"J({"schema_version": 1, "scenario": "warp-drive"})J");
        CHECK_FALSE(v.ok);
        CHECK(v.errors[0].find("warp-drive") != std::string::npos);
        v = validate_config(R"J({"scenario": "brane-diagonal"})J");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].find("/schema_version") != std::string::npos);
        v = validate_config(R"J({"schema_version": 2, "scenario": "brane-diagonal"})J");
        CHECK_FALSE(v.ok);
    }
    SUBCASE("grids must be nonempty and ordered") {
        auto v = validate_config(
            R"J({"schema_version": 1, "scenario": "brane-diagonal", "grid": {"axes": {"y5": {"min": 2, "max": 1, "count": 0}}}})J");
        CHECK(v.errors.size() == 2);
        v = validate_config(R"J({"schema_version": 1, "scenario": "brane-diagonal", "grid": {"sampling": "halton"}})J");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].find("/grid/points") != std::string::npos);
    }
    SUBCASE("dispersion tables") {
        auto v = validate_config(
            R"J({"schema_version": 1, "scenario": "dispersion-roundtrip", "parameters": {"q": [{"indices": [0, 1, 2], "value": 0.1}]}})J");
        REQUIRE(v.errors.size() == 1);
        CHECK(v.errors[0].find("/parameters/q/0/indices") != std::string::npos);
    }
    SUBCASE("functions may not shadow coordinates") {
        const auto v = validate_config(R"J({"schema_version": 1, "scenario": "brane-diagonal", "functions": {"y5": "1"}})J");
        CHECK_FALSE(v.ok);
    }
}

TEST_CASE("CSV emission") {
    const auto dir = scratch("csv");
    Table t{{"y5", "phi_squared"}, {{0.0, 1.0}, {0.5, 1.0 / 3.0}}};
    emit_csv(t, (dir / "a.csv").string());
    const auto text = slurp(dir / "a.csv");
    CHECK(text == "y5,phi_squared\n0,1\n0.5,0.33333333333333331\n");
    emit_csv(Table{{"y5", "phi_squared"}, {}}, (dir / "empty.csv").string());
    CHECK(slurp(dir / "empty.csv") == "y5,phi_squared\n");
    emit_csv(t, (dir / "b.csv").string());
    CHECK(slurp(dir / "b.csv") == text);
    CHECK_THROWS_AS(emit_csv(t, (dir / "missing" / "c.csv").string()), Error);
}

TEST_CASE("exit-code contract") {
    const auto dir = scratch("codes");
    const auto desk = config_path("desk_killing.json");
    CHECK(cli({"construct", "--config", desk, "--out", (dir / "ok").string()}).code == kExitOk);
    // A tolerance tightened far below roundoff fails the verdict.
    auto r = cli({"construct", "--config", desk, "--out", (dir / "tight").string(), "--tolerance-scale", "1e-30"});
    CHECK(r.code == kExitFail);
    CHECK(nlohmann::json::parse(slurp(dir / "tight" / "report.json"))["verdict"] == "fail");
    CHECK(cli({"construct", "--config", desk, "--tolerance-scale", "-1"}).code == kExitConfig);
    CHECK(cli({"brane", "--config", desk}).code == kExitConfig);  // scenario/command mismatch
    CHECK(cli({"construct", "--config", (dir / "nope.json").string()}).code == kExitConfig);
    CHECK(cli({"construct"}).code == kExitConfig);
    CHECK(cli({"frobnicate", "--config", desk}).code == kExitConfig);
    // A module failure is a failing verdict, not a config error.
    const auto cfg = write_config(dir, R"J({"schema_version": 1, "scenario": "brane-diagonal",
        "parameters": {"y5_max": 5}, "grid": {"axes": {"y5": {"min": 0, "max": 10, "count": 3}}}})J");
    r = cli({"brane", "--config", cfg.string(), "--out", (dir / "domain").string()});
    CHECK(r.code == kExitFail);
    CHECK(r.err.find("error") != std::string::npos);
}

TEST_CASE("reruns are byte-identical") {
    const char* cases[][2] = {{"audit", "flat_audit.json"},        {"construct", "random_killing.json"},
                              {"construct", "random_eightd.json"}, {"brane", "brane_diagonal.json"},
                              {"scan", "brane_diagonal.json"},     {"brane", "brane_offdiagonal.json"},
                              {"dispersion", "dispersion.json"}};
    for (const auto& c : cases) {
        INFO(c[0] << " " << c[1]);
        const auto a = scratch(std::string("det_a_") + c[0]), b = scratch(std::string("det_b_") + c[0]);
        const auto ra = cli({c[0], "--config", config_path(c[1]), "--out", a.string()});
        const auto rb = cli({c[0], "--config", config_path(c[1]), "--out", b.string()});
        CHECK(ra.code == kExitOk);
        CHECK(ra.out.size() > 0);
        int files = 0;
        for (const auto& f : fs::directory_iterator(a)) {
            CHECK(slurp(f.path()) == slurp(b / f.path().filename()));
            ++files;
        }
        CHECK(files >= 2);
    }
    // The seed reaches the random instances.
    const auto a = scratch("seed_a"), b = scratch("seed_b");
    cli({"construct", "--config", config_path("random_killing.json"), "--out", a.string()});
    cli({"construct", "--config", config_path("random_killing.json"), "--out", b.string(), "--seed", "12"});
    CHECK(slurp(a / "profile.csv") != slurp(b / "profile.csv"));
    CHECK(nlohmann::json::parse(slurp(b / "report.json"))["environment"]["seed"] == 12);
}
