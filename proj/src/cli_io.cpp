#include "efg/cli_io.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "efg/brane.hpp"
#include "efg/dgeometry.hpp"
#include "efg/dispersion.hpp"
#include "efg/errors.hpp"
#include "efg/expr.hpp"
#include "efg/probes.hpp"
#include "efg/solutions.hpp"

namespace efg {

using json = nlohmann::json;

std::string engine_version() { return "1.0.0"; }

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids{"geometry-audit", "killing-construct", "eightd-construct",
                                              "brane-diagonal", "brane-offdiagonal", "dispersion-roundtrip"};
    return ids;
}

std::string ReportEntry::verdict() const {
    if (!tolerance) return "info";
    return max <= *tolerance ? "pass" : "fail";
}

bool ScenarioReport::pass() const {
    if (!notes.empty()) return false;
    return std::all_of(entries.begin(), entries.end(), [](const ReportEntry& e) { return e.verdict() != "fail"; });
}

std::string ScenarioReport::to_json() const {
    json eq = json::array();
    for (const auto& e : entries) {
        eq.push_back({{"label", e.label},
                      {"max", e.max},
                      {"mean", e.mean},
                      {"worst_point", e.worst_point},
                      {"tolerance", e.tolerance ? json(*e.tolerance) : json(nullptr)},
                      {"verdict", e.verdict()}});
    }
    json j{{"scenario", scenario},
           {"environment", {{"engine", "efg"}, {"engine_version", engine_version()}, {"seed", seed}}},
           {"equations", eq},
           {"details", details},
           {"notes", notes},
           {"verdict", pass() ? "pass" : "fail"}};
    return j.dump(2) + "\n";
}

void emit_csv(const Table& t, const std::string& path) {
    const std::string body = to_csv(t);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path);
    out << body;
    if (!out) throw Error("cannot write " + path);
}

namespace {

// ------------------------------------------------------------------------------------------
// Schema checks with default filling

struct ExprRef {
    std::string path;
    std::string text;
    std::vector<std::string> coords;
};

struct Ctx {
    std::vector<std::string> errors;
    std::vector<ExprRef> exprs;
    void error(const std::string& path, const std::string& msg) {
        errors.push_back((path.empty() ? "/" : path) + ": " + msg);
    }
};

std::string type_name(const json& j) {
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    return j.type_name();
}

std::string expr_text(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

// View on one object of the config. Each accessor marks its key as known and fills the
// default when the key is absent; finish() flags everything else.
class Node {
public:
    Node(Ctx& ctx, json& value, std::string path) : ctx_(ctx), v_(value), path_(std::move(path)) {
        if (!v_.is_object()) {
            if (!v_.is_null()) ctx_.error(path_, "expected an object, found " + type_name(v_));
            v_ = json::object();
        }
    }
    Node(const Node&) = delete;

    std::string at(const std::string& key) const { return path_ + "/" + key; }
    json& raw(const std::string& key) { return v_[key]; }
    bool has(const std::string& key) const { return v_.contains(key); }
    void known(const std::string& key) { known_.insert(key); }
    Ctx& ctx() { return ctx_; }

    Node object(const std::string& key) {
        known_.insert(key);
        return Node(ctx_, v_[key], at(key));
    }

    double number(const std::string& key, std::optional<double> def, const std::function<bool(double)>& ok = {},
                  const std::string& rule = "value out of range") {
        known_.insert(key);
        if (!v_.contains(key)) {
            if (!def) {
                ctx_.error(at(key), "missing required number");
                return 0.0;
            }
            v_[key] = *def;
        }
        const json& j = v_[key];
        if (!j.is_number()) {
            ctx_.error(at(key), "expected a number, found " + type_name(j));
            return def.value_or(0.0);
        }
        const double x = j.get<double>();
        if (!std::isfinite(x) || (ok && !ok(x))) ctx_.error(at(key), rule);
        return x;
    }

    double positive(const std::string& key, std::optional<double> def) {
        return number(key, def, [](double x) { return x > 0; }, "must be positive");
    }

    std::int64_t integer(const std::string& key, std::optional<std::int64_t> def, std::int64_t lo, std::int64_t hi,
                         const std::string& rule = "") {
        known_.insert(key);
        if (!v_.contains(key)) {
            if (!def) {
                ctx_.error(at(key), "missing required integer");
                return lo;
            }
            v_[key] = *def;
        }
        const json& j = v_[key];
        if (!j.is_number_integer()) {
            ctx_.error(at(key), "expected an integer, found " + type_name(j));
            return def.value_or(lo);
        }
        const auto x = j.get<std::int64_t>();
        if (x < lo || x > hi)
            ctx_.error(at(key), rule.empty() ? "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]"
                                             : rule);
        return x;
    }

    bool boolean(const std::string& key, bool def) {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = def;
        if (!v_[key].is_boolean()) {
            ctx_.error(at(key), "expected a boolean, found " + type_name(v_[key]));
            return def;
        }
        return v_[key].get<bool>();
    }

    std::string text(const std::string& key, std::optional<std::string> def,
                     const std::vector<std::string>& options = {}) {
        known_.insert(key);
        if (!v_.contains(key)) {
            if (!def) {
                ctx_.error(at(key), "missing required string");
                return "";
            }
            v_[key] = *def;
        }
        if (!v_[key].is_string()) {
            ctx_.error(at(key), "expected a string, found " + type_name(v_[key]));
            return def.value_or("");
        }
        auto s = v_[key].get<std::string>();
        if (!options.empty() && std::find(options.begin(), options.end(), s) == options.end()) {
            std::string list;
            for (const auto& o : options) list += (list.empty() ? "" : ", ") + o;
            ctx_.error(at(key), "unknown value '" + s + "' (expected one of " + list + ")");
        }
        return s;
    }

    // A prefix expression (declared name, coordinate or full tree) or a plain number. The
    // text is parsed once all declarations are known.
    void expr(const std::string& key, std::optional<json> def, const std::vector<std::string>& coords) {
        known_.insert(key);
        if (!v_.contains(key)) {
            if (!def) {
                ctx_.error(at(key), "missing required expression");
                return;
            }
            v_[key] = *def;
        }
        check_expr(v_[key], at(key), coords);
    }

    void optional_expr(const std::string& key, const std::vector<std::string>& coords) {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = nullptr;
        if (!v_[key].is_null()) check_expr(v_[key], at(key), coords);
    }

    void expr_pair(const std::string& key, const std::vector<std::string>& coords) {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = json::array({0, 0});
        json& j = v_[key];
        if (!j.is_array() || j.size() != 2) {
            ctx_.error(at(key), "expected an array of two expressions");
            return;
        }
        for (std::size_t i = 0; i < 2; ++i) check_expr(j[i], at(key) + "/" + std::to_string(i), coords);
    }

    void signs(const std::string& key, std::vector<int> def) {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = def;
        const json& j = v_[key];
        bool ok = j.is_array() && j.size() == def.size();
        if (ok)
            for (const auto& e : j) ok = ok && e.is_number_integer() && (e.get<int>() == 1 || e.get<int>() == -1);
        if (!ok) ctx_.error(at(key), "expected " + std::to_string(def.size()) + " signs, each 1 or -1");
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> def,
                                const std::function<bool(double)>& ok = {}, const std::string& rule = "") {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = def;
        const json& j = v_[key];
        std::vector<double> out;
        if (!j.is_array()) {
            ctx_.error(at(key), "expected an array of numbers");
            return out;
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string p = at(key) + "/" + std::to_string(i);
            if (!j[i].is_number() || !std::isfinite(j[i].get<double>())) {
                ctx_.error(p, "expected a number");
                continue;
            }
            out.push_back(j[i].get<double>());
            if (ok && !ok(out.back())) ctx_.error(p, rule);
        }
        return out;
    }

    std::vector<std::int64_t> integers(const std::string& key, std::vector<std::int64_t> def, std::int64_t lo,
                                       std::int64_t hi, const std::string& rule) {
        known_.insert(key);
        if (!v_.contains(key)) v_[key] = def;
        const json& j = v_[key];
        std::vector<std::int64_t> out;
        if (!j.is_array()) {
            ctx_.error(at(key), "expected an array of integers");
            return out;
        }
        for (std::size_t i = 0; i < j.size(); ++i) {
            const std::string p = at(key) + "/" + std::to_string(i);
            if (!j[i].is_number_integer()) {
                ctx_.error(p, "expected an integer");
                continue;
            }
            out.push_back(j[i].get<std::int64_t>());
            if (out.back() < lo || out.back() > hi) ctx_.error(p, rule);
        }
        return out;
    }

    void finish() {
        for (auto it = v_.begin(); it != v_.end(); ++it)
            if (!known_.count(it.key())) ctx_.error(at(it.key()), "unknown key");
    }

private:
    void check_expr(const json& j, const std::string& path, const std::vector<std::string>& coords) {
        if (j.is_number()) {
            if (!std::isfinite(j.get<double>())) ctx_.error(path, "constant must be finite");
            return;
        }
        if (!j.is_string()) {
            ctx_.error(path, "expected an expression string or a number, found " + type_name(j));
            return;
        }
        ctx_.exprs.push_back({path, j.get<std::string>(), coords});
    }

    Ctx& ctx_;
    json& v_;
    std::string path_;
    std::set<std::string> known_;
};

struct AxisDefault {
    std::string name;
    double min, max;
    int count;
};

struct ScenarioSchema {
    std::vector<AxisDefault> axes;
    std::string sampling = "lattice";
    int points = 0;
    std::map<std::string, double> tolerances;
};

const std::vector<std::string> kX{"x1", "x2"};
const std::vector<std::string> kXV{"x1", "x2", "v"};
const std::vector<std::string> kX5{"x1", "x2", "y5"};
const std::vector<std::string> kX57{"x1", "x2", "y5", "y7"};

std::vector<std::string> audit_coords(int n) {
    std::vector<std::string> c;
    for (int i = 1; i <= n; ++i) c.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) c.push_back("y" + std::to_string(i));
    return c;
}

bool is_brane(const std::string& s) { return s == "brane-diagonal" || s == "brane-offdiagonal"; }
bool is_eightd(const std::string& s) { return s == "eightd-construct" || s == "brane-offdiagonal"; }

ScenarioSchema schema_for(const std::string& scenario, int audit_dim) {
    ScenarioSchema s;
    if (scenario == "geometry-audit") {
        for (int i = 1; i <= audit_dim; ++i) s.axes.push_back({"x" + std::to_string(i), -1.0, 1.0, 2});
        for (int i = 1; i <= audit_dim; ++i) s.axes.push_back({"y" + std::to_string(i), 0.5, 1.5, 2});
        s.sampling = "halton";
        s.points = 10;
        s.tolerances = {{"residual", 1e-10}};
    } else if (scenario == "killing-construct") {
        s.axes = {{"x1", -1, 1, 3}, {"x2", -1, 1, 3}, {"v", 0.1, 1.5, 3}, {"y4", 0, 0, 1}};
        s.tolerances = {{"residual", 1e-8}, {"agreement", 1e-8}, {"quadrature", 1e-10}};
    } else if (is_eightd(scenario)) {
        s.axes = {{"x1", -1, 1, 2}, {"x2", -1, 1, 2}, {"v", 0.1, 1.5, 2}, {"y5", 0.2, 1.2, 2}, {"y7", 0.2, 1.2, 2}};
        s.sampling = "halton";
        s.points = 5;
        s.tolerances = {{"residual", 1e-6}, {"quadrature", 1e-10}};
        if (scenario == "brane-offdiagonal") s.tolerances["roundtrip"] = 1e-12;
    } else if (scenario == "brane-diagonal") {
        s.axes = {{"y5", 0.0, 10.0, 41}};
        s.tolerances = {{"anchor", 1e-12}, {"asymptote", 1e-3}, {"inflection", 1e-10}, {"fd", 1e-6}, {"parity", 1e-10}};
    } else if (scenario == "dispersion-roundtrip") {
        s.axes = {{"k1", -1, 1, 2}, {"k2", -1, 1, 2}, {"k3", -1, 1, 2}};
        s.sampling = "halton";
        s.points = 12;
        s.tolerances = {{"residual", 1e-6}, {"slope", 0.2}, {"homogeneity", 1e-10}};
    }
    return s;
}

void check_grid(Node& grid, const ScenarioSchema& schema) {
    {
        Node axes = grid.object("axes");
        for (const auto& a : schema.axes) {
            Node ax = axes.object(a.name);
            const double lo = ax.number("min", a.min);
            const double hi = ax.number("max", a.max);
            ax.integer("count", a.count, 1, 100000, "must be a positive count");
            if (lo > hi) grid.ctx().error(axes.at(a.name), "min exceeds max");
            ax.finish();
        }
        axes.finish();
    }
    const auto sampling = grid.text("sampling", schema.sampling, {"lattice", "halton"});
    const auto points = grid.integer("points", schema.points, 0, 100000);
    if (sampling == "halton" && points < 1) grid.ctx().error(grid.at("points"), "halton sampling needs at least one point");
    grid.finish();
}

void check_level(Node& lv, const std::vector<std::string>& fiber_coords, bool required) {
    lv.expr("f", required ? std::nullopt : std::optional<json>(json(0)), fiber_coords);
    lv.expr("lambda", json(0), fiber_coords);
    lv.expr("f0", json(0), kX);
    lv.expr("h0", json(1), kX);
    lv.expr("s0", json(1), kX);
    lv.expr_pair("w0", kX);
    lv.expr_pair("n0", kX);
    lv.finish();
}

// Coefficient declarations of a 4-d generating set; random instances ignore them.
void check_generating(Node& p, bool required) {
    p.expr("psi", json(0), kX);
    p.expr("f", required ? std::nullopt : std::optional<json>(json("v")), kXV);
    p.expr("f0", json(0), kX);
    p.expr("h0", json(1), kX);
    p.expr("s0", json(1), kX);
    p.expr("v_lambda", json(0), kXV);
    p.optional_expr("h_lambda", kX);
    p.expr_pair("w0", kX);
    p.expr_pair("n0", kX);
    p.signs("eps", {1, -1, -1, -1});
    p.number("v_lower", 0.0);
}

void check_eightd(Node& p) {
    const bool random = p.boolean("random", false);
    {
        Node base = p.object("base");
        check_generating(base, !random);
        base.finish();
    }
    {
        Node l1 = p.object("level1");
        check_level(l1, kX5, !random);
    }
    {
        Node l2 = p.object("level2");
        check_level(l2, kX57, !random);
    }
    p.signs("eps_fiber", {-1, -1, -1, -1});
}

void check_brane(Node& p) {
    p.integer("m", 2, 1, 4, "must satisfy 1 <= m <= 4 (m <= 4 is the maximal fiber count)");
    p.positive("eps", 1.0);
    p.number("lambda", 0.0);
    p.number("a", 1.0);
    p.positive("M", 1.0);
    p.positive("lP", 1.0);
    p.positive("y5_max", 200.0);
    for (const char* k : {"sigma7", "sigma8"}) {
        const auto s = p.integer(k, -1, -1, 1, "must be 1 or -1");
        if (s == 0) p.ctx().error(p.at(k), "must be 1 or -1");
    }
    p.positive("fd_step", 1e-4);
}

void check_scan(Node& s, const json& params) {
    auto base = [&](const char* key, double fallback) {
        return params.contains(key) && params[key].is_number() ? params[key].get<double>() : fallback;
    };
    s.integers("m", {static_cast<std::int64_t>(base("m", 2))}, 1, 4,
               "must satisfy 1 <= m <= 4 (m <= 4 is the maximal fiber count)");
    s.numbers("eps", {base("eps", 1.0)}, [](double x) { return x > 0; }, "must be positive");
    s.numbers("lambda", {base("lambda", 0.0)});
    s.numbers("a", {base("a", 1.0)});
    s.numbers("M", {base("M", 1.0)}, [](double x) { return x > 0; }, "must be positive");
    {
        Node y = s.object("y5");
        const double lo = y.number("min", 0.0), hi = y.number("max", 10.0);
        y.integer("count", 11, 1, 100000, "must be a positive count");
        if (lo > hi) s.ctx().error(s.at("y5"), "min exceeds max");
        y.finish();
    }
    s.text("quantity", "K1", {"K1", "K2", "conservation", "levi-civita"});
    s.finish();
}

void check_dispersion(Node& p) {
    const auto r = p.integer("r", 1, 1, 4);
    p.positive("c", 1.0);
    p.known("ghat");
    if (!p.has("ghat")) p.raw("ghat") = json::array({json::array({1, 0, 0}), json::array({0, 1, 0}), json::array({0, 0, 1})});
    {
        const json& g = p.raw("ghat");
        bool ok = g.is_array() && g.size() == 3;
        if (ok)
            for (const auto& row : g) {
                ok = ok && row.is_array() && row.size() == 3;
                if (ok)
                    for (const auto& e : row) ok = ok && e.is_number() && std::isfinite(e.get<double>());
            }
        if (!ok) p.ctx().error(p.at("ghat"), "expected a 3 x 3 array of numbers");
    }
    p.known("q");
    if (!p.has("q")) p.raw("q") = json::array();
    json& q = p.raw("q");
    if (!q.is_array()) {
        p.ctx().error(p.at("q"), "expected an array of {indices, value} entries");
    } else {
        for (std::size_t i = 0; i < q.size(); ++i) {
            Node e(p.ctx(), q[i], p.at("q") + "/" + std::to_string(i));
            e.number("value", std::nullopt);
            e.known("indices");
            const json& idx = e.raw("indices");
            bool ok = idx.is_array() && static_cast<std::int64_t>(idx.size()) == 2 * r;
            if (ok)
                for (const auto& k : idx) ok = ok && k.is_number_integer() && k.get<int>() >= 0 && k.get<int>() <= 2;
            if (!ok)
                p.ctx().error(e.at("indices"), "expected " + std::to_string(2 * r) + " spatial indices, each 0, 1 or 2");
            e.finish();
        }
    }
    const double norm = p.number("random_norm", 0.0, [](double x) { return x >= 0; }, "must not be negative");
    if (norm > 0 && q.is_array() && !q.empty()) p.ctx().error(p.at("random_norm"), "excludes explicit q entries");
    p.numbers("slope_norms", {}, [](double x) { return x > 0; }, "must be positive");
}

const std::regex kIdentifier("[A-Za-z_][A-Za-z0-9_]*");

// Returns the normalized document; errors are collected in ctx.
json check_config(json doc, Ctx& ctx) {
    Node root(ctx, doc, "");
    root.integer("schema_version", std::nullopt, kSchemaVersion, kSchemaVersion,
                 "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
    const auto scenario = root.text("scenario", std::nullopt, scenario_ids());
    const bool known = std::find(scenario_ids().begin(), scenario_ids().end(), scenario) != scenario_ids().end();

    std::map<std::string, std::string> functions;
    {
        root.known("functions");
        if (!root.has("functions")) root.raw("functions") = json::object();
        json& f = root.raw("functions");
        if (!f.is_object()) {
            ctx.error("/functions", "expected an object of name -> expression");
        } else {
            for (auto it = f.begin(); it != f.end(); ++it) {
                if (!std::regex_match(it.key(), kIdentifier))
                    ctx.error("/functions/" + it.key(), "function names must be identifiers");
                if (!it.value().is_string())
                    ctx.error("/functions/" + it.key(), "expected an expression string");
                else
                    functions[it.key()] = it.value().get<std::string>();
            }
        }
    }
    root.integer("seed", 1, 0, std::numeric_limits<std::int64_t>::max(), "must be a non-negative integer");

    int audit_dim = 4;
    {
        Node p = root.object("parameters");
        if (scenario == "geometry-audit") {
            audit_dim = static_cast<int>(p.integer("dimension", 4, 1, 8));
            if (audit_dim < 1 || audit_dim > 8) audit_dim = 4;
            p.expr("generating_function", std::nullopt, audit_coords(audit_dim));
            p.positive("lP", 1.0);
            p.number("lambda", 0.0);
            p.text("mixing", "canonical", {"canonical", "identified"});
        } else if (scenario == "killing-construct") {
            const bool random = p.boolean("random", false);
            check_generating(p, !random);
        } else if (scenario == "eightd-construct") {
            check_eightd(p);
        } else if (scenario == "brane-diagonal") {
            check_brane(p);
        } else if (scenario == "brane-offdiagonal") {
            check_brane(p);
            check_eightd(p);
        } else if (scenario == "dispersion-roundtrip") {
            check_dispersion(p);
        }
        if (known) p.finish();
    }
    const auto schema = schema_for(scenario, audit_dim);
    {
        Node g = root.object("grid");
        if (known) check_grid(g, schema);
    }
    {
        Node t = root.object("tolerances");
        for (const auto& [k, v] : schema.tolerances) t.positive(k, v);
        if (known) t.finish();
    }
    {
        Node o = root.object("output");
        for (const char* k : {"report", "csv"}) {
            const auto path = o.text(k, std::string(k) == "report" ? "report.json" : "profile.csv");
            if (path.empty()) ctx.error(o.at(k), "must not be empty");
        }
        if (is_brane(scenario)) {
            const auto path = o.text("scan", "scan.csv");
            if (path.empty()) ctx.error(o.at("scan"), "must not be empty");
        }
        o.finish();
    }
    if (is_brane(scenario)) {
        Node s = root.object("scan");
        check_scan(s, doc["parameters"]);
    }
    if (known) root.finish();

    // Coordinates of the scenario may not be shadowed by declarations.
    std::set<std::string> coords;
    for (const auto& a : schema.axes) coords.insert(a.name);
    for (const auto& c : {"x1", "x2", "v", "y5", "y7"}) coords.insert(c);
    for (const auto& [name, body] : functions)
        if (coords.count(name)) ctx.error("/functions/" + name, "function name shadows a coordinate");

    for (const auto& ref : ctx.exprs) {
        try {
            ExpressionParser parser(ref.coords, functions);
            parser.parse(ref.text);
        } catch (const ConfigError& e) {
            ctx.error(ref.path, e.what());
        }
    }
    return doc;
}

// ------------------------------------------------------------------------------------------
// Running

std::string strip_json_prefix(std::string msg) {
    const auto close = msg.find("] ");
    if (msg.rfind("[json.exception", 0) == 0 && close != std::string::npos) msg = msg.substr(close + 2);
    return msg;
}

std::pair<int, int> line_column(std::string_view text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

// Per-label running max/mean with the point of the max.
class Stats {
public:
    void add(const std::string& label, double value, const std::vector<double>& point) {
        auto it = index_.find(label);
        if (it == index_.end()) {
            it = index_.emplace(label, entries_.size()).first;
            entries_.push_back({label, 0.0, 0.0, {}, std::nullopt});
            counts_.push_back(0);
        }
        auto& e = entries_[it->second];
        auto& n = counts_[it->second];
        const double v = std::fabs(value);
        if (n == 0 || std::isnan(v) || (!std::isnan(e.max) && v > e.max)) {
            if (!(n > 0 && std::isnan(e.max))) {
                e.max = v;
                e.worst_point = point;
            }
        }
        e.mean += v;
        ++n;
    }

    // Entries in insertion order; tolerance keyed by label (absent -> diagnostic).
    std::vector<ReportEntry> finish(const std::function<std::optional<double>(const std::string&)>& tol) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            entries_[i].mean /= std::max(1, counts_[i]);
            entries_[i].tolerance = tol(entries_[i].label);
        }
        return entries_;
    }

private:
    std::map<std::string, std::size_t> index_;
    std::vector<ReportEntry> entries_;
    std::vector<int> counts_;
};

struct Run {
    const json& cfg;
    std::int64_t seed;
    double scale;
    std::map<std::string, std::string> functions;
    ScenarioReport report;
    std::vector<std::pair<std::string, Table>> tables;  // output key -> table

    double tol(const std::string& key) const { return cfg["tolerances"][key].get<double>() * scale; }
    const json& params() const { return cfg["parameters"]; }

    FieldPtr field(const json& j, const std::vector<std::string>& coords, const std::string& name) const {
        ExpressionParser parser(coords, functions);
        return expr_field(parser.parse(expr_text(j)), static_cast<int>(coords.size()), name);
    }
    Expr expression(const json& j, const std::vector<std::string>& coords) const {
        ExpressionParser parser(coords, functions);
        return parser.parse(expr_text(j));
    }

    // Grid points over the axes, in the given coordinate order.
    std::vector<std::vector<double>> points(const std::vector<std::string>& axes) const {
        const json& g = cfg["grid"];
        std::vector<std::pair<double, double>> box;
        std::vector<int> counts;
        for (const auto& a : axes) {
            const json& ax = g["axes"][a];
            box.emplace_back(ax["min"].get<double>(), ax["max"].get<double>());
            counts.push_back(ax["count"].get<int>());
        }
        if (g["sampling"] == "halton") return probe_points(box, g["points"].get<int>(), static_cast<std::uint64_t>(seed));
        std::size_t total = 1;
        for (int c : counts) total *= static_cast<std::size_t>(c);
        if (total > 1000000) throw ConfigError("/grid/axes: lattice has more than 10^6 points");
        std::vector<std::vector<double>> out;
        std::vector<int> idx(axes.size(), 0);
        for (std::size_t k = 0; k < total; ++k) {
            std::vector<double> p(axes.size());
            for (std::size_t d = 0; d < axes.size(); ++d) {
                const auto [lo, hi] = box[d];
                p[d] = counts[d] == 1 ? lo : lo + (hi - lo) * idx[d] / (counts[d] - 1);
            }
            out.push_back(std::move(p));
            for (int d = static_cast<int>(axes.size()) - 1; d >= 0; --d) {
                if (++idx[static_cast<std::size_t>(d)] < counts[static_cast<std::size_t>(d)]) break;
                idx[static_cast<std::size_t>(d)] = 0;
            }
        }
        return out;
    }

    QuadOptions quad() const {
        QuadOptions q;
        q.abs_tol = cfg["tolerances"]["quadrature"].get<double>();
        return q;
    }
};

std::vector<std::vector<double>> project(const std::vector<std::vector<double>>& pts, std::vector<int> idx) {
    std::set<std::vector<double>> seen;
    std::vector<std::vector<double>> out;
    for (const auto& p : pts) {
        std::vector<double> q;
        for (int i : idx) q.push_back(p[static_cast<std::size_t>(i)]);
        if (seen.insert(q).second) out.push_back(std::move(q));
    }
    return out;
}

std::array<int, 4> signs4(const json& j) { return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()}; }

// -- geometry-audit --------------------------------------------------------------------------

void run_audit(Run& r) {
    const json& p = r.params();
    const int n = p["dimension"].get<int>();
    const auto coords = audit_coords(n);
    auto gf = GeneratingFunction::from_square(r.field(p["generating_function"], coords, "L"), n);
    const auto N = canonical_nconnection(gf);
    const auto data = sasaki_lift(gf, N, p["lP"].get<double>());
    const auto source = SourceSpec::cosmological(2 * n, p["lambda"].get<double>());
    DConnectionOptions opt;
    opt.mixing = p["mixing"] == "identified" ? VerticalMixing::Identified : VerticalMixing::Canonical;
    const auto pts = r.points(coords);

    Stats st;
    Table t;
    t.columns = coords;
    for (const char* c : {"compatibility", "torsion_h", "torsion_v", "einstein"}) t.columns.push_back(c);
    const double betas[] = {0.5, 2.0, 3.0};
    const auto hom = check_homogeneity(gf, pts, betas);
    st.add("homogeneity", hom.max_deviation, hom.worst_point);
    for (const auto& u : pts) {
        const auto b = geometry_at(data, u, opt);
        const double compat = metric_compatibility_residual(b.connection, data, u).max;
        double th = 0.0, tv = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    th = std::max(th, std::fabs(b.torsion.T(i, j, k)));
                    tv = std::max(tv, std::fabs(b.torsion.T(n + i, n + j, n + k)));
                }
        const double ein = einstein_residual_from(b, source, u).cwiseAbs().maxCoeff();
        st.add("compatibility", compat, u);
        st.add("torsion_h", th, u);
        st.add("torsion_v", tv, u);
        st.add("einstein", ein, u);
        auto row = u;
        for (double v : {compat, th, tv, ein}) row.push_back(v);
        t.rows.push_back(std::move(row));
    }
    const double tol = r.tol("residual");
    r.report.entries = st.finish([&](const std::string&) { return tol; });
    r.tables.emplace_back("csv", std::move(t));
}

// -- 4-d construction ------------------------------------------------------------------------

GeneratingSet generating_set(const Run& r, const json& p) {
    GeneratingSet g;
    g.eps = signs4(p["eps"]);
    g.psi = r.field(p["psi"], kX, "psi");
    g.f = r.field(p["f"], kXV, "f");
    g.f0 = r.field(p["f0"], kX, "f0");
    g.h0 = r.field(p["h0"], kX, "h0");
    g.s0 = r.field(p["s0"], kX, "s0");
    g.v_lambda = r.field(p["v_lambda"], kXV, "v_lambda");
    if (!p["h_lambda"].is_null()) g.h_lambda = r.field(p["h_lambda"], kX, "h_lambda");
    for (int i = 0; i < 2; ++i) {
        g.w0[static_cast<std::size_t>(i)] = r.field(p["w0"][static_cast<std::size_t>(i)], kX, "w0");
        g.n0[static_cast<std::size_t>(i)] = r.field(p["n0"][static_cast<std::size_t>(i)], kX, "n0");
    }
    g.v_lower = p["v_lower"].get<double>();
    g.quad = r.quad();
    return g;
}

void run_killing(Run& r) {
    const json& p = r.params();
    GeneratingSet gen;
    if (p["random"].get<bool>()) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(r.seed));
        gen = random_generating_set(rng, r.quad());
    } else {
        gen = generating_set(r, p);
    }
    const auto pts = r.points({"x1", "x2", "v", "y4"});
    const auto xv = project(pts, {0, 1, 2});
    const auto s = construct_killing_solution(gen, xv);
    r.report.details["regime"] = to_string(s.regime);

    Stats st;
    for (const auto& u : pts) {
        const auto c = certify_solution(s, {u}, true);
        const auto& e = c.equations;
        st.add("4ep1a", e[0].max, u);
        st.add("4ep2a", e[1].max, u);
        st.add("4ep3a", std::max(e[2].max, e[3].max), u);
        st.add("4ep4a", std::max(e[4].max, e[5].max), u);
        st.add("pipeline_agreement", c.agreement_gap, u);
        st.add("off_ansatz_components", c.other_components, u);
    }
    if (!p["random"].get<bool>() && !p["h_lambda"].is_null()) {
        const auto g = gen.eps;
        for (const auto& x : project(pts, {0, 1})) {
            const auto b = verify_background_psi(gen.psi, g[0], g[1], gen.h_lambda, {x});
            st.add("background", b.max_residual, x);
        }
    }
    const double res = r.tol("residual"), agr = r.tol("agreement");
    r.report.entries = st.finish([&](const std::string& l) -> std::optional<double> {
        if (l == "off_ansatz_components") return std::nullopt;
        return l == "pipeline_agreement" ? agr : res;
    });

    Table t;
    t.columns = {"x1", "x2", "v", "h3", "h4", "w1", "w2", "n1", "n2"};
    const auto& a = s.ansatz;
    for (const auto& q : xv)
        t.rows.push_back({q[0], q[1], q[2], a.h3->value(q), a.h4->value(q), a.w[0]->value(q), a.w[1]->value(q),
                          a.n[0]->value(q), a.n[1]->value(q)});
    r.tables.emplace_back("csv", std::move(t));
}

// -- 8-d construction ------------------------------------------------------------------------

FiberLevelData level_data(const Run& r, const json& l, const std::vector<std::string>& coords) {
    FiberLevelData d;
    d.f = r.field(l["f"], coords, "f");
    d.lambda = r.field(l["lambda"], coords, "lambda");
    d.f0 = r.field(l["f0"], kX, "f0");
    d.h0 = r.field(l["h0"], kX, "h0");
    d.s0 = r.field(l["s0"], kX, "s0");
    for (std::size_t i = 0; i < 2; ++i) {
        d.w0[i] = r.field(l["w0"][i], kX, "w0");
        d.n0[i] = r.field(l["n0"][i], kX, "n0");
    }
    return d;
}

EightDGeneratingSet eightd_set(const Run& r, const std::vector<std::vector<double>>& pts) {
    const json& p = r.params();
    EightDGeneratingSet g;
    if (p["random"].get<bool>()) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(r.seed));
        g = random_eight_d_set(rng, r.quad());
    } else {
        g.base = generating_set(r, p["base"]);
        g.level1 = level_data(r, p["level1"], kX5);
        g.level2 = level_data(r, p["level2"], kX57);
        g.eps_fiber = signs4(p["eps_fiber"]);
    }
    g.base_samples = project(pts, {0, 1, 2});
    g.level1.samples = project(pts, {0, 1, 3});
    g.level2.samples = project(pts, {0, 1, 3, 4});
    return g;
}

void certify_8d(Run& r, const EightDAnsatz& a, const std::vector<std::vector<double>>& pts, Stats& st) {
    static const char* labels[] = {"4ep1b",    "4ep2b",    "4ep3b",    "4ep4b",    "4ep2b:y5",
                                   "4ep3b:y5", "4ep4b:y5", "4ep2b:y7", "4ep3b:y7", "4ep4b:y7"};
    for (const auto& u : pts) {
        const auto c = certify_eight_d(a, {u});
        for (std::size_t k = 0; k < c.equations.size() && k < std::size(labels); ++k)
            st.add(labels[k], c.equations[k].max, u);
    }
    r.report.details["regime"] = to_string(a.base.regime);
    r.report.details["regime_y5"] = to_string(a.level1.regime);
    r.report.details["regime_y7"] = to_string(a.level2.regime);
}

Table eightd_profile(const EightDAnsatz& a, const std::vector<std::vector<double>>& pts, bool brane) {
    Table t;
    t.columns = {"x1", "x2", "v", "y5", "y7", "h3", "h4", "h5", "h6", "h7", "h8"};
    if (brane) {
        t.columns.push_back("phi_squared");
        t.columns.push_back("hbar");
    }
    for (const auto& u : pts) {
        const std::vector<double> xv{u[0], u[1], u[2]}, x5{u[0], u[1], u[3]}, x57{u[0], u[1], u[3], u[4]};
        std::vector<double> row = u;
        for (double v : {a.base.ansatz.h3->value(xv), a.base.ansatz.h4->value(xv), a.level1.ha->value(x5),
                         a.level1.hb->value(x5), a.level2.ha->value(x57), a.level2.hb->value(x57)})
            row.push_back(v);
        if (brane) {
            const std::vector<double> y{u[3]};
            row.push_back(a.phi2 ? a.phi2->value(y) : 1.0);
            row.push_back(a.hbar ? a.hbar->value(y) : 1.0);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void run_eightd(Run& r) {
    const auto pts = r.points({"x1", "x2", "v", "y5", "y7"});
    const auto a = extend_8d(eightd_set(r, pts));
    Stats st;
    certify_8d(r, a, pts, st);
    const double tol = r.tol("residual");
    r.report.entries = st.finish([&](const std::string&) { return tol; });
    r.tables.emplace_back("csv", eightd_profile(a, pts, false));
}

// -- branes ----------------------------------------------------------------------------------

BraneParams brane_params(const json& p) {
    BraneParams b;
    b.m = p["m"].get<int>();
    b.eps = p["eps"].get<double>();
    b.lambda = p["lambda"].get<double>();
    b.a = p["a"].get<double>();
    b.M = p["M"].get<double>();
    b.lP = p["lP"].get<double>();
    b.y5_max = p["y5_max"].get<double>();
    b.sigma7 = p["sigma7"].get<int>();
    b.sigma8 = p["sigma8"].get<int>();
    return b;
}

void run_brane_diagonal(Run& r) {
    const auto bp = brane_params(r.params());
    const double step = r.params()["fd_step"].get<double>() * bp.eps;
    Stats st;
    st.add("phi2_center", phi_squared(0.0, bp) - 1.0, {0.0});
    st.add("hbar_center", bp.lP * std::sqrt(std::fabs(hbar_profile(0.0, bp))) - 1.0, {0.0});
    {
        const auto f = expr_field(phi_squared_expr(bp, ex::var(0)), 1);
        st.add("phi2_inflection", f->local_jet(std::vector<double>{bp.eps}, 2).d2(0, 0), {bp.eps});
    }
    if (100.0 * bp.eps <= bp.y5_max)
        st.add("phi2_asymptote", phi_squared(100.0 * bp.eps, bp) - bp.a, {100.0 * bp.eps});
    else
        r.report.details["phi2_asymptote"] = "skipped: 100 eps exceeds y5_max";
    st.add("cond3a_parity", conservation_residual(0.0, bp), {0.0});

    Table t;
    t.columns = {"y5", "phi_squared", "hbar", "K1", "K2", "conservation", "conservation_fd", "levi_civita"};
    for (const auto& pt : r.points({"y5"})) {
        const double y = pt[0];
        const auto src = brane_sources(y, bp);
        const double exact = conservation_residual(y, bp);
        const double fd = conservation_residual_fd(y, bp, step);
        const double lc = levi_civita_residual_norm(bp, y);
        st.add("cond3a_fd", (exact - fd) / std::max(1.0, std::fabs(exact)), pt);
        st.add("cond3a", exact, pt);
        st.add("levi_civita", lc, pt);
        t.rows.push_back({y, phi_squared(y, bp), hbar_profile(y, bp), src.k1, src.k2, exact, fd, lc});
    }
    const std::map<std::string, std::string> tol_key{{"phi2_center", "anchor"},      {"hbar_center", "anchor"},
                                                     {"phi2_inflection", "inflection"}, {"phi2_asymptote", "asymptote"},
                                                     {"cond3a_parity", "parity"},    {"cond3a_fd", "fd"}};
    r.report.entries = st.finish([&](const std::string& l) -> std::optional<double> {
        auto it = tol_key.find(l);
        if (it == tol_key.end()) return std::nullopt;
        return r.tol(it->second);
    });
    r.tables.emplace_back("csv", std::move(t));
}

void run_brane_offdiagonal(Run& r) {
    const auto bp = brane_params(r.params());
    const auto pts = r.points({"x1", "x2", "v", "y5", "y7"});
    const auto a = assemble_finsler_brane(eightd_set(r, pts), bp);
    Stats st;
    certify_8d(r, a, pts, st);
    const auto data = eight_d_sasaki(a);
    for (const auto& q : pts) {
        const std::vector<double> u{q[0], q[1], q[2], 0.0, q[3], 0.0, q[4], 0.0};
        const Eigen::MatrixXd A = assemble_coordinate_metric(data, u);
        const auto rec = recover_blocks(A, 4, data.blocks.lP);
        const Eigen::MatrixXd g = data.blocks.g.values(u), h = data.blocks.h.values(u), N = data.nconn.values(u);
        auto rel = [](const Eigen::MatrixXd& x, const Eigen::MatrixXd& ref) {
            return (x - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref.cwiseAbs().maxCoeff());
        };
        st.add("block_roundtrip", std::max({rel(rec.g, g), rel(rec.h, h), rel(rec.N, N)}), q);
    }
    const double res = r.tol("residual"), rt = r.tol("roundtrip");
    r.report.entries =
        st.finish([&](const std::string& l) -> std::optional<double> { return l == "block_roundtrip" ? rt : res; });
    r.tables.emplace_back("csv", eightd_profile(a, pts, true));
}

void run_scan(Run& r) {
    const json& s = r.cfg["scan"];
    ScanSpec spec;
    spec.base = brane_params(r.params());
    for (const auto& m : s["m"]) spec.m.push_back(m.get<int>());
    spec.eps = s["eps"].get<std::vector<double>>();
    spec.lambda = s["lambda"].get<std::vector<double>>();
    spec.a = s["a"].get<std::vector<double>>();
    spec.M = s["M"].get<std::vector<double>>();
    const double lo = s["y5"]["min"].get<double>(), hi = s["y5"]["max"].get<double>();
    const int n = s["y5"]["count"].get<int>();
    for (int k = 0; k < n; ++k) spec.y5.push_back(n == 1 ? lo : lo + (hi - lo) * k / (n - 1));
    const std::string q = s["quantity"].get<std::string>();
    spec.quantity = q == "K1"             ? ScanQuantity::K1
                    : q == "K2"           ? ScanQuantity::K2
                    : q == "conservation" ? ScanQuantity::Conservation
                                          : ScanQuantity::LeviCivita;
    auto t = parameter_scan(spec);
    double zeros = 0.0;
    for (const auto& row : t.rows) zeros += row[7] + row[8];
    ReportEntry e{"scan_sign_changes", zeros, zeros, {}, std::nullopt};
    r.report.entries.push_back(e);
    r.report.details["mode"] = "scan";
    r.report.details["rows"] = std::to_string(t.rows.size());
    r.tables.emplace_back("scan", std::move(t));
}

// -- dispersion ------------------------------------------------------------------------------

void run_dispersion(Run& r) {
    const json& p = r.params();
    DispersionSpec s;
    s.r = p["r"].get<int>();
    s.c = p["c"].get<double>();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) s.ghat(i, j) = p["ghat"][static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].get<double>();
    if (p["random_norm"].get<double>() > 0) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(r.seed));
        s.q = random_dispersion(rng, s.r, p["random_norm"].get<double>()).q;
    }
    for (const auto& e : p["q"]) s.set_q(e["indices"].get<std::vector<int>>(), e["value"].get<double>());
    try {
        s.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("/parameters: ") + e.what());
    }

    std::vector<Vec3> probes;
    for (const auto& k : r.points({"k1", "k2", "k3"})) probes.push_back({k[0], k[1], k[2]});
    const auto rep = roundtrip_check(s, probes);

    Stats st;
    Table t;
    t.columns = {"k1", "k2", "k3", "omega2_root", "omega2_formula", "discrepancy"};
    for (const auto& pr : rep.probes) {
        const std::vector<double> k{pr.k[0], pr.k[1], pr.k[2]};
        st.add("roundtrip", pr.discrepancy, k);
        t.rows.push_back({pr.k[0], pr.k[1], pr.k[2], pr.omega2_root, pr.omega2_formula, pr.discrepancy});
    }
    std::vector<std::vector<double>> pts8;
    for (const auto& k : probes) pts8.push_back({0, 0, 0, 0, 1.0, k[0], k[1], k[2]});
    const auto gf = generating_from_q(s, pts8);
    const double betas[] = {0.5, 2.0, 3.0};
    const auto hom = check_homogeneity(gf, pts8, betas);
    st.add("homogeneity", hom.max_deviation, hom.worst_point);
    st.add("roundtrip_ratio", rep.ratio, {});

    const auto norms = p["slope_norms"].get<std::vector<double>>();
    if (!norms.empty()) {
        const double qn = s.q_norm();
        if (qn == 0.0) throw ConfigError("/parameters/slope_norms: needs a nonzero q");
        const auto sl = discrepancy_slope(s.scaled_q(1.0 / qn), norms, probes);
        st.add("slope", sl.slope - 2.0, norms);
        r.report.details["slope"] = json(sl.slope).dump();
    }
    const double res = r.tol("residual"), hm = r.tol("homogeneity"), sl = r.tol("slope");
    r.report.entries = st.finish([&](const std::string& l) -> std::optional<double> {
        if (l == "roundtrip") return res;
        if (l == "homogeneity") return hm;
        if (l == "slope") return sl;
        return std::nullopt;
    });
    r.tables.emplace_back("csv", std::move(t));
}

const std::map<std::string, std::vector<std::string>>& command_scenarios() {
    static const std::map<std::string, std::vector<std::string>> m{
        {"audit", {"geometry-audit"}},
        {"construct", {"killing-construct", "eightd-construct"}},
        {"brane", {"brane-diagonal", "brane-offdiagonal"}},
        {"scan", {"brane-diagonal", "brane-offdiagonal"}},
        {"dispersion", {"dispersion-roundtrip"}},
    };
    return m;
}

}  // namespace

ValidationResult validate_config(std::string_view text) {
    ValidationResult out;
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_column(text, e.byte);
        out.errors.push_back("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                             strip_json_prefix(e.what()));
        return out;
    }
    if (!doc.is_object()) {
        out.errors.push_back("/: a config must be a JSON object");
        return out;
    }
    Ctx ctx;
    const json normalized = check_config(std::move(doc), ctx);
    out.errors = ctx.errors;
    out.ok = out.errors.empty();
    if (out.ok) out.normalized = normalized.dump(2) + "\n";
    return out;
}

RunResult run_scenario(std::string_view config_text, const RunOptions& options) {
    const auto v = validate_config(config_text);
    if (!v.ok) throw ConfigError("invalid config: " + v.errors.front(), v.errors);
    if (!(options.tolerance_scale > 0) || !std::isfinite(options.tolerance_scale))
        throw ConfigError("--tolerance-scale must be positive");
    if (options.seed && *options.seed < 0) throw ConfigError("--seed must not be negative");
    const json cfg = json::parse(v.normalized);
    const std::string scenario = cfg["scenario"].get<std::string>();
    if (!options.command.empty() && options.command != "validate") {
        const auto it = command_scenarios().find(options.command);
        if (it == command_scenarios().end()) throw ConfigError("unknown command '" + options.command + "'");
        if (std::find(it->second.begin(), it->second.end(), scenario) == it->second.end())
            throw ConfigError("scenario '" + scenario + "' cannot be run by '" + options.command + "'");
    }

    Run r{cfg, options.seed.value_or(cfg["seed"].get<std::int64_t>()), options.tolerance_scale, {}, {}, {}};
    for (auto it = cfg["functions"].begin(); it != cfg["functions"].end(); ++it)
        r.functions[it.key()] = it.value().get<std::string>();
    r.report.scenario = scenario;
    r.report.seed = r.seed;

    try {
        if (options.command == "scan")
            run_scan(r);
        else if (scenario == "geometry-audit")
            run_audit(r);
        else if (scenario == "killing-construct")
            run_killing(r);
        else if (scenario == "eightd-construct")
            run_eightd(r);
        else if (scenario == "brane-diagonal")
            run_brane_diagonal(r);
        else if (scenario == "brane-offdiagonal")
            run_brane_offdiagonal(r);
        else if (scenario == "dispersion-roundtrip")
            run_dispersion(r);
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        r.report.notes.push_back(e.what());
    }

    RunResult result;
    namespace fs = std::filesystem;
    const fs::path dir(options.out_dir.empty() ? "." : options.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
    for (const auto& [key, table] : r.tables) {
        const auto path = (dir / cfg["output"][key].get<std::string>()).string();
        emit_csv(table, path);
        result.written.push_back(path);
    }
    const std::string report_name = cfg["output"]["report"].get<std::string>();
    const auto report_path = (dir / (options.command == "scan" ? "scan_" + report_name : report_name)).string();
    {
        std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + report_path);
        out << r.report.to_json();
    }
    result.written.push_back(report_path);
    result.report = std::move(r.report);
    return result;
}

// ------------------------------------------------------------------------------------------
// Command line

int cli_main(int argc, const char* const* argv) {
    CLI::App app{"Finsler geometry engine: scenario runner"};
    app.require_subcommand(1);
    std::string config, out_dir = ".";
    std::optional<std::int64_t> seed;
    double scale = 1.0;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"audit", "Audit the d-geometry of a generating function"},
        {"construct", "Construct and certify a 4-d or 8-d solution"},
        {"brane", "Brane profiles, sources and diagnostics"},
        {"scan", "Parameter scan of a brane config"},
        {"dispersion", "Dispersion roundtrip through the null cone"},
        {"validate", "Validate a config and print its normalized form"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config, "Scenario config (JSON)")->required();
        sub->add_option("--out", out_dir, "Output directory");
        sub->add_option("--seed", seed, "Override the config seed");
        sub->add_option("--tolerance-scale", scale, "Multiply every verdict tolerance");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    std::ifstream in(config, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot read config " << config << "\n";
        return kExitConfig;
    }
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    if (command == "validate") {
        const auto v = validate_config(text);
        if (!v.ok) {
            for (const auto& e : v.errors) std::cerr << "error: " << e << "\n";
            return kExitConfig;
        }
        std::cout << v.normalized;
        return kExitOk;
    }

    RunOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.tolerance_scale = scale;
    opt.command = command;
    try {
        const auto res = run_scenario(text, opt);
        const auto& rep = res.report;
        for (const auto& e : rep.entries) {
            std::cout << e.label << "  max=" << e.max;
            if (e.tolerance) std::cout << "  tol=" << *e.tolerance;
            std::cout << "  " << e.verdict() << "\n";
        }
        for (const auto& n : rep.notes) std::cerr << "error: " << n << "\n";
        for (const auto& w : res.written) std::cout << "wrote " << w << "\n";
        std::cout << (rep.pass() ? "PASS" : "FAIL") << "\n";
        return rep.pass() ? kExitOk : kExitFail;
    } catch (const ConfigError& e) {
        for (const auto& m : e.messages) std::cerr << "error: " << m << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

}  // namespace efg
