#pragma once

// Scenario configs, their validation and normalization, the scenario runner, and the
// deterministic report and CSV writers behind the command-line tool.
//
// A config is a JSON object:
//
//   {
//     "schema_version": 1,
//     "scenario": "killing-construct",
//     "functions": {"psi": "(* 0.3 (sin x1))", "f": "v"},
//     "parameters": {...},          // scenario specific, expressions by name or inline
//     "grid": {"axes": {"v": {"min": 0.1, "max": 1.5, "count": 3}, ...},
//              "sampling": "lattice" | "halton", "points": 16},
//     "tolerances": {"residual": 1e-8, ...},
//     "seed": 1,
//     "output": {"report": "report.json", "csv": "profile.csv"}
//   }
//
// Brane configs also carry a "scan" block and an "output.scan" CSV path; the scan command
// writes its report as "scan_<report>".
//
// Normalization fills every default and prints with sorted keys, so the normalized text of a
// normalized config is itself.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "efg/table.hpp"

namespace efg {

inline constexpr int kSchemaVersion = 1;
std::string engine_version();

// Scenario ids accepted in the "scenario" field.
const std::vector<std::string>& scenario_ids();

struct ValidationResult {
    bool ok = false;
    std::string normalized;           // pretty-printed, sorted keys, trailing newline
    std::vector<std::string> errors;  // "line L, column C: ..." or "/json/pointer: ..."
};
ValidationResult validate_config(std::string_view text);

struct ReportEntry {
    std::string label;
    double max = 0.0;
    double mean = 0.0;
    std::vector<double> worst_point;
    // Absent for diagnostic entries, which carry the verdict "info" and never fail a run.
    std::optional<double> tolerance;

    std::string verdict() const;
};

struct ScenarioReport {
    std::string scenario;
    std::int64_t seed = 0;
    std::vector<ReportEntry> entries;
    std::map<std::string, std::string> details;  // regime, skipped checks, ...
    std::vector<std::string> notes;              // run-time failures of the owning module; any note fails

    bool pass() const;
    std::string to_json() const;
};

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::int64_t> seed;
    double tolerance_scale = 1.0;
    // CLI subcommand; empty accepts any scenario. "scan" runs the config's scan block.
    std::string command;
};

struct RunResult {
    ScenarioReport report;
    std::vector<std::string> written;  // paths, in write order
};

// Validates, dispatches to the owning module and writes the report and CSV files.
// Throws ConfigError on schema problems or a command/scenario mismatch.
RunResult run_scenario(std::string_view config_text, const RunOptions& options);

// Writes to_csv(t) to `path`; throws Error when the file cannot be written.
void emit_csv(const Table& t, const std::string& path);

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitFail = 2 };

// The command-line entry point (subcommands audit, construct, brane, scan, dispersion,
// validate). Summaries go to stdout, diagnostics to stderr.
int cli_main(int argc, const char* const* argv);

}  // namespace efg
