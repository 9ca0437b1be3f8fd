#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qftlab/scattering.hpp"

namespace qftlab {

/// Parsed experiment description. One JSON document drives a whole run; see
/// configs/ for shipped examples and README for the schema.
struct ExperimentConfig {
  int schema = 1;
  std::string label;
  std::uint64_t seed = 1;
  TruncationParams truncation;
  Polynomial polynomial;
  std::vector<BumpSpec> bumps;
  ScatteringConfig scattering;
  std::vector<std::string> checks;
  std::map<std::string, Real> options;  // per-check numeric knobs
  std::string output_dir = "out";

  Real option(const std::string& key, Real fallback) const;
};

struct CheckRecord {
  std::string name;
  Real value = 0.0;
  Real tolerance = 0.0;
  bool pass = false;
  std::string detail;
  std::string cmp = "le";  // "le", "ge" or "none" (diagnostic only)
};

struct RunReport {
  int schema = 1;
  std::string label;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version;
  std::vector<CheckRecord> checks;

  bool all_pass() const;
  std::string to_json() const;  // deterministic byte-for-byte for fixed inputs
};

/// Names of all registered checks; the coverage test requires every one of
/// them to be reachable from the shipped configs.
std::vector<std::string> registered_checks();

ExperimentConfig parse_config(const std::string& json_text);  // ConfigInvalid with field path
ExperimentConfig load_config(const std::string& path);
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Executes the configured checks deterministically and writes
/// report.json (+ CSV side tables and matrix dumps) under output_dir.
/// Wall-clock timing goes to a separate timing.json so that report.json is
/// byte-identical across runs with the same config and seed.
RunReport run_experiment(const ExperimentConfig& cfg, const std::string& output_dir,
                         int workers = 1);

struct SweepResult {
  std::string axis;
  std::vector<Real> values;
  std::vector<std::map<std::string, Real>> observables;  // one map per value
  std::map<std::string, Real> slopes;                    // fitted log-log slopes
  std::string csv_path;
};

/// Re-runs the configured observables for each value of the sweep axis
/// (axis in {dt, n_max, K, approx_level, amplitude}); points may execute
/// concurrently, assembly is ordered by index.
SweepResult run_sweep(const ExperimentConfig& cfg, const std::string& axis,
                      const std::vector<Real>& values, const std::string& output_dir,
                      int workers = 1);

/// Re-validates the tolerances recorded in a report. Returns process exit
/// code semantics: 0 pass, 1 check failure, 2 malformed report.
int check_report(const std::string& report_path);

}  // namespace qftlab
