#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cebound/bounds.hpp"
#include "cebound/scenarios.hpp"

namespace cebound {

/// One unit of work after sweep and seed expansion.
struct Job {
  std::string id;
  std::optional<ScenarioSpec> spec;
  std::optional<std::filesystem::path> model;
  /// Sweep group and x value, for plot data.
  std::string sweep_group;
  std::optional<double> sweep_value;
};

struct RunConfig {
  std::vector<Job> jobs;
  ModuliKind moduli = ModuliKind::kLinear;
  double tolerance = 1e-9;
  std::size_t budget = 200000;
  double reach_tol = 0.0;
  bool recursive_lipschitz = false;
  std::filesystem::path output = "cetool-out";
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

/// Command-line overrides; unset fields keep the config values.
struct RunOverrides {
  std::optional<ModuliKind> moduli;
  std::optional<std::size_t> budget;
  std::optional<std::filesystem::path> output;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<std::string>> families;
  std::optional<std::size_t> workers;
};

/// Parses the JSON config. Errors carry the line (for syntax errors) or the
/// field path. CETOOL_BUDGET overrides the config budget; an explicit
/// --budget overrides both.
RunConfig load_config(const std::filesystem::path& path, const RunOverrides& overrides = {});
RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir,
                       const RunOverrides& overrides = {});

enum class Verdict { kPassed, kBoundOnly, kViolation, kInvariantFailure, kError };
const char* to_string(Verdict v);

struct JobResult {
  std::string id;
  std::string family;
  Verdict verdict = Verdict::kError;
  std::optional<BoundReport> report;
  std::string message;
};

struct RunSummary {
  std::vector<JobResult> results;
  int exit_code = 0;
};

/// Runs every job (in parallel up to `workers`), writes per-scenario
/// reports, the summary table, the verdict file and plot data. The exit code
/// is nonzero iff some scenario failed.
RunSummary run(const RunConfig& config, std::ostream& log);

/// Runs a single job; never throws.
JobResult run_job(const Job& job, const RunConfig& config);

}  // namespace cebound
