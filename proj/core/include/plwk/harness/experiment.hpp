#pragma once

#include "plwk/config.hpp"
#include "plwk/harness/config_file.hpp"
#include "plwk/method.hpp"
#include "plwk/problems/elliptic.hpp"
#include "plwk/problems/linear_block.hpp"
#include "plwk/records.hpp"
#include "plwk/system.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace plwk::harness {

struct ProblemSpec {
  std::string name = "linear_block";  // linear_block | elliptic
  problems::LinearBlockOptions linear;
  problems::EllipticOptions elliptic;

  // Applies recognized keys (grid_n, n_experiments, n_blocks, n_unknowns,
  // coherence, gamma_min, gamma_max, param_norm, true_gamma, problem_seed)
  // on top of the current values.
  void apply(const KeyValues& kv);
};

std::vector<std::string> builtin_problem_names();

// A built-in problem instance together with its exact data and the known
// reference solution used for error reporting.
struct BuiltinProblem {
  std::shared_ptr<const OperatorSystem> system;
  std::vector<DataVector> exact_data;
  ParameterVector reference;
  std::string description;
};

BuiltinProblem make_problem(const ProblemSpec& spec);

struct ExperimentSpec {
  ProblemSpec problem;
  std::vector<Method> methods;
  std::vector<double> noise_percents = {0.0};
  SolverConfig config;
  std::filesystem::path out_dir;  // empty = no files written
  std::uint64_t seed = 1;
};

// methods non-empty, noise levels non-negative, problem resolvable,
// output directory creatable. Raises invalid_config otherwise.
void validate_spec(const ExperimentSpec& spec);

struct RunOutcome {
  Method method;
  double noise_percent = 0;
  std::optional<RunRecord> record;  // empty on failure
  std::string error;                // failure note; other runs continue
  std::filesystem::path csv_path;
  double wall_seconds = 0;
};

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::filesystem::path metadata_path;
};

// One run and one CSV per (method, noise level). Noise draws depend only on
// the noise level, so every method at a level sees the same observations.
// A metadata file records the full configuration, seeds, version and wall
// times. Partial failures are recorded and the remaining runs continue.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Per-cycle comparison of all methods at one noise level, aligned by cycle
// index (columns: error_ref and residual_sum per method; shorter runs leave
// trailing cells empty).
std::string comparison_table_csv(const std::vector<RunOutcome>& runs,
                                 double noise_percent);

// run_experiment plus one comparison CSV per noise level.
ExperimentResult compare_methods(const ExperimentSpec& spec);

struct SweepRow {
  double noise_percent = 0;
  double delta_min = 0;
  std::int64_t stop_index = 0;
  StopReason stop_reason = StopReason::max_cycles;
  double error_at_stop = 0;
  double skipped_fraction = 0;
};

// Runs methods[0] across the noise ladder (>= 3 levels) and tabulates
// stopping index, error at the stop and skipped-step fraction per level.
// Writes sweep.csv when out_dir is set.
std::vector<SweepRow> sweep_noise(const ExperimentSpec& spec);

std::string sweep_csv_string(const std::vector<SweepRow>& rows);

// Software version recorded in metadata files.
const char* version_string();

}  // namespace plwk::harness
