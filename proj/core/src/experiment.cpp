#include "plwk/harness/experiment.hpp"

#include "plwk/errors.hpp"
#include "plwk/harness/csv.hpp"
#include "plwk/harness/noise.hpp"
#include "plwk/rng.hpp"
#include "plwk/solver.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <sstream>

namespace plwk::harness {

namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365;  // "noise"
constexpr std::uint64_t kRunStream = 0x72756e;        // "run"

double parse_double(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::invalid_config, "bad numeric value for " + key);
  }
}

std::int64_t parse_int(const std::string& value, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    raise(ErrorCode::invalid_config, "bad integer value for " + key);
  }
}

std::string noise_label(double percent) {
  std::ostringstream out;
  out << percent;
  std::string s = out.str();
  for (char& c : s) {
    if (c == '.') c = 'p';
  }
  return s;
}

}  // namespace

const char* version_string() { return "plwk 0.1.0"; }

void ProblemSpec::apply(const KeyValues& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "problem") {
      name = value;
    } else if (key == "grid_n") {
      elliptic.grid_n = static_cast<int>(parse_int(value, key));
    } else if (key == "n_experiments") {
      elliptic.n_experiments = static_cast<int>(parse_int(value, key));
    } else if (key == "gamma_min") {
      elliptic.gamma_min = parse_double(value, key);
    } else if (key == "gamma_max") {
      elliptic.gamma_max = parse_double(value, key);
    } else if (key == "param_norm") {
      const auto norm = problems::parse_param_norm(value);
      if (!norm) raise(ErrorCode::invalid_config, "param_norm must be l2 or h1");
      elliptic.param_norm = *norm;
    } else if (key == "true_gamma") {
      if (value == "two_bumps") {
        elliptic.true_gamma = problems::GammaProfile::default_two_bumps();
      } else if (value.rfind("constant:", 0) == 0) {
        elliptic.true_gamma = problems::GammaProfile::constant(
            parse_double(value.substr(9), key));
      } else {
        raise(ErrorCode::invalid_config,
              "true_gamma must be two_bumps or constant:<value>");
      }
    } else if (key == "n_blocks") {
      linear.n_blocks = static_cast<int>(parse_int(value, key));
    } else if (key == "rows_per_block") {
      linear.rows_per_block = static_cast<int>(parse_int(value, key));
    } else if (key == "n_unknowns") {
      linear.n_unknowns = static_cast<int>(parse_int(value, key));
    } else if (key == "coherence") {
      linear.coherence = parse_double(value, key);
    } else if (key == "problem_seed") {
      linear.seed = static_cast<std::uint64_t>(parse_int(value, key));
    }
    // unknown keys are left for the CLI layer to interpret
  }
}

std::vector<std::string> builtin_problem_names() {
  return {"linear_block", "elliptic"};
}

BuiltinProblem make_problem(const ProblemSpec& spec) {
  BuiltinProblem built;
  if (spec.name == "linear_block") {
    auto problem = std::make_shared<problems::LinearBlockProblem>(
        problems::LinearBlockProblem::random(spec.linear));
    built.exact_data = problem->exact_data();
    built.reference = problem->true_solution();
    built.description = problem->describe();
    built.system = std::move(problem);
  } else if (spec.name == "elliptic") {
    auto problem = std::make_shared<problems::EllipticProblem>(spec.elliptic);
    built.exact_data = problem->exact_data();
    built.reference = problem->reference();
    built.description = problem->describe();
    built.system = std::move(problem);
  } else {
    raise(ErrorCode::invalid_config, "unknown problem '" + spec.name + "'");
  }
  return built;
}

void validate_spec(const ExperimentSpec& spec) {
  if (spec.methods.empty()) {
    raise(ErrorCode::invalid_config, "method list is empty");
  }
  for (double p : spec.noise_percents) {
    if (!(p >= 0.0)) {
      raise(ErrorCode::invalid_config, "noise percent must be non-negative");
    }
  }
  bool known = false;
  for (const auto& name : builtin_problem_names()) {
    known = known || name == spec.problem.name;
  }
  if (!known) {
    raise(ErrorCode::invalid_config,
          "unknown problem '" + spec.problem.name + "'");
  }
  if (!spec.out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(spec.out_dir, ec);
    if (ec) {
      raise(ErrorCode::invalid_config,
            "cannot create output directory " + spec.out_dir.string());
    }
  }
}

namespace {

nlohmann::json config_json(const SolverConfig& cfg) {
  nlohmann::json j;
  j["eta"] = cfg.eta;
  j["tau"] = cfg.tau;
  j["theta_lo"] = cfg.theta.min();
  j["theta_hi"] = cfg.theta.max();
  if (cfg.lambda_max) {
    j["lambda_max"] = *cfg.lambda_max;
  } else {
    j["lambda_max"] = nullptr;
  }
  j["index_policy"] = to_string(cfg.index_policy);
  j["rng_seed"] = cfg.rng_seed;
  j["max_cycles"] = cfg.max_cycles;
  if (cfg.residual_floor) {
    j["residual_floor"] = *cfg.residual_floor;
  } else {
    j["residual_floor"] = nullptr;
  }
  return j;
}

}  // namespace

namespace {

ExperimentResult run_experiment_on(const ExperimentSpec& spec,
                                   const BuiltinProblem& built) {
  // configuration problems abort the whole experiment up front; the per-run
  // error capture below is for runtime solve failures only
  (void)validate_config(spec.config, *built.system);
  const bool write_files = !spec.out_dir.empty();

  ExperimentResult result;
  nlohmann::json meta;
  meta["version"] = version_string();
  meta["seed"] = spec.seed;
  meta["problem"] = built.description;
  meta["config"] = config_json(spec.config);
  meta["runs"] = nlohmann::json::array();

  for (std::size_t level = 0; level < spec.noise_percents.size(); ++level) {
    const double percent = spec.noise_percents[level];
    // keyed by level only: every method sees the same observations
    const NoisyObservations obs =
        add_noise(built.exact_data, percent,
                  substream_seed(spec.seed, {kNoiseStream, level}));

    for (std::size_t m = 0; m < spec.methods.size(); ++m) {
      RunOutcome outcome;
      outcome.method = spec.methods[m];
      outcome.noise_percent = percent;

      SolverConfig cfg = spec.config;
      cfg.rng_seed = substream_seed(spec.seed, {kRunStream, m, level});

      nlohmann::json run_meta;
      run_meta["method"] = to_string(outcome.method.tag);
      run_meta["noise_percent"] = percent;
      run_meta["rng_seed"] = cfg.rng_seed;
      run_meta["lwk_mu_is_default"] = !outcome.method.lwk_mu.has_value();
      run_meta["lwkls_cap_is_default"] =
          !outcome.method.lwkls_step_cap.has_value();
      run_meta["lwk_mu"] =
          outcome.method.resolved_lwk_mu(built.system->derivative_bound());
      run_meta["lwkls_step_cap"] =
          outcome.method.resolved_lwkls_cap(built.system->derivative_bound());

      const auto t0 = std::chrono::steady_clock::now();
      try {
        outcome.record = run(outcome.method, *built.system, obs, cfg,
                             &built.reference);
      } catch (const Error& e) {
        outcome.error = e.what();
      }
      outcome.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();

      if (outcome.record && write_files) {
        outcome.csv_path =
            spec.out_dir / (std::string(to_string(outcome.method.tag)) +
                            "_noise" + noise_label(percent) + ".csv");
        write_run_csv(outcome.csv_path, *outcome.record);
        run_meta["csv"] = outcome.csv_path.filename().string();
      }
      if (outcome.record) {
        run_meta["stop_index"] = outcome.record->stop_index;
        run_meta["stop_reason"] = to_string(outcome.record->stop_reason);
      } else {
        run_meta["error"] = outcome.error;
      }
      run_meta["wall_seconds"] = outcome.wall_seconds;
      meta["runs"].push_back(run_meta);
      result.runs.push_back(std::move(outcome));
    }
  }

  if (write_files) {
    result.metadata_path = spec.out_dir / "metadata.json";
    std::ofstream out(result.metadata_path, std::ios::binary);
    out << meta.dump(2) << "\n";
  }
  return result;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  validate_spec(spec);
  return run_experiment_on(spec, make_problem(spec.problem));
}

std::string comparison_table_csv(const std::vector<RunOutcome>& runs,
                                 double noise_percent) {
  std::vector<const RunOutcome*> selected;
  std::size_t max_rows = 0;
  for (const RunOutcome& r : runs) {
    if (r.noise_percent == noise_percent && r.record) {
      selected.push_back(&r);
      max_rows = std::max(max_rows, r.record->cycles.size());
    }
  }

  std::ostringstream out;
  out << "cycle";
  for (const RunOutcome* r : selected) {
    const char* name = to_string(r->method.tag);
    out << ',' << name << "_error_ref" << ',' << name << "_residual_sum";
  }
  out << '\n';
  for (std::size_t row = 0; row < max_rows; ++row) {
    out << row;
    for (const RunOutcome* r : selected) {
      if (row < r->record->cycles.size()) {
        const CycleRow& c = r->record->cycles[row];
        out << ',' << format_double(c.error_ref) << ','
            << format_double(c.residual_sum);
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
  return out.str();
}

ExperimentResult compare_methods(const ExperimentSpec& spec) {
  ExperimentResult result = run_experiment(spec);
  if (!spec.out_dir.empty()) {
    for (double percent : spec.noise_percents) {
      const std::filesystem::path path =
          spec.out_dir / ("compare_noise" + noise_label(percent) + ".csv");
      std::ofstream out(path, std::ios::binary);
      out << comparison_table_csv(result.runs, percent);
    }
  }
  return result;
}

std::vector<SweepRow> sweep_noise(const ExperimentSpec& spec) {
  validate_spec(spec);
  if (spec.noise_percents.size() < 3) {
    raise(ErrorCode::invalid_config, "a noise sweep needs >= 3 levels");
  }
  const BuiltinProblem built = make_problem(spec.problem);
  ExperimentSpec one_method = spec;
  one_method.methods = {spec.methods.front()};
  one_method.out_dir.clear();
  const ExperimentResult result = run_experiment_on(one_method, built);

  std::vector<SweepRow> rows;
  for (std::size_t level = 0; level < spec.noise_percents.size(); ++level) {
    const RunOutcome& outcome = result.runs[level];
    if (!outcome.record) {
      raise(ErrorCode::solve_failed,
            "sweep run failed at " + std::to_string(outcome.noise_percent) +
                "%: " + outcome.error);
    }
    const RunRecord& rec = *outcome.record;
    SweepRow row;
    row.noise_percent = outcome.noise_percent;
    const NoisyObservations obs =
        add_noise(built.exact_data, outcome.noise_percent,
                  substream_seed(spec.seed, {kNoiseStream, level}));
    row.delta_min = obs.noise_levels.empty()
                        ? 0.0
                        : *std::min_element(obs.noise_levels.begin(),
                                            obs.noise_levels.end());
    row.stop_index = rec.stop_index;
    row.stop_reason = rec.stop_reason;
    row.error_at_stop = (rec.final_iterate - built.reference).norm();
    std::int64_t skips = 0;
    for (const StepRecord& s : rec.steps) {
      if (s.omega == 0) ++skips;
    }
    row.skipped_fraction =
        rec.steps.empty()
            ? 0.0
            : static_cast<double>(skips) / static_cast<double>(rec.steps.size());
    rows.push_back(row);
  }

  if (!spec.out_dir.empty()) {
    std::ofstream out(spec.out_dir / "sweep.csv", std::ios::binary);
    out << sweep_csv_string(rows);
  }
  return rows;
}

std::string sweep_csv_string(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "noise_percent,delta_min,stop_index,stop_reason,error_at_stop,"
         "skipped_fraction\n";
  for (const SweepRow& row : rows) {
    out << format_double(row.noise_percent) << ','
        << format_double(row.delta_min) << ',' << row.stop_index << ','
        << to_string(row.stop_reason) << ',' << format_double(row.error_at_stop)
        << ',' << format_double(row.skipped_fraction) << '\n';
  }
  return out.str();
}

}  // namespace plwk::harness
