// Experiment CLI for the projective Landweber-Kaczmarz solver library.
//
// Subcommands: run, compare, sweep, check, list-problems. Every flag can
// also be given in a `key = value` config file (--config); flags override
// file values. Exit codes: 0 success, 1 validation error, 2 runtime solve
// failure, 3 self-check failure.

#include "plwk/diagnostics.hpp"
#include "plwk/errors.hpp"
#include "plwk/harness/config_file.hpp"
#include "plwk/harness/csv.hpp"
#include "plwk/harness/experiment.hpp"
#include "plwk/harness/noise.hpp"
#include "plwk/problems/tcc.hpp"
#include "plwk/rng.hpp"
#include "plwk/solver.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

using namespace plwk;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::solve_failed:
    case ErrorCode::new_iterate_left_ball:
    case ErrorCode::outside_domain_ball:
    case ErrorCode::gamma_out_of_bounds:
    case ErrorCode::degenerate_direction:
    case ErrorCode::no_valid_pairs:
      return 2;
    default:
      return 1;
  }
}

struct CliOptions {
  std::string problem = "elliptic";
  std::vector<std::string> methods = {"PLWK"};
  std::vector<double> noise_percents = {2.0};
  double tau = 3.0;
  double eta = 0.45;
  double theta = 1.0;
  double lambda_max = 0.0;  // 0 = untruncated
  std::uint64_t seed = 1;
  long long max_cycles = 500;
  std::string out_dir = "plwk_out";
  std::string param_norm = "h1";
  // problem sizing
  int grid_n = 31;
  int n_experiments = 12;
  int n_blocks = 6;
  int n_unknowns = 40;
  double coherence = 0.7;
  std::uint64_t problem_seed = 4242;

  void apply_config(const harness::KeyValues& kv);
  harness::ExperimentSpec to_spec() const;
};

void CliOptions::apply_config(const harness::KeyValues& kv) {
  auto get = [&kv](const char* key) -> const std::string* {
    const auto it = kv.find(key);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto as_double = [](const std::string& s, const char* key) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      raise(ErrorCode::invalid_config, std::string("bad value for ") + key);
    }
  };
  if (const auto* v = get("problem")) problem = *v;
  if (const auto* v = get("method")) {
    methods.clear();
    std::string rest = *v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      methods.push_back(rest.substr(0, comma));
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    }
  }
  if (const auto* v = get("noise_percent")) {
    noise_percents.clear();
    std::string rest = *v;
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      noise_percents.push_back(
          as_double(rest.substr(0, comma), "noise_percent"));
      rest = comma == std::string::npos ? "" : rest.substr(comma + 1);
    }
  }
  if (const auto* v = get("tau")) tau = as_double(*v, "tau");
  if (const auto* v = get("eta")) eta = as_double(*v, "eta");
  if (const auto* v = get("theta")) theta = as_double(*v, "theta");
  if (const auto* v = get("lambda_max")) {
    lambda_max = (*v == "none") ? 0.0 : as_double(*v, "lambda_max");
  }
  if (const auto* v = get("seed")) seed = std::stoull(*v);
  if (const auto* v = get("max_cycles")) {
    max_cycles = static_cast<long long>(as_double(*v, "max_cycles"));
  }
  if (const auto* v = get("out_dir")) out_dir = *v;
  if (const auto* v = get("param_norm")) param_norm = *v;
  if (const auto* v = get("grid_n")) {
    grid_n = static_cast<int>(as_double(*v, "grid_n"));
  }
  if (const auto* v = get("n_experiments")) {
    n_experiments = static_cast<int>(as_double(*v, "n_experiments"));
  }
  if (const auto* v = get("n_blocks")) {
    n_blocks = static_cast<int>(as_double(*v, "n_blocks"));
  }
  if (const auto* v = get("n_unknowns")) {
    n_unknowns = static_cast<int>(as_double(*v, "n_unknowns"));
  }
  if (const auto* v = get("coherence")) coherence = as_double(*v, "coherence");
  if (const auto* v = get("problem_seed")) problem_seed = std::stoull(*v);
}

harness::ExperimentSpec CliOptions::to_spec() const {
  harness::ExperimentSpec spec;
  spec.problem.name = problem;
  spec.problem.elliptic.grid_n = grid_n;
  spec.problem.elliptic.n_experiments = n_experiments;
  const auto norm = problems::parse_param_norm(param_norm);
  if (!norm) {
    raise(ErrorCode::invalid_config, "param_norm must be l2 or h1");
  }
  spec.problem.elliptic.param_norm = *norm;
  spec.problem.linear.n_blocks = n_blocks;
  spec.problem.linear.n_unknowns = n_unknowns;
  spec.problem.linear.coherence = coherence;
  spec.problem.linear.seed = problem_seed;

  for (const std::string& name : methods) {
    const auto tag = parse_method(name);
    if (!tag) {
      raise(ErrorCode::invalid_config,
            "unknown method '" + name + "' (PLWK, PLWKr, LWK, LWKls)");
    }
    spec.methods.push_back(Method::make(*tag));
  }
  spec.noise_percents = noise_percents;
  spec.config.tau = tau;
  spec.config.eta = eta;
  spec.config.theta = ThetaSchedule::constant(theta);
  if (lambda_max > 0.0) spec.config.lambda_max = lambda_max;
  spec.config.max_cycles = max_cycles;
  spec.out_dir = out_dir;
  spec.seed = seed;
  return spec;
}

void add_common_options(CLI::App* cmd, CliOptions& opts, std::string& config_path) {
  cmd->add_option("--config", config_path,
                  "key = value config file; flags override file values");
  cmd->add_option("--problem", opts.problem, "linear_block | elliptic");
  cmd->add_option("--method", opts.methods,
                  "PLWK | PLWKr | LWK | LWKls (repeatable)");
  cmd->add_option("--noise-percent", opts.noise_percents,
                  "relative noise level(s) in percent (repeatable)");
  cmd->add_option("--tau", opts.tau, "discrepancy threshold");
  cmd->add_option("--eta", opts.eta, "tangential cone constant");
  cmd->add_option("--theta", opts.theta, "relaxation parameter in (0,2)");
  cmd->add_option("--lambda-max", opts.lambda_max,
                  "step-size truncation (0 = untruncated)");
  cmd->add_option("--seed", opts.seed, "root seed for all randomness");
  cmd->add_option("--max-cycles", opts.max_cycles, "cycle budget");
  cmd->add_option("--out-dir", opts.out_dir, "output directory");
  cmd->add_option("--param-norm", opts.param_norm,
                  "elliptic parameter norm: l2 | h1");
  cmd->add_option("--grid-n", opts.grid_n, "elliptic interior grid size");
  cmd->add_option("--experiments", opts.n_experiments,
                  "elliptic experiment count N");
  cmd->add_option("--blocks", opts.n_blocks, "linear block count");
  cmd->add_option("--unknowns", opts.n_unknowns, "linear unknown count");
  cmd->add_option("--coherence", opts.coherence,
                  "linear row coherence in [0,1)");
  cmd->add_option("--problem-seed", opts.problem_seed,
                  "seed of the random linear problem");
}

void print_run_summary(const harness::RunOutcome& outcome) {
  if (!outcome.record) {
    std::printf("%-6s noise %4.3g%%: FAILED (%s)\n",
                to_string(outcome.method.tag), outcome.noise_percent,
                outcome.error.c_str());
    return;
  }
  const RunRecord& rec = *outcome.record;
  const CycleRow& last = rec.cycles.back();
  std::printf("%-6s noise %4.3g%%: stop=%-14s k*=%-7lld cycles=%-5zu "
              "residual_sum=%-11.5g error_ref=%-11.5g pde_solves=%lld\n",
              to_string(outcome.method.tag), outcome.noise_percent,
              to_string(rec.stop_reason),
              static_cast<long long>(rec.stop_index), rec.cycles.size() - 1,
              last.residual_sum, last.error_ref,
              static_cast<long long>(last.cum_pde_solves));
}

int do_check(const CliOptions& opts) {
  int failures = 0;
  auto report = [&failures](const char* name, bool ok, const std::string& detail) {
    std::printf("[%s] %s -- %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    if (!ok) ++failures;
  };

  std::vector<std::string> names = opts.problem == "all"
                                       ? harness::builtin_problem_names()
                                       : std::vector<std::string>{opts.problem};
  for (const std::string& name : names) {
    CliOptions po = opts;
    po.problem = name;
    const harness::BuiltinProblem built =
        harness::make_problem(po.to_spec().problem);
    const OperatorSystem& sys = *built.system;
    std::printf("problem %s:\n", name.c_str());

    // adjoint identity at 20 random triples
    {
      Rng rng(substream_seed(opts.seed, {0xad01}));
      double worst = 0;
      int checked = 0;
      for (int trial = 0; trial < 200 && checked < 20; ++trial) {
        ParameterVector dir(sys.parameter_dim());
        for (Index j = 0; j < dir.size(); ++j) dir[j] = rng.gaussian();
        const ParameterVector x =
            sys.domain_center() +
            (0.4 * sys.domain_radius() * rng.uniform01() / dir.norm()) * dir;
        const int i = static_cast<int>(
            rng.next_u64() % static_cast<std::uint64_t>(sys.n_equations()));
        ParameterVector h(sys.parameter_dim());
        for (Index j = 0; j < h.size(); ++j) h[j] = rng.gaussian();
        DataVector r(sys.data_dim(i));
        for (Index j = 0; j < r.size(); ++j) r[j] = rng.gaussian();
        try {
          const double lhs = inner(sys.deriv_apply(i, x, h), r);
          const double rhs = inner(h, sys.deriv_adjoint_apply(i, x, r));
          worst = std::max(worst,
                           std::abs(lhs - rhs) /
                               std::max({std::abs(lhs), std::abs(rhs), 1.0}));
          ++checked;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::gamma_out_of_bounds) throw;
        }
      }
      report("adjoint identity (20 triples, rel 1e-10)",
             checked == 20 && worst <= 1e-10,
             "worst relative error " + harness::format_double(worst));
    }

    // derivative vs finite differences
    {
      Rng rng(substream_seed(opts.seed, {0xfd02}));
      ParameterVector h(sys.parameter_dim());
      for (Index j = 0; j < h.size(); ++j) h[j] = rng.gaussian();
      h *= 0.05 * sys.domain_radius() / h.norm();
      const ParameterVector x = sys.domain_center();
      const DataVector fx = sys.forward(0, x);
      const DataVector dfh = sys.deriv_apply(0, x, h);
      double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
      bool linear_exact = false;
      for (double eps : {1e-2, 1e-3, 1e-4, 1e-5}) {
        const double err = ((sys.forward(0, x + eps * h) - fx) / eps - dfh).norm();
        if (err <= 1e-12 * (1.0 + dfh.norm())) {
          linear_exact = true;  // exactly linear operator: nothing to fit
          break;
        }
        sx += std::log(eps);
        sy += std::log(err);
        sxx += std::log(eps) * std::log(eps);
        sxy += std::log(eps) * std::log(err);
        n += 1;
      }
      if (linear_exact) {
        report("finite-difference check", true, "derivative exact (linear)");
      } else {
        const double order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        report("finite-difference order >= 0.9", order >= 0.9,
               "observed order " + harness::format_double(order));
      }
    }

    // empirical tangential cone constant
    {
      const auto est = problems::estimate_tcc_eta(sys, 20, 0.5, opts.seed);
      const bool ok = name == "linear_block" ? est.eta_hat <= 1e-12
                                             : est.eta_hat <= 0.45;
      report(name == "linear_block" ? "tcc estimate == 0"
                                    : "tcc estimate <= 0.45",
             ok, "eta_hat = " + harness::format_double(est.eta_hat));
    }

    // configuration invariants
    {
      bool ok = true;
      std::string note = "eta/tau/theta/lambda_max invariants enforced";
      try {
        SolverConfig cfg;
        cfg.eta = opts.eta;
        cfg.tau = opts.tau;
        cfg.theta = ThetaSchedule::constant(opts.theta);
        validate_config(cfg, sys);
      } catch (const Error& e) {
        ok = false;
        note = e.what();
      }
      try {
        SolverConfig bad;
        bad.eta = 0.45;
        bad.tau = 2.5;
        validate_config(bad, sys);
        ok = false;
        note = "tau = 2.5 with eta = 0.45 was not rejected";
      } catch (const Error&) {
      }
      report("config validation", ok, note);
    }
  }
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"projective Landweber-Kaczmarz solver experiments"};
  app.require_subcommand(1);

  CliOptions opts;
  std::string config_path;

  // The config file provides defaults; flags given on the command line
  // override them. Pre-scan for --config so the file is applied before the
  // real parse writes flag values.
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) {
      config_path = argv[i + 1];
    } else if (arg.rfind("--config=", 0) == 0) {
      config_path = arg.substr(9);
    }
  }
  if (!config_path.empty()) {
    try {
      opts.apply_config(harness::load_config_file(config_path));
    } catch (const Error& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return exit_code_for(e.code());
    }
  }

  CLI::App* cmd_run = app.add_subcommand("run", "single method / noise level");
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "method set, aligned per-cycle tables");
  CLI::App* cmd_sweep =
      app.add_subcommand("sweep", "noise ladder for one method");
  CLI::App* cmd_check =
      app.add_subcommand("check", "adjoint/derivative/TCC/config self-tests");
  CLI::App* cmd_list = app.add_subcommand("list-problems", "built-in problems");

  for (CLI::App* cmd : {cmd_run, cmd_compare, cmd_sweep, cmd_check}) {
    add_common_options(cmd, opts, config_path);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_list->parsed()) {
      for (const std::string& name : harness::builtin_problem_names()) {
        CliOptions po = opts;
        po.problem = name;
        const auto built = harness::make_problem(po.to_spec().problem);
        std::printf("%s\n", built.description.c_str());
      }
      return 0;
    }

    if (cmd_check->parsed()) {
      if (opts.problem == "elliptic" || opts.problem == "linear_block" ||
          opts.problem == "all") {
        return do_check(opts);
      }
      raise(ErrorCode::invalid_config, "unknown problem '" + opts.problem + "'");
    }

    if (cmd_run->parsed()) {
      harness::ExperimentSpec spec = opts.to_spec();
      if (spec.methods.size() != 1 || spec.noise_percents.size() != 1) {
        raise(ErrorCode::invalid_config,
              "run takes exactly one method and one noise level; "
              "see compare/sweep");
      }
      const auto result = harness::run_experiment(spec);
      print_run_summary(result.runs.front());
      if (!result.runs.front().record) return 2;
      std::printf("wrote %s and %s\n",
                  result.runs.front().csv_path.string().c_str(),
                  result.metadata_path.string().c_str());
      return 0;
    }

    if (cmd_compare->parsed()) {
      const auto result = harness::compare_methods(opts.to_spec());
      bool any_failed = false;
      for (const auto& outcome : result.runs) {
        print_run_summary(outcome);
        any_failed = any_failed || !outcome.record;
      }
      std::printf("comparison tables in %s\n", opts.out_dir.c_str());
      return any_failed ? 2 : 0;
    }

    if (cmd_sweep->parsed()) {
      const auto rows = harness::sweep_noise(opts.to_spec());
      std::printf("%s", harness::sweep_csv_string(rows).c_str());
      if (!opts.out_dir.empty()) {
        std::printf("sweep table in %s/sweep.csv\n", opts.out_dir.c_str());
      }
      return 0;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
