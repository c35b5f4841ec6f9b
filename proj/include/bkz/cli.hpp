#pragma once

// Command-line front end: gen | run | compare | rate.
//
// Every flag can also be supplied through a JSON config file (--config),
// whose keys mirror the long flag names (without dashes, dashes become
// underscores). Flags given on the command line take precedence over config
// values. Exit codes: 0 all requested runs converged (or the command has no
// run semantics), 2 at least one run stopped at the iteration cap, 1 usage,
// configuration, or I/O errors.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bkz/bench.hpp"
#include "bkz/diagnostics.hpp"

namespace bkz::cli {

namespace detail {

// Values read from --config; they seed the CLI11 defaults so that explicit
// flags win.
struct ConfigValues {
  nlohmann::json doc = nlohmann::json::object();

  static ConfigValues load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
      throw std::runtime_error("config: cannot open " + path);
    }
    ConfigValues cfg;
    try {
      in >> cfg.doc;
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(std::string("config: parse error: ") + e.what());
    }
    if (!cfg.doc.is_object()) {
      throw std::runtime_error("config: top level must be an object");
    }
    static const std::vector<std::string> known = {
        "preset",  "problem",   "method", "seed",    "trials",
        "tol",     "max_iters", "sigma",  "out",     "experiment",
        "n",       "d",         "s",      "lambda",  "dist",
        "r",       "m",         "variant", "eta",    "radius",
        "samples", "smoothness", "trace_every", "sampler"};
    for (const auto& [key, value] : cfg.doc.items()) {
      if (std::find(known.begin(), known.end(), key) == known.end()) {
        throw std::runtime_error("config: unknown key '" + key + "'");
      }
    }
    return cfg;
  }

  template <typename T>
  void apply(const char* key, T& target) const {
    if (doc.contains(key)) {
      try {
        target = doc.at(key).get<T>();
      } catch (const nlohmann::json::exception&) {
        throw std::runtime_error(std::string("config: bad value for '") + key +
                                 "'");
      }
    }
  }
};

// Pre-scan for --config so its values become defaults before real parsing.
inline std::optional<std::string> find_config_arg(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
    if (arg.rfind("--config=", 0) == 0) return std::string(arg.substr(9));
  }
  return std::nullopt;
}

inline Method parse_method(const std::string& name) {
  const auto m = method_from_name(name);
  if (!m.has_value()) {
    throw CLI::ValidationError("--method",
                               "unknown method '" + name +
                                   "' (expected NBK, rNBK, GRNBK, or rGRNBK)");
  }
  return *m;
}

inline EntryDist parse_dist(const std::string& name) {
  for (const EntryDist d :
       {EntryDist::StdNormal, EntryDist::Unif01, EntryDist::Unif09_1}) {
    if (name == entry_dist_name(d)) return d;
  }
  throw CLI::ValidationError(
      "--dist", "unknown distribution '" + name +
                    "' (expected std_normal, unif01, or unif09_1)");
}

// Default initial dual point and tolerance semantics for a bare problem
// file, matching the preset conventions for the same family.
inline ExperimentId experiment_of(const Problem& p) {
  switch (p.kind()) {
    case ProblemKind::QuadraticSystem:
      return ExperimentId::Exp1SparseQuadratic;
    case ProblemKind::LinearSimplexSystem:
      return ExperimentId::Exp2LinearSimplex;
    case ProblemKind::LSDProblem:
      return ExperimentId::Exp3LSD;
  }
  throw ContractViolation("experiment_of: unknown problem kind");
}

struct RunArgs {
  std::string preset;
  std::string problem;
  std::string method = "GRNBK";
  std::string sampler;  // optional override: uniform | greedy | max_residual
  std::uint64_t seed = 0;
  double tol = -1.0;       // <0: use preset/family default
  long max_iters = -1;     // <0: use preset/family default
  double sigma = 1.0;
  double lambda = 1.0;
  long trace_every = 1;
  std::string out;
};

inline int do_run(const RunArgs& args) {
  if (args.preset.empty() == args.problem.empty()) {
    std::cerr << "run: exactly one of --preset or --problem is required\n";
    return 1;
  }
  const Method method = parse_method(args.method);

  Problem problem = [&] {
    if (!args.preset.empty()) {
      const ExperimentPreset* preset = find_preset(args.preset);
      if (preset == nullptr) {
        throw std::runtime_error("run: unknown preset '" + args.preset + "'");
      }
      return instantiate(*preset,
                         preset->base_seed + args.seed);
    }
    return load_problem(args.problem);
  }();

  const ExperimentPreset* preset =
      args.preset.empty() ? nullptr : find_preset(args.preset);
  const ExperimentId family =
      preset != nullptr ? preset->experiment : experiment_of(problem);

  const double lambda = preset != nullptr ? preset->lambda : args.lambda;
  const DistanceGenerator gen = geometry_for_problem(problem, lambda);

  const std::uint64_t seed =
      preset != nullptr ? preset->base_seed + args.seed : args.seed;
  const Eigen::VectorXd x0_star =
      initial_dual_point(family, problem.dim(), seed);

  // Family defaults; --tol/--max-iters override. Linear-simplex tolerances
  // are relative to the initial residual, the others absolute.
  double tol = args.tol;
  bool tol_relative = family == ExperimentId::Exp2LinearSimplex;
  if (tol < 0.0) {
    if (preset != nullptr) {
      tol = preset->tol;
      tol_relative = preset->tol_is_relative;
    } else {
      switch (family) {
        case ExperimentId::Exp1SparseQuadratic: tol = 1e-12; break;
        case ExperimentId::Exp2LinearSimplex: tol = 1e-9; break;
        case ExperimentId::Exp3LSD: tol = 1e-5; break;
      }
    }
  }

  SolverConfig cfg = SolverConfig::for_method(method);
  if (!args.sampler.empty()) {
    if (args.sampler == "uniform") {
      cfg.sampler = SamplerKind::Uniform;
    } else if (args.sampler == "greedy") {
      cfg.sampler = SamplerKind::GreedyResidualWeighted;
    } else if (args.sampler == "max_residual") {
      cfg.sampler = SamplerKind::MaxResidual;
    } else {
      throw CLI::ValidationError(
          "--sampler", "unknown sampler '" + args.sampler +
                           "' (expected uniform, greedy, or max_residual)");
    }
  }
  cfg.seed = seed;
  cfg.sigma = args.sigma;
  cfg.trace_every = args.trace_every;
  cfg.max_iters = args.max_iters > 0
                      ? args.max_iters
                      : (preset != nullptr ? preset->max_iters : [&] {
                          switch (family) {
                            case ExperimentId::Exp1SparseQuadratic: return 1000L;
                            case ExperimentId::Exp2LinearSimplex: return 10000L;
                            case ExperimentId::Exp3LSD: return 300000L;
                          }
                          return 10000L;
                        }());
  cfg.residual_tol =
      tol_relative ? tol * problem.residual(gen.mirror(x0_star)).norm() : tol;

  const auto result = solve(problem, gen, x0_star, cfg);
  if (!args.out.empty()) {
    write_run_csv(args.out, static_cast<long>(args.seed), method_name(method),
                  result.record);
  }
  std::cout << "status=" << status_name(result.record.status)
            << " iterations=" << result.record.total_iterations
            << " final_residual=" << result.record.rows.back().residual_norm
            << '\n';
  return result.record.status == SolveStatus::Converged ? 0 : 2;
}

struct GenArgs {
  std::string preset;
  std::string experiment;
  long n = 0, d = 0, s = 0;
  double lambda = 1.0;
  std::string dist = "std_normal";
  long r = 0, m = 0;
  std::uint64_t seed = 0;
  std::string out;
};

inline int do_gen(const GenArgs& args) {
  if (args.out.empty()) {
    std::cerr << "gen: --out is required\n";
    return 1;
  }
  if (args.preset.empty() == args.experiment.empty()) {
    std::cerr << "gen: exactly one of --preset or --experiment is required\n";
    return 1;
  }

  Problem problem = [&]() -> Problem {
    if (!args.preset.empty()) {
      const ExperimentPreset* preset = find_preset(args.preset);
      if (preset == nullptr) {
        throw std::runtime_error("gen: unknown preset '" + args.preset + "'");
      }
      return instantiate(*preset, args.seed);
    }
    if (args.experiment == "exp1") {
      return gen_quadratic(args.n, args.d, args.s, args.seed);
    }
    if (args.experiment == "exp2") {
      return gen_linear_simplex(args.n, args.d, parse_dist(args.dist),
                                args.seed);
    }
    if (args.experiment == "exp3") {
      return gen_lsd(args.r, args.m, args.seed);
    }
    throw std::runtime_error("gen: unknown experiment '" + args.experiment +
                             "' (expected exp1, exp2, or exp3)");
  }();

  std::optional<GeneratorInfo> info;
  if (!args.preset.empty()) {
    info = generator_info(*find_preset(args.preset), args.seed);
  } else {
    GeneratorInfo gi;
    gi.seed = args.seed;
    if (args.experiment == "exp1") {
      gi.name = "quadratic";
      gi.params = {{"n", args.n}, {"d", args.d}, {"s", args.s}};
    } else if (args.experiment == "exp2") {
      gi.name = "linear_simplex";
      gi.params = {{"n", args.n}, {"d", args.d}, {"dist", args.dist}};
    } else {
      gi.name = "lsd";
      gi.params = {{"r", args.r}, {"m", args.m}};
    }
    info = std::move(gi);
  }

  save_problem(args.out, problem, info);
  std::cout << "wrote " << args.out << '\n';
  return 0;
}

struct CompareArgs {
  std::string preset;
  long trials = -1;
  std::vector<std::string> methods;
  long trace_every = 1;
  std::string out;
};

inline int do_compare(const CompareArgs& args) {
  if (args.preset.empty() || args.out.empty()) {
    std::cerr << "compare: --preset and --out are required\n";
    return 1;
  }
  const ExperimentPreset* found = find_preset(args.preset);
  if (found == nullptr) {
    throw std::runtime_error("compare: unknown preset '" + args.preset + "'");
  }
  ExperimentPreset preset = *found;
  if (args.trials > 0) preset.trials = args.trials;
  if (!args.methods.empty()) {
    preset.methods.clear();
    for (const auto& name : args.methods) {
      preset.methods.push_back(parse_method(name));
    }
  }
  const auto outcome = cmd_compare(preset, args.out, args.trace_every);
  std::cout << outcome.summary.dump(2) << '\n';
  return outcome.any_unconverged ? 2 : 0;
}

struct RateArgs {
  std::string problem;
  std::string variant = "exact";
  double eta = -1.0;  // <0: estimate from samples
  double radius = 1.0;
  long samples = 50;
  std::uint64_t seed = 0;
  double sigma = 1.0;
  double smoothness = 1.0;
  std::string out;
};

inline int do_rate(const RateArgs& args) {
  if (args.problem.empty()) {
    std::cerr << "rate: --problem is required\n";
    return 1;
  }
  const Problem problem = load_problem(args.problem);
  if (!problem.known_solution().has_value()) {
    std::cerr << "rate: the problem file carries no known solution\n";
    return 1;
  }
  const Eigen::VectorXd& center = *problem.known_solution();

  RateVariant variant;
  if (args.variant == "exact") {
    variant = RateVariant::Exact;
  } else if (args.variant == "relaxed") {
    variant = RateVariant::Relaxed;
  } else {
    throw CLI::ValidationError("--variant", "expected 'exact' or 'relaxed'");
  }

  const double kappa =
      kappa_estimate(problem, center, args.radius, args.samples, args.seed);
  const double eta =
      args.eta >= 0.0
          ? args.eta
          : tcc_estimate(problem, center, args.radius, args.samples, args.seed);

  nlohmann::json report = {
      {"problem", args.problem},
      {"variant", args.variant},
      {"n", problem.num_equations()},
      {"d", problem.dim()},
      {"sigma", args.sigma},
      {"smoothness", args.smoothness},
      {"eta", eta},
      {"eta_estimated", args.eta < 0.0},
      {"kappa", kappa},
      {"radius", args.radius},
      {"samples", args.samples},
      {"seed", args.seed},
  };
  try {
    report["rho"] = rate_bound(
        {args.sigma, args.smoothness, eta, problem.num_equations(), kappa,
         variant});
    report["degenerate"] = false;
  } catch (const DegenerateRateError& e) {
    report["rho"] = nullptr;
    report["degenerate"] = true;
    report["degenerate_reason"] = e.what();
  }

  const std::string text = report.dump(2);
  if (!args.out.empty()) {
    std::ofstream out(args.out, std::ios::binary);
    if (!out) {
      throw std::runtime_error("rate: cannot write " + args.out);
    }
    out << text << '\n';
  }
  std::cout << text << '\n';
  return 0;
}

}  // namespace detail

inline int run_main(int argc, char** argv) {
  CLI::App app{
      "Greedy and uniform Bregman-Kaczmarz solvers for constrained "
      "nonlinear systems"};
  app.require_subcommand(1);

  detail::ConfigValues config;
  std::string config_path;
  try {
    if (const auto found = detail::find_config_arg(argc, argv)) {
      config = detail::ConfigValues::load(*found);
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  detail::GenArgs gen_args;
  detail::RunArgs run_args;
  detail::CompareArgs compare_args;
  detail::RateArgs rate_args;

  config.apply("preset", gen_args.preset);
  config.apply("experiment", gen_args.experiment);
  config.apply("n", gen_args.n);
  config.apply("d", gen_args.d);
  config.apply("s", gen_args.s);
  config.apply("lambda", gen_args.lambda);
  config.apply("dist", gen_args.dist);
  config.apply("r", gen_args.r);
  config.apply("m", gen_args.m);
  config.apply("seed", gen_args.seed);
  config.apply("out", gen_args.out);

  config.apply("preset", run_args.preset);
  config.apply("problem", run_args.problem);
  config.apply("method", run_args.method);
  config.apply("sampler", run_args.sampler);
  config.apply("seed", run_args.seed);
  config.apply("tol", run_args.tol);
  config.apply("max_iters", run_args.max_iters);
  config.apply("sigma", run_args.sigma);
  config.apply("lambda", run_args.lambda);
  config.apply("trace_every", run_args.trace_every);
  config.apply("out", run_args.out);

  config.apply("preset", compare_args.preset);
  config.apply("trials", compare_args.trials);
  config.apply("trace_every", compare_args.trace_every);
  config.apply("out", compare_args.out);

  config.apply("problem", rate_args.problem);
  config.apply("variant", rate_args.variant);
  config.apply("eta", rate_args.eta);
  config.apply("radius", rate_args.radius);
  config.apply("samples", rate_args.samples);
  config.apply("seed", rate_args.seed);
  config.apply("sigma", rate_args.sigma);
  config.apply("smoothness", rate_args.smoothness);
  config.apply("out", rate_args.out);

  auto* gen = app.add_subcommand("gen", "Generate a problem instance file");
  gen->add_option("--config", config_path, "JSON config file");
  gen->add_option("--preset", gen_args.preset, "Preset id (see README)");
  gen->add_option("--experiment", gen_args.experiment,
                  "Explicit family: exp1 | exp2 | exp3");
  gen->add_option("--n", gen_args.n, "Equations (exp1/exp2)");
  gen->add_option("--d", gen_args.d, "Unknowns (exp1/exp2)");
  gen->add_option("--s", gen_args.s, "Solution sparsity (exp1)");
  gen->add_option("--lambda", gen_args.lambda, "Soft-threshold weight (exp1)");
  gen->add_option("--dist", gen_args.dist,
                  "Entry distribution (exp2): std_normal | unif01 | unif09_1");
  gen->add_option("--r", gen_args.r, "Factor rows (exp3)");
  gen->add_option("--m", gen_args.m, "Factor columns (exp3)");
  gen->add_option("--seed", gen_args.seed, "Instance seed");
  gen->add_option("--out", gen_args.out, "Output problem JSON path");

  auto* run = app.add_subcommand("run", "Run one method on one instance");
  run->add_option("--config", config_path, "JSON config file");
  run->add_option("--preset", run_args.preset,
                  "Preset id; --seed selects the trial");
  run->add_option("--problem", run_args.problem, "Problem JSON file");
  run->add_option("--method", run_args.method,
                  "NBK | rNBK | GRNBK | rGRNBK");
  run->add_option("--sampler", run_args.sampler,
                  "Override the method's sampler: uniform | greedy | "
                  "max_residual");
  run->add_option("--seed", run_args.seed,
                  "Trial index (preset) or run seed (problem file)");
  run->add_option("--tol", run_args.tol,
                  "Stopping tolerance (relative for linear-simplex problems)");
  run->add_option("--max-iters", run_args.max_iters, "Iteration cap");
  run->add_option("--sigma", run_args.sigma, "Relaxed-step scale");
  run->add_option("--lambda", run_args.lambda,
                  "Soft-threshold weight for bare quadratic problem files");
  run->add_option("--trace-every", run_args.trace_every,
                  "Record every j-th iteration in the CSV");
  run->add_option("--out", run_args.out, "Output CSV path");

  auto* compare =
      app.add_subcommand("compare", "Run all methods over seeded trials");
  compare->add_option("--config", config_path, "JSON config file");
  compare->add_option("--preset", compare_args.preset, "Preset id");
  compare->add_option("--trials", compare_args.trials,
                      "Trial count (default: preset's)");
  compare->add_option("--method", compare_args.methods,
                      "Restrict to these methods (repeatable)");
  compare->add_option("--trace-every", compare_args.trace_every,
                      "Record every j-th iteration in the CSVs");
  compare->add_option("--out", compare_args.out, "Output directory");

  auto* rate = app.add_subcommand(
      "rate", "Estimate conditioning and evaluate the contraction bound");
  rate->add_option("--config", config_path, "JSON config file");
  rate->add_option("--problem", rate_args.problem, "Problem JSON file");
  rate->add_option("--variant", rate_args.variant, "exact | relaxed");
  rate->add_option("--eta", rate_args.eta,
                   "Tangent-cone overshoot (default: estimated)");
  rate->add_option("--radius", rate_args.radius, "Sampling ball radius");
  rate->add_option("--samples", rate_args.samples, "Sampling ball draws");
  rate->add_option("--seed", rate_args.seed, "Sampling seed");
  rate->add_option("--sigma", rate_args.sigma, "Strong-convexity constant");
  rate->add_option("--smoothness", rate_args.smoothness,
                   "Smoothness constant of the distance generator");
  rate->add_option("--out", rate_args.out, "Optional report JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (gen->parsed()) return detail::do_gen(gen_args);
    if (run->parsed()) return detail::do_run(run_args);
    if (compare->parsed()) return detail::do_compare(compare_args);
    if (rate->parsed()) return detail::do_rate(rate_args);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }
  std::cerr << "no subcommand given\n";
  return 1;
}

}  // namespace bkz::cli
