#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stba/bal_io.hpp"
#include "stba/bench.hpp"
#include "stba/camera_graph.hpp"
#include "stba/clustering.hpp"
#include "stba/errors.hpp"
#include "stba/lm_solver.hpp"
#include "stba/stba_solver.hpp"
#include "stba/trace.hpp"

namespace stba::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::size_t parse_gamma(const std::string& text) {
  if (text == "inf" || text == "infinity") return kUnbounded;
  long long value = 0;
  try {
    std::size_t used = 0;
    value = std::stoll(text, &used);
    if (used != text.size()) throw UsageError("");
  } catch (...) {
    throw UsageError("--gamma expects a positive integer or 'inf', got '" + text + "'");
  }
  if (value < 1) throw UsageError("--gamma must be at least 1");
  return static_cast<std::size_t>(value);
}

double parse_huber(const std::string& text) {
  if (text == "inf" || text == "infinity") return kInfinity;
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(text, &used);
    if (used != text.size()) throw UsageError("");
  } catch (...) {
    throw UsageError("--huber expects a positive number or 'inf', got '" + text + "'");
  }
  if (!(value > 0.0)) throw UsageError("--huber must be positive");
  return value;
}

struct SolveFlags {
  std::string problem;
  std::string solver = "stba";
  int max_iters = 100;
  double lambda0 = 1e-4;
  std::string huber = "0.5";
  std::string gamma = "100";
  double beta = 10.0;
  std::uint64_t seed = 0;
  int workers = 0;
  double tol = 1e-6;
  std::string out = "stba-out";
  std::string mode = "stochastic";
  bool timings = false;
  bool dump_clusters = false;
};

void add_run_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--solver", f.solver, "lm-dense | lm-pcg | stba | stba-fixed | nsgc")
      ->capture_default_str();
  cmd->add_option("--max-iters", f.max_iters, "Maximum LM iterations")
      ->capture_default_str();
  cmd->add_option("--lambda0", f.lambda0, "Initial damping")->capture_default_str();
  cmd->add_option("--huber", f.huber, "Huber scale in pixels, 'inf' disables")
      ->capture_default_str();
  cmd->add_option("--gamma", f.gamma, "Maximum cluster size, 'inf' = one cluster")
      ->capture_default_str();
  cmd->add_option("--beta", f.beta, "Merge sampling sharpness")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Clustering seed")->capture_default_str();
  cmd->add_option("--workers", f.workers, "Worker threads (0: $STBA_WORKERS, else 1)")
      ->capture_default_str();
  cmd->add_option("--tol", f.tol, "Cost, gradient and parameter tolerance")
      ->capture_default_str();
  cmd->add_option("--mode", f.mode, "Clustering mode for stba: stochastic | fixed")
      ->capture_default_str();
}

RunConfig run_config(const SolveFlags& f) {
  RunConfig run;
  run.solver = f.solver;
  if (!is_solver_name(run.solver)) throw UsageError("unknown solver '" + f.solver + "'");
  if (f.mode == "fixed" && run.solver == "stba") run.solver = "stba-fixed";
  else if (f.mode != "stochastic" && f.mode != "fixed") {
    throw UsageError("--mode must be 'stochastic' or 'fixed'");
  }
  if (f.max_iters < 0) throw UsageError("--max-iters must be non-negative");
  if (!(f.lambda0 > 0.0)) throw UsageError("--lambda0 must be positive");
  if (!(f.beta > 0.0)) throw UsageError("--beta must be positive");
  if (f.workers < 0) throw UsageError("--workers must be non-negative");
  if (!(f.tol >= 0.0)) throw UsageError("--tol must be non-negative");
  run.max_iterations = f.max_iters;
  run.lambda0 = f.lambda0;
  run.huber_delta = parse_huber(f.huber);
  run.gamma = parse_gamma(f.gamma);
  run.beta = f.beta;
  run.seed = f.seed;
  run.workers = f.workers;
  run.tolerance = f.tol;
  return run;
}

void write_clusters(const fs::path& dir, const std::vector<ClusterAssignment>& history) {
  fs::create_directories(dir);
  for (std::size_t k = 0; k < history.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "iter_%03zu.csv", k + 1);
    std::ofstream out(dir / name);
    out << "camera_index,cluster_id\n";
    for (int c = 0; c < history[k].num_cameras(); ++c) {
      out << c << ',' << history[k].cluster_of(c) << '\n';
    }
  }
}

int cmd_solve(const SolveFlags& f, std::ostream& out) {
  const RunConfig run = run_config(f);
  const BundleProblem problem = read_bal(fs::path(f.problem));

  SolveResult result;
  std::vector<ClusterAssignment> history;
  if (run.solver == "lm-dense" || run.solver == "lm-pcg") {
    result = lm_minimize(problem, solver_config(run));
  } else {
    const StbaConfig config = stba_config(run);
    StbaStepEngine engine(problem, config);
    engine.record_assignments(f.dump_clusters);
    result = minimize(problem, config.solver, engine);
    history = engine.history();
  }

  const fs::path dir(f.out);
  fs::create_directories(dir);
  write_trace_csv(dir / "trace.csv", result.trace, TraceCsvOptions{f.timings});
  {
    std::ofstream timings(dir / "timings.csv");
    write_timings_csv(timings, result.trace);
  }
  write_bal(dir / "final.bal", problem.with_parameters(result.parameters));
  if (f.dump_clusters) write_clusters(dir / "clusters", history);

  nlohmann::ordered_json summary;
  summary["schema"] = 1;
  summary["solver"] = run.solver;
  summary["initial_cost"] = result.trace.initial_cost;
  summary["final_cost"] = result.trace.final_cost();
  summary["iterations"] = result.trace.iterations.size();
  summary["accepted_steps"] = result.trace.accepted_steps();
  summary["total_time_ms"] = result.trace.total_ms;
  summary["termination_reason"] = std::string(to_string(result.trace.termination));
  summary["seed"] = run.seed;
  std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';

  out << "solver " << run.solver << ": cost " << std::setprecision(10)
      << result.trace.initial_cost << " -> " << result.trace.final_cost() << " in "
      << result.trace.iterations.size() << " iterations ("
      << to_string(result.trace.termination) << ")\n";
  return kExitOk;
}

struct PerturbFlags {
  std::string input;
  std::string output;
  double sigma_points = 0.0;
  double sigma_centers = 0.0;
  std::uint64_t seed = 0;
};

int cmd_perturb(const PerturbFlags& f, std::ostream& out) {
  if (f.sigma_points < 0.0 || f.sigma_centers < 0.0) throw UsageError("sigmas must be >= 0");
  const BundleProblem problem = read_bal(fs::path(f.input));
  write_bal(fs::path(f.output), perturb(problem, {f.sigma_points, f.sigma_centers, f.seed}));
  out << "wrote " << f.output << '\n';
  return kExitOk;
}

struct GenerateFlags {
  std::string output;
  SyntheticSpec spec;
  std::string layout = "ring";
};

int cmd_generate(GenerateFlags f, std::ostream& out) {
  if (f.layout == "ring") f.spec.layout = Layout::kRing;
  else if (f.layout == "grid-street") f.spec.layout = Layout::kGridStreet;
  else throw UsageError("--layout must be 'ring' or 'grid-street'");
  const BundleProblem problem = generate_synthetic(f.spec);
  write_bal(fs::path(f.output), problem);
  out << "wrote " << f.output << ": m=" << problem.num_cameras() << " n=" << problem.num_points()
      << " q=" << problem.num_observations() << '\n';
  return kExitOk;
}

struct ProfileFlags {
  std::string manifest;
  std::string out = "profile.csv";
};

int cmd_profile(const ProfileFlags& f, std::ostream& out) {
  const BakeoffManifest manifest = load_manifest(fs::path(f.manifest));
  const ProfileInput input = run_bakeoff(manifest);
  const auto rows = performance_profile(input, manifest.taus, manifest.alphas);
  std::ofstream csv(f.out);
  if (!csv) throw Error("cannot write " + f.out);
  write_profile_csv(csv, rows);
  out << "wrote " << rows.size() << " rows to " << f.out << '\n';
  return kExitOk;
}

struct InfoFlags {
  std::string problem;
  std::string gamma = "100";
  double beta = 10.0;
  std::uint64_t seed = 0;
};

int cmd_info(const InfoFlags& f, std::ostream& out) {
  const std::size_t gamma = parse_gamma(f.gamma);
  if (!(f.beta > 0.0)) throw UsageError("--beta must be positive");
  IngestReport report;
  const BundleProblem problem = read_bal(fs::path(f.problem), {}, &report);
  const CameraGraph graph = build_camera_graph(problem);
  int clusters = 1;
  if (gamma != kUnbounded) {
    Rng rng = iteration_stream(f.seed, 1);
    clusters = cluster_stochastic(graph, gamma, f.beta, rng).count();
  }
  out << "m " << problem.num_cameras() << '\n'
      << "n " << problem.num_points() << '\n'
      << "q " << problem.num_observations() << '\n'
      << "camera_edges " << graph.edges().size() << '\n'
      << "clusters " << clusters << '\n'
      << "dropped_points " << report.dropped_points << '\n'
      << "dropped_cameras " << report.dropped_cameras << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bundle adjustment with stochastic camera clustering", "stba"};
  app.require_subcommand(1);

  SolveFlags solve;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a BAL problem");
  solve_cmd->add_option("problem", solve.problem, "BAL file")->required();
  add_run_flags(solve_cmd, solve);
  solve_cmd->add_option("--out", solve.out, "Output directory")->capture_default_str();
  solve_cmd->add_flag("--timings", solve.timings,
                      "Write measured phase timings into trace.csv (otherwise zeros)");
  solve_cmd->add_flag("--dump-clusters", solve.dump_clusters,
                      "Write <out>/clusters/iter_NNN.csv per iteration");

  PerturbFlags perturb_flags;
  auto* perturb_cmd = app.add_subcommand("perturb", "Add Gaussian noise to points and camera centers");
  perturb_cmd->add_option("input", perturb_flags.input, "BAL file")->required();
  perturb_cmd->add_option("output", perturb_flags.output, "Output BAL file")->required();
  perturb_cmd->add_option("--sigma-points", perturb_flags.sigma_points)->capture_default_str();
  perturb_cmd->add_option("--sigma-centers", perturb_flags.sigma_centers)->capture_default_str();
  perturb_cmd->add_option("--seed", perturb_flags.seed)->capture_default_str();

  GenerateFlags generate;
  auto* generate_cmd = app.add_subcommand("generate", "Write a synthetic BAL problem");
  generate_cmd->add_option("output", generate.output, "Output BAL file")->required();
  generate_cmd->add_option("--layout", generate.layout, "ring | grid-street")->capture_default_str();
  generate_cmd->add_option("--cameras", generate.spec.cameras)->capture_default_str();
  generate_cmd->add_option("--points", generate.spec.points)->capture_default_str();
  generate_cmd->add_option("--density", generate.spec.density)->capture_default_str();
  generate_cmd->add_option("--pixel-noise", generate.spec.pixel_noise)->capture_default_str();
  generate_cmd->add_option("--view-window", generate.spec.view_window_deg, "Ring view window, degrees")
      ->capture_default_str();
  generate_cmd->add_option("--focal", generate.spec.focal)->capture_default_str();
  generate_cmd->add_option("--seed", generate.spec.seed)->capture_default_str();

  ProfileFlags profile;
  auto* profile_cmd = app.add_subcommand("profile", "Run a bake-off manifest and write performance profiles");
  profile_cmd->add_option("manifest", profile.manifest, "JSON manifest")->required();
  profile_cmd->add_option("--out", profile.out, "Profile CSV")->capture_default_str();

  InfoFlags info;
  auto* info_cmd = app.add_subcommand("info", "Print problem sizes and a cluster count");
  info_cmd->add_option("problem", info.problem, "BAL file")->required();
  info_cmd->add_option("--gamma", info.gamma)->capture_default_str();
  info_cmd->add_option("--beta", info.beta)->capture_default_str();
  info_cmd->add_option("--seed", info.seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve, out);
    if (*perturb_cmd) return cmd_perturb(perturb_flags, out);
    if (*generate_cmd) return cmd_generate(generate, out);
    if (*profile_cmd) return cmd_profile(profile, out);
    if (*info_cmd) return cmd_info(info, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InfeasibleSpec& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidProblem& e) {
    err << "invalid problem: " << e.what() << '\n';
    return kExitInvalidProblem;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitUsage;
}

}  // namespace stba::cli
