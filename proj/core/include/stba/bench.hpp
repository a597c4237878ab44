#ifndef STBA_BENCH_HPP_
#define STBA_BENCH_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stba/lm_solver.hpp"
#include "stba/problem.hpp"
#include "stba/stba_solver.hpp"

namespace stba {

struct PerturbSpec {
  double sigma_points = 0.0;          ///< world units
  double sigma_camera_centers = 0.0;  ///< world units
  std::uint64_t seed = 0;
};

/// Gaussian noise on point positions and camera centers C = -R^T t; the
/// translation is rebuilt as t = -R C' so rotations are untouched.
/// Observations are kept. A zero sigma leaves that part bit-identical.
BundleProblem perturb(const BundleProblem& problem, const PerturbSpec& spec);

enum class Layout {
  kRing,         ///< cameras on a circle looking at a central point cloud
  kGridStreet,   ///< cameras driving along +x between two facades
};

struct SyntheticSpec {
  int cameras = 20;
  int points = 500;
  Layout layout = Layout::kRing;
  double density = 0.5;       ///< probability that a camera in view records a point
  double pixel_noise = 0.0;   ///< pixels, standard deviation per coordinate
  std::uint64_t seed = 0;
  double view_window_deg = 60.0;  ///< ring: azimuth window a camera sees
  double focal = 500.0;
};

/// Problem whose parameters are the ground truth and whose observations are
/// exact projections plus pixel noise. Throws InfeasibleSpec.
BundleProblem generate_synthetic(const SyntheticSpec& spec);

/// Angle-axis vector of a rotation matrix, norm in [0, pi].
Vec3 rotation_to_angle_axis(const Mat3& rotation);

// ---------------------------------------------------------------------------
// Solver dispatch

struct RunConfig {
  std::string solver = "stba";  ///< lm-dense, lm-pcg, stba, stba-fixed, nsgc
  int max_iterations = 100;
  double lambda0 = 1e-4;
  double huber_delta = 0.5;     ///< kInfinity disables the kernel
  std::size_t gamma = 100;      ///< kUnbounded: single cluster
  double beta = 10.0;
  std::uint64_t seed = 0;
  int workers = 0;              ///< 0: $STBA_WORKERS, else 1
  double tolerance = 1e-6;      ///< cost, gradient and parameter tolerance
};

/// Names accepted by run_solver.
std::span<const std::string_view> solver_names();
bool is_solver_name(std::string_view name);

SolverConfig solver_config(const RunConfig& run);
StbaConfig stba_config(const RunConfig& run);
SolveResult run_solver(const BundleProblem& problem, const RunConfig& run);

// ---------------------------------------------------------------------------
// Performance profiles

struct CostSample {
  double time_ms = 0.0;
  double cost = 0.0;
};

struct SolverRun {
  std::string solver;
  std::vector<CostSample> samples;  ///< best cost so far, by cumulative time
  double final_cost() const { return samples.empty() ? kInfinity : samples.back().cost; }
};

/// (0, F0) followed by (elapsed_ms, best cost) per iteration.
SolverRun solver_run(std::string solver, const SolveTrace& trace);

struct ProfileProblem {
  std::string name;
  double initial_cost = 0.0;
  std::vector<SolverRun> runs;

  /// F* = min over solvers of the final cost.
  double best_cost() const;
};

struct ProfileInput {
  std::vector<ProfileProblem> problems;
};

/// F_tau = F* + tau (F0 - F*).
double cost_threshold(double initial_cost, double best_cost, double tau);

/// First time the run's cost is <= threshold, kInfinity if never.
double time_to_threshold(const SolverRun& run, double threshold);

struct ProfileRow {
  std::string solver;
  double tau = 0.0;
  double alpha = 0.0;
  double rho = 0.0;  ///< percent of problems solved within alpha times the fastest
};

/// Rows ordered by (solver in first-seen order, tau, alpha).
std::vector<ProfileRow> performance_profile(const ProfileInput& input, std::span<const double> taus,
                                            std::span<const double> alphas);

void write_profile_csv(std::ostream& out, std::span<const ProfileRow> rows);

// ---------------------------------------------------------------------------
// Bake-off

/// Problems x seeds x solvers, run one job at a time.
///
/// Manifest (JSON):
///   {
///     "problems": ["a.bal", ...],            // paths, relative to the manifest
///     "synthetic": [{"cameras": 50, ...}],   // optional generated problems
///     "solvers": ["lm-dense", "stba"],
///     "seeds": [0, 1],
///     "taus": [0.1, 0.01], "alphas": [1, 2, 4],
///     "perturb": {"sigma_points": 0.1, "sigma_camera_centers": 0.1},
///     "defaults": {"max_iters": 100, ...},   // RunConfig fields, CLI spelling
///     "overrides": {"stba": {"gamma": 50}}
///   }
/// Each (problem, seed) becomes one profile problem. Throws ParseError.
struct BakeoffManifest {
  std::vector<std::filesystem::path> problems;
  std::vector<SyntheticSpec> synthetic;
  std::vector<std::string> solvers;
  std::vector<std::uint64_t> seeds{0};
  std::vector<double> taus{0.1, 0.01, 0.001};
  std::vector<double> alphas{1, 1.5, 2, 3, 5, 10};
  bool perturb = false;
  PerturbSpec perturb_spec;
  RunConfig defaults;
  /// Per-solver JSON objects applied on top of `defaults`.
  std::vector<std::pair<std::string, std::string>> overrides;

  RunConfig config_for(const std::string& solver, std::uint64_t seed) const;
};

BakeoffManifest parse_manifest(std::string_view json_text,
                               const std::filesystem::path& base_dir = {});
BakeoffManifest load_manifest(const std::filesystem::path& path);

ProfileInput run_bakeoff(const BakeoffManifest& manifest);

}  // namespace stba

#endif  // STBA_BENCH_HPP_
