#include "stba/bench.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <Eigen/Geometry>
#include <json.hpp>

#include "stba/bal_io.hpp"
#include "stba/errors.hpp"
#include "stba/rotation.hpp"

namespace stba {

using json = nlohmann::json;

BundleProblem perturb(const BundleProblem& problem, const PerturbSpec& spec) {
  if (spec.sigma_points < 0.0 || spec.sigma_camera_centers < 0.0) {
    throw Error("perturbation sigmas must be non-negative");
  }
  std::mt19937_64 rng(spec.seed);
  std::vector<Camera> cameras = problem.cameras();
  std::vector<Point3D> points = problem.points();
  if (spec.sigma_camera_centers > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sigma_camera_centers);
    for (Camera& c : cameras) {
      const Mat3 r = angle_axis_to_rotation(c.rotation);
      Vec3 center = -r.transpose() * c.translation;
      for (int k = 0; k < 3; ++k) center[k] += noise(rng);
      c.translation = -r * center;
    }
  }
  if (spec.sigma_points > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.sigma_points);
    for (Point3D& p : points) {
      for (int k = 0; k < 3; ++k) p.position[k] += noise(rng);
    }
  }
  return BundleProblem(std::move(cameras), std::move(points), problem.observations());
}

Vec3 rotation_to_angle_axis(const Mat3& rotation) {
  const Eigen::AngleAxisd aa(rotation);
  return aa.angle() * aa.axis();
}

namespace {

constexpr double kPi = 3.14159265358979323846;

// World-to-camera rotation for a camera at `center` looking at `target`
// (cameras look down their -z axis).
Mat3 look_at(const Vec3& center, const Vec3& target, const Vec3& up) {
  const Vec3 z = (center - target).normalized();
  const Vec3 x = up.cross(z).normalized();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  return r;
}

Camera make_camera(const Vec3& center, const Vec3& target, const Vec3& up, double focal) {
  Camera c;
  const Mat3 r = look_at(center, target, up);
  c.rotation = rotation_to_angle_axis(r);
  c.translation = -angle_axis_to_rotation(c.rotation) * center;
  c.focal = focal;
  return c;
}

double wrapped_difference(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * kPi);
  return d > kPi ? 2.0 * kPi - d : d;
}

struct Scene {
  std::vector<Camera> cameras;
  std::vector<Point3D> points;
  std::vector<std::vector<int>> candidates;  // per point
};

Scene ring_scene(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double radius = 50.0;
  const double cloud = 15.0;
  const int m = spec.cameras;
  const double step = 2.0 * kPi / m;
  const double window = std::max(spec.view_window_deg * kPi / 180.0, 2.0 * step + 1e-9);
  Scene scene;
  std::vector<double> azimuth(m);
  for (int i = 0; i < m; ++i) {
    azimuth[i] = step * i;
    const Vec3 center(radius * std::cos(azimuth[i]), 4.0 * (unit(rng) - 0.5),
                      radius * std::sin(azimuth[i]));
    const Vec3 target(2.0 * (unit(rng) - 0.5), 0.0, 2.0 * (unit(rng) - 0.5));
    scene.cameras.push_back(make_camera(center, target, Vec3::UnitY(), spec.focal));
  }
  for (int j = 0; j < spec.points; ++j) {
    const double r = cloud * std::sqrt(unit(rng));
    const double theta = 2.0 * kPi * unit(rng);
    Point3D p;
    p.position = Vec3(r * std::cos(theta), 10.0 * (unit(rng) - 0.5), r * std::sin(theta));
    scene.points.push_back(p);
    std::vector<int> in_view;
    for (int i = 0; i < m; ++i) {
      if (wrapped_difference(theta, azimuth[i]) <= 0.5 * window) in_view.push_back(i);
    }
    scene.candidates.push_back(std::move(in_view));
  }
  return scene;
}

Scene street_scene(const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double spacing = 1.5;
  const double near = 3.0;
  const double far = 30.0;
  const int m = spec.cameras;
  Scene scene;
  for (int i = 0; i < m; ++i) {
    const Vec3 center(spacing * i, 0.3 * (unit(rng) - 0.5), 1.5);
    const Vec3 target = center + Vec3(10.0, 1.0 * (unit(rng) - 0.5), 0.0);
    scene.cameras.push_back(make_camera(center, target, Vec3::UnitZ(), spec.focal));
  }
  const double lo = near + spacing;
  const double hi = spacing * (m - 1) + far - spacing;
  for (int j = 0; j < spec.points; ++j) {
    Point3D p;
    const double side = unit(rng) < 0.5 ? -8.0 : 8.0;
    p.position = Vec3(lo + (hi - lo) * unit(rng), side + 0.5 * (unit(rng) - 0.5), 6.0 * unit(rng));
    scene.points.push_back(p);
    std::vector<int> in_view;
    for (int i = 0; i < m; ++i) {
      const double depth = p.position.x() - spacing * i;
      if (depth >= near && depth <= far) in_view.push_back(i);
    }
    scene.candidates.push_back(std::move(in_view));
  }
  return scene;
}

}  // namespace

BundleProblem generate_synthetic(const SyntheticSpec& spec) {
  if (spec.cameras < 2) throw InfeasibleSpec("need at least 2 cameras");
  if (spec.points < 4) throw InfeasibleSpec("need at least 4 points");
  if (!(spec.density > 0.0) || spec.density > 1.0) {
    throw InfeasibleSpec("density must lie in (0, 1]");
  }
  if (spec.pixel_noise < 0.0) throw InfeasibleSpec("pixel noise must be non-negative");

  std::mt19937_64 rng(spec.seed);
  constexpr int kAttempts = 20;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    Scene scene = spec.layout == Layout::kRing ? ring_scene(spec, rng) : street_scene(spec, rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, spec.pixel_noise > 0.0 ? spec.pixel_noise : 1.0);
    std::vector<Observation> observations;
    for (int j = 0; j < spec.points; ++j) {
      const auto& in_view = scene.candidates[j];
      if (in_view.size() < 2) throw InfeasibleSpec("a point cannot get two views");
      std::vector<int> chosen;
      for (int i : in_view) {
        if (unit(rng) < spec.density) chosen.push_back(i);
      }
      while (chosen.size() < 2) {
        const int pick = in_view[static_cast<std::size_t>(unit(rng) * in_view.size())];
        if (std::find(chosen.begin(), chosen.end(), pick) == chosen.end()) chosen.push_back(pick);
      }
      for (int i : chosen) {
        Observation o;
        o.camera = i;
        o.point = j;
        o.pixel = project(scene.cameras[i], scene.points[j]);
        if (spec.pixel_noise > 0.0) {
          o.pixel.x() += noise(rng);
          o.pixel.y() += noise(rng);
        }
        observations.push_back(o);
      }
    }
    try {
      return BundleProblem(std::move(scene.cameras), std::move(scene.points),
                           std::move(observations));
    } catch (const InvalidProblem&) {
      // Unobserved camera or split visibility graph; draw again.
    }
  }
  throw InfeasibleSpec("could not draw a connected problem with every camera observed");
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::string_view, 5> kSolverNames = {"lm-dense", "lm-pcg", "stba",
                                                          "stba-fixed", "nsgc"};

}  // namespace

std::span<const std::string_view> solver_names() { return kSolverNames; }

bool is_solver_name(std::string_view name) {
  return std::find(kSolverNames.begin(), kSolverNames.end(), name) != kSolverNames.end();
}

SolverConfig solver_config(const RunConfig& run) {
  SolverConfig config;
  config.max_iterations = run.max_iterations;
  config.lambda0 = run.lambda0;
  config.cost_tolerance = run.tolerance;
  config.gradient_tolerance = run.tolerance;
  config.parameter_tolerance = run.tolerance;
  config.kernel = RobustKernel{run.huber_delta};
  config.workers = run.workers;
  if (run.solver == "lm-dense") config.linear_solver = LinearSolverKind::kDenseCholesky;
  if (run.solver == "lm-pcg") config.linear_solver = LinearSolverKind::kBlockJacobiPcg;
  return config;
}

StbaConfig stba_config(const RunConfig& run) {
  StbaConfig config;
  config.solver = solver_config(run);
  config.gamma = run.gamma;
  config.beta = run.beta;
  config.seed = run.seed;
  if (run.solver == "stba-fixed") config.mode = ClusteringMode::kFixed;
  if (run.solver == "nsgc") config.mode = ClusteringMode::kDeterministic;
  return config;
}

SolveResult run_solver(const BundleProblem& problem, const RunConfig& run) {
  if (!is_solver_name(run.solver)) throw Error("unknown solver '" + run.solver + "'");
  if (run.solver == "lm-dense" || run.solver == "lm-pcg") {
    return lm_minimize(problem, solver_config(run));
  }
  return stba_minimize(problem, stba_config(run));
}

// ---------------------------------------------------------------------------

SolverRun solver_run(std::string solver, const SolveTrace& trace) {
  SolverRun run;
  run.solver = std::move(solver);
  double best = trace.initial_cost;
  run.samples.push_back({0.0, best});
  for (const auto& r : trace.iterations) {
    if (r.accepted) best = std::min(best, r.cost_after);
    run.samples.push_back({r.elapsed_ms, best});
  }
  return run;
}

double ProfileProblem::best_cost() const {
  double best = kInfinity;
  for (const auto& run : runs) best = std::min(best, run.final_cost());
  return best;
}

double cost_threshold(double initial_cost, double best_cost, double tau) {
  return best_cost + tau * (initial_cost - best_cost);
}

double time_to_threshold(const SolverRun& run, double threshold) {
  for (const auto& s : run.samples) {
    if (s.cost <= threshold) return s.time_ms;
  }
  return kInfinity;
}

std::vector<ProfileRow> performance_profile(const ProfileInput& input, std::span<const double> taus,
                                            std::span<const double> alphas) {
  std::vector<std::string> solvers;
  for (const auto& p : input.problems) {
    for (const auto& run : p.runs) {
      if (std::find(solvers.begin(), solvers.end(), run.solver) == solvers.end()) {
        solvers.push_back(run.solver);
      }
    }
  }
  std::vector<ProfileRow> rows;
  const double count = static_cast<double>(input.problems.size());
  for (const auto& solver : solvers) {
    for (double tau : taus) {
      // Per problem: this solver's time and the fastest time.
      std::vector<std::pair<double, double>> times;
      for (const auto& p : input.problems) {
        const double threshold = cost_threshold(p.initial_cost, p.best_cost(), tau);
        double mine = kInfinity;
        double fastest = kInfinity;
        for (const auto& run : p.runs) {
          const double t = time_to_threshold(run, threshold);
          fastest = std::min(fastest, t);
          if (run.solver == solver) mine = t;
        }
        times.emplace_back(mine, fastest);
      }
      for (double alpha : alphas) {
        int solved = 0;
        for (const auto& [mine, fastest] : times) {
          if (mine != kInfinity && mine <= alpha * fastest) ++solved;
        }
        rows.push_back({solver, tau, alpha, count > 0 ? 100.0 * solved / count : 0.0});
      }
    }
  }
  return rows;
}

void write_profile_csv(std::ostream& out, std::span<const ProfileRow> rows) {
  out << "solver,tau,alpha,rho\n";
  for (const auto& r : rows) {
    out << r.solver << ',' << r.tau << ',' << r.alpha << ',' << r.rho << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

std::size_t parse_gamma(const json& value) {
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "inf" || text == "infinity") return kUnbounded;
    throw ParseError("gamma must be a positive integer or \"inf\"");
  }
  const long long g = value.get<long long>();
  if (g < 1) throw ParseError("gamma must be at least 1");
  return static_cast<std::size_t>(g);
}

double parse_huber(const json& value) {
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    if (text == "inf" || text == "infinity") return kInfinity;
    throw ParseError("huber must be a positive number or \"inf\"");
  }
  const double d = value.get<double>();
  if (!(d > 0.0)) throw ParseError("huber must be positive");
  return d;
}

void apply_run_fields(RunConfig& config, const json& object) {
  if (!object.is_object()) throw ParseError("solver settings must be a JSON object");
  for (const auto& [key, value] : object.items()) {
    if (key == "solver") config.solver = value.get<std::string>();
    else if (key == "max_iters") config.max_iterations = value.get<int>();
    else if (key == "lambda0") config.lambda0 = value.get<double>();
    else if (key == "huber") config.huber_delta = parse_huber(value);
    else if (key == "gamma") config.gamma = parse_gamma(value);
    else if (key == "beta") config.beta = value.get<double>();
    else if (key == "workers") config.workers = value.get<int>();
    else if (key == "tol") config.tolerance = value.get<double>();
    else throw ParseError("unknown solver setting '" + key + "'");
  }
}

SyntheticSpec parse_synthetic(const json& object) {
  SyntheticSpec spec;
  for (const auto& [key, value] : object.items()) {
    if (key == "cameras") spec.cameras = value.get<int>();
    else if (key == "points") spec.points = value.get<int>();
    else if (key == "layout") {
      const std::string layout = value.get<std::string>();
      if (layout == "ring") spec.layout = Layout::kRing;
      else if (layout == "grid-street") spec.layout = Layout::kGridStreet;
      else throw ParseError("unknown layout '" + layout + "'");
    } else if (key == "density") spec.density = value.get<double>();
    else if (key == "pixel_noise") spec.pixel_noise = value.get<double>();
    else if (key == "seed") spec.seed = value.get<std::uint64_t>();
    else if (key == "view_window_deg") spec.view_window_deg = value.get<double>();
    else if (key == "focal") spec.focal = value.get<double>();
    else throw ParseError("unknown synthetic field '" + key + "'");
  }
  return spec;
}

}  // namespace

RunConfig BakeoffManifest::config_for(const std::string& solver, std::uint64_t seed) const {
  RunConfig config = defaults;
  config.solver = solver;
  config.seed = seed;
  for (const auto& [name, text] : overrides) {
    if (name == solver) apply_run_fields(config, json::parse(text));
  }
  return config;
}

BakeoffManifest parse_manifest(std::string_view json_text, const std::filesystem::path& base_dir) {
  BakeoffManifest manifest;
  try {
    const json doc = json::parse(json_text);
    if (!doc.is_object()) throw ParseError("manifest must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "problems") {
        for (const auto& p : value) {
          std::filesystem::path path = p.get<std::string>();
          manifest.problems.push_back(path.is_absolute() ? path : base_dir / path);
        }
      } else if (key == "synthetic") {
        for (const auto& s : value) manifest.synthetic.push_back(parse_synthetic(s));
      } else if (key == "solvers") {
        manifest.solvers = value.get<std::vector<std::string>>();
      } else if (key == "seeds") {
        manifest.seeds = value.get<std::vector<std::uint64_t>>();
      } else if (key == "taus") {
        manifest.taus = value.get<std::vector<double>>();
      } else if (key == "alphas") {
        manifest.alphas = value.get<std::vector<double>>();
      } else if (key == "perturb") {
        manifest.perturb = true;
        manifest.perturb_spec.sigma_points = value.value("sigma_points", 0.0);
        manifest.perturb_spec.sigma_camera_centers = value.value("sigma_camera_centers", 0.0);
      } else if (key == "defaults") {
        apply_run_fields(manifest.defaults, value);
      } else if (key == "overrides") {
        for (const auto& [solver, settings] : value.items()) {
          RunConfig probe;
          apply_run_fields(probe, settings);
          manifest.overrides.emplace_back(solver, settings.dump());
        }
      } else {
        throw ParseError("unknown manifest field '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what());
  }
  if (manifest.solvers.empty()) throw ParseError("manifest lists no solvers");
  for (const auto& s : manifest.solvers) {
    if (!is_solver_name(s)) throw ParseError("unknown solver '" + s + "' in manifest");
  }
  if (manifest.problems.empty() && manifest.synthetic.empty()) {
    throw ParseError("manifest lists no problems");
  }
  for (double tau : manifest.taus) {
    if (!(tau > 0.0 && tau < 1.0)) throw ParseError("taus must lie in (0, 1)");
  }
  for (double alpha : manifest.alphas) {
    if (!(alpha >= 1.0)) throw ParseError("alphas must be >= 1");
  }
  return manifest;
}

BakeoffManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), path.parent_path());
}

ProfileInput run_bakeoff(const BakeoffManifest& manifest) {
  std::vector<std::pair<std::string, BundleProblem>> sources;
  for (const auto& path : manifest.problems) sources.emplace_back(path.string(), read_bal(path));
  for (std::size_t k = 0; k < manifest.synthetic.size(); ++k) {
    sources.emplace_back("synthetic-" + std::to_string(k), generate_synthetic(manifest.synthetic[k]));
  }

  ProfileInput input;
  for (const auto& [name, source] : sources) {
    for (std::uint64_t seed : manifest.seeds) {
      PerturbSpec spec = manifest.perturb_spec;
      spec.seed = seed;
      const BundleProblem problem = manifest.perturb ? perturb(source, spec) : source;
      ProfileProblem entry;
      entry.name = name + "#" + std::to_string(seed);
      for (const auto& solver : manifest.solvers) {
        const SolveResult result = run_solver(problem, manifest.config_for(solver, seed));
        entry.initial_cost = result.trace.initial_cost;
        entry.runs.push_back(solver_run(solver, result.trace));
      }
      input.problems.push_back(std::move(entry));
    }
  }
  return input;
}

}  // namespace stba
