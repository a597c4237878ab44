#include "stba/problem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "stba/errors.hpp"
#include "stba/parallel.hpp"
#include "stba/rotation.hpp"

namespace stba {

namespace {

bool all_finite(const Camera& c) {
  return c.rotation.allFinite() && c.translation.allFinite() && std::isfinite(c.focal) &&
         c.distortion.allFinite();
}

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<int> parent_;
};

void check_basic(const std::vector<Camera>& cameras, const std::vector<Point3D>& points,
                 const std::vector<Observation>& observations) {
  const int m = static_cast<int>(cameras.size());
  const int n = static_cast<int>(points.size());
  for (int i = 0; i < m; ++i) {
    if (!all_finite(cameras[i])) {
      throw InvalidProblem("camera " + std::to_string(i) + " has non-finite values");
    }
    if (!(cameras[i].focal > 0.0)) {
      throw InvalidProblem("camera " + std::to_string(i) + " has non-positive focal length");
    }
  }
  for (int j = 0; j < n; ++j) {
    if (!points[j].position.allFinite()) {
      throw InvalidProblem("point " + std::to_string(j) + " has non-finite coordinates");
    }
  }
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const Observation& o = observations[k];
    if (o.camera < 0 || o.camera >= m || o.point < 0 || o.point >= n) {
      throw InvalidProblem("observation " + std::to_string(k) + " has an index out of range");
    }
    if (!o.pixel.allFinite()) {
      throw InvalidProblem("observation " + std::to_string(k) + " has a non-finite pixel");
    }
  }
}

void sort_observations(std::vector<Observation>& observations) {
  std::stable_sort(observations.begin(), observations.end(),
                   [](const Observation& a, const Observation& b) {
                     return a.point != b.point ? a.point < b.point : a.camera < b.camera;
                   });
}

void check_duplicates(const std::vector<Observation>& sorted) {
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    if (sorted[k].point == sorted[k - 1].point && sorted[k].camera == sorted[k - 1].camera) {
      throw InvalidProblem("duplicate observation of point " + std::to_string(sorted[k].point) +
                           " by camera " + std::to_string(sorted[k].camera));
    }
  }
}

// Component label per camera and per point (points offset by m).
std::vector<int> component_roots(int m, int n, const std::vector<Observation>& observations) {
  DisjointSets sets(m + n);
  for (const Observation& o : observations) sets.unite(o.camera, m + o.point);
  std::vector<int> roots(static_cast<std::size_t>(m + n));
  for (int v = 0; v < m + n; ++v) roots[v] = sets.find(v);
  return roots;
}

}  // namespace

Vec2 project(const Camera& camera, const Point3D& point) {
  const Vec3 p = angle_axis_to_rotation(camera.rotation) * point.position + camera.translation;
  if (std::abs(p.z()) < kMinDepth) {
    throw DegenerateProjection("point lies on the camera plane");
  }
  const Vec2 xy(-p.x() / p.z(), -p.y() / p.z());
  const double n2 = xy.squaredNorm();
  const double radial = 1.0 + camera.distortion[0] * n2 + camera.distortion[1] * n2 * n2;
  return camera.focal * radial * xy;
}

Vec2 residual(const Camera& camera, const Point3D& point, const Vec2& pixel) {
  return project(camera, point) - pixel;
}

BundleProblem::BundleProblem(std::vector<Camera> cameras, std::vector<Point3D> points,
                             std::vector<Observation> observations)
    : cameras_(std::move(cameras)),
      points_(std::move(points)),
      observations_(std::move(observations)) {
  check_basic(cameras_, points_, observations_);
  for (Camera& c : cameras_) c.rotation = normalize_angle_axis(c.rotation);
  sort_observations(observations_);
  check_duplicates(observations_);

  const int m = num_cameras();
  const int n = num_points();
  if (m == 0 || n == 0) throw InvalidProblem("problem has no cameras or no points");

  std::vector<int> camera_count(static_cast<std::size_t>(m), 0);
  std::vector<int> point_count(static_cast<std::size_t>(n), 0);
  for (const Observation& o : observations_) {
    ++camera_count[o.camera];
    ++point_count[o.point];
  }
  for (int i = 0; i < m; ++i) {
    if (camera_count[i] == 0) {
      throw InvalidProblem("camera " + std::to_string(i) + " has no observations");
    }
  }
  for (int j = 0; j < n; ++j) {
    if (point_count[j] < 2) {
      throw InvalidProblem("point " + std::to_string(j) + " is observed fewer than twice");
    }
  }
  const std::vector<int> roots = component_roots(m, n, observations_);
  for (int r : roots) {
    if (r != roots[0]) throw InvalidProblem("visibility graph is not connected");
  }
  build_indices();
}

void BundleProblem::build_indices() {
  const int m = num_cameras();
  const int n = num_points();
  point_offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  camera_offsets_.assign(static_cast<std::size_t>(m) + 1, 0);
  for (const Observation& o : observations_) {
    ++point_offsets_[o.point + 1];
    ++camera_offsets_[o.camera + 1];
  }
  std::partial_sum(point_offsets_.begin(), point_offsets_.end(), point_offsets_.begin());
  std::partial_sum(camera_offsets_.begin(), camera_offsets_.end(), camera_offsets_.begin());
  camera_obs_.assign(observations_.size(), 0);
  std::vector<int> fill(camera_offsets_.begin(), camera_offsets_.end() - 1);
  for (int k = 0; k < num_observations(); ++k) {
    camera_obs_[fill[observations_[k].camera]++] = k;
  }
}

BundleProblem BundleProblem::ingest(std::vector<Camera> cameras, std::vector<Point3D> points,
                                    std::vector<Observation> observations,
                                    const IngestOptions& options, IngestReport* report) {
  IngestReport local;
  check_basic(cameras, points, observations);
  for (Camera& c : cameras) {
    const Vec3 normalized = normalize_angle_axis(c.rotation);
    if (normalized != c.rotation) {
      ++local.normalized_rotations;
      c.rotation = normalized;
    }
  }
  sort_observations(observations);
  check_duplicates(observations);

  const int m = static_cast<int>(cameras.size());
  const int n = static_cast<int>(points.size());
  std::vector<int> point_count(static_cast<std::size_t>(n), 0);
  for (const Observation& o : observations) ++point_count[o.point];

  std::vector<char> keep_point(static_cast<std::size_t>(n), 0);
  for (int j = 0; j < n; ++j) keep_point[j] = point_count[j] >= 2;
  std::vector<Observation> kept;
  kept.reserve(observations.size());
  for (const Observation& o : observations) {
    if (keep_point[o.point]) kept.push_back(o);
  }

  std::vector<char> keep_camera(static_cast<std::size_t>(m), 0);
  for (const Observation& o : kept) keep_camera[o.camera] = 1;

  // Connectivity over the surviving vertices.
  const std::vector<int> roots = component_roots(m, n, kept);
  std::vector<long> weight(static_cast<std::size_t>(m + n), 0);
  for (const Observation& o : kept) ++weight[roots[o.camera]];
  std::vector<int> component_list;
  for (int v = 0; v < m + n; ++v) {
    const bool alive = v < m ? keep_camera[v] != 0 : keep_point[v - m] != 0;
    if (alive && roots[v] == v) component_list.push_back(v);
  }
  if (component_list.empty()) throw InvalidProblem("problem has no usable observations");
  if (component_list.size() > 1) {
    if (!options.keep_largest_component) {
      throw InvalidProblem("visibility graph has " + std::to_string(component_list.size()) +
                           " connected components");
    }
    int best = component_list.front();
    for (int root : component_list) {
      if (weight[root] > weight[best]) best = root;
    }
    local.discarded_components = static_cast<int>(component_list.size()) - 1;
    for (int i = 0; i < m; ++i) {
      if (roots[i] != best) keep_camera[i] = 0;
    }
    for (int j = 0; j < n; ++j) {
      if (roots[m + j] != best) keep_point[j] = 0;
    }
  }

  std::vector<int> camera_map(static_cast<std::size_t>(m), -1);
  std::vector<int> point_map(static_cast<std::size_t>(n), -1);
  std::vector<Camera> out_cameras;
  std::vector<Point3D> out_points;
  for (int i = 0; i < m; ++i) {
    if (keep_camera[i]) {
      camera_map[i] = static_cast<int>(out_cameras.size());
      out_cameras.push_back(cameras[i]);
    }
  }
  for (int j = 0; j < n; ++j) {
    if (keep_point[j]) {
      point_map[j] = static_cast<int>(out_points.size());
      out_points.push_back(points[j]);
    }
  }
  std::vector<Observation> out_observations;
  out_observations.reserve(kept.size());
  for (const Observation& o : kept) {
    if (camera_map[o.camera] >= 0 && point_map[o.point] >= 0) {
      out_observations.push_back({camera_map[o.camera], point_map[o.point], o.pixel});
    }
  }
  local.dropped_cameras = m - static_cast<int>(out_cameras.size());
  local.dropped_points = n - static_cast<int>(out_points.size());
  local.dropped_observations =
      static_cast<int>(observations.size()) - static_cast<int>(out_observations.size());
  if (report != nullptr) *report = local;
  return BundleProblem(std::move(out_cameras), std::move(out_points),
                       std::move(out_observations));
}

std::span<const int> BundleProblem::camera_observations(int camera) const {
  const int begin = camera_offsets_[camera];
  const int end = camera_offsets_[camera + 1];
  return std::span<const int>(camera_obs_).subspan(static_cast<std::size_t>(begin),
                                                    static_cast<std::size_t>(end - begin));
}

VecX BundleProblem::parameters() const {
  VecX x(num_parameters());
  for (int i = 0; i < num_cameras(); ++i) {
    x.segment<3>(camera_offset(i)) = cameras_[i].rotation;
    x.segment<3>(camera_offset(i) + 3) = cameras_[i].translation;
  }
  for (int j = 0; j < num_points(); ++j) {
    x.segment<3>(point_offset(j)) = points_[j].position;
  }
  return x;
}

BundleProblem BundleProblem::with_parameters(const VecX& x) const {
  std::vector<Camera> cameras = cameras_;
  std::vector<Point3D> points = points_;
  for (int i = 0; i < num_cameras(); ++i) {
    cameras[i].rotation = x.segment<3>(camera_offset(i));
    cameras[i].translation = x.segment<3>(camera_offset(i) + 3);
  }
  for (int j = 0; j < num_points(); ++j) points[j].position = x.segment<3>(point_offset(j));
  return BundleProblem(std::move(cameras), std::move(points), observations_);
}

Camera camera_from_parameters(const BundleProblem& problem, const VecX& x, int camera) {
  Camera c = problem.cameras()[camera];
  c.rotation = x.segment<3>(problem.camera_offset(camera));
  c.translation = x.segment<3>(problem.camera_offset(camera) + 3);
  return c;
}

Point3D point_from_parameters(const BundleProblem& problem, const VecX& x, int point) {
  return Point3D{x.segment<3>(problem.point_offset(point))};
}

CostEvaluation evaluate_cost(const BundleProblem& problem, const VecX& x,
                             const RobustKernel& kernel, double degenerate_penalty,
                             WorkerPool* pool) {
  const auto& observations = problem.observations();
  std::vector<double> terms(observations.size(), 0.0);
  std::vector<char> degenerate(observations.size(), 0);
  parallel_for(pool, observations.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Observation& o = observations[k];
      try {
        const Vec2 r = residual(camera_from_parameters(problem, x, o.camera),
                                point_from_parameters(problem, x, o.point), o.pixel);
        terms[k] = huber_rho(r.squaredNorm(), kernel).value;
      } catch (const DegenerateProjection&) {
        terms[k] = degenerate_penalty;
        degenerate[k] = 1;
      }
    }
  });
  CostEvaluation result;
  result.cost = pairwise_sum(terms);
  result.degenerate = static_cast<int>(std::count(degenerate.begin(), degenerate.end(), 1));
  return result;
}

double total_cost(const BundleProblem& problem, const VecX& x, const RobustKernel& kernel,
                  WorkerPool* pool) {
  return evaluate_cost(problem, x, kernel, 1e10, pool).cost;
}

}  // namespace stba
