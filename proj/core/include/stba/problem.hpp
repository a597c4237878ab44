#ifndef STBA_PROBLEM_HPP_
#define STBA_PROBLEM_HPP_

#include <span>
#include <utility>
#include <vector>

#include "stba/common.hpp"
#include "stba/robust_kernel.hpp"

namespace stba {

class WorkerPool;

/// Calibrated camera. Only rotation and translation are optimized.
struct Camera {
  Vec3 rotation = Vec3::Zero();     ///< angle-axis, radians
  Vec3 translation = Vec3::Zero();
  double focal = 1.0;               ///< pixels
  Vec2 distortion = Vec2::Zero();   ///< k1, k2
};

struct Point3D {
  Vec3 position = Vec3::Zero();
};

struct Observation {
  int camera = 0;
  int point = 0;
  Vec2 pixel = Vec2::Zero();
};

/// Projections closer than this to the camera plane are degenerate.
inline constexpr double kMinDepth = 1e-12;

/// BAL camera model: P = R X + t, p = -(Px, Py) / Pz,
/// pixel = f * (1 + k1 |p|^2 + k2 |p|^4) * p.
/// Throws DegenerateProjection when |Pz| < kMinDepth.
Vec2 project(const Camera& camera, const Point3D& point);

/// project(camera, point) - pixel.
Vec2 residual(const Camera& camera, const Point3D& point, const Vec2& pixel);

struct IngestOptions {
  /// Keep the component with the most observations instead of rejecting
  /// a disconnected visibility graph.
  bool keep_largest_component = false;
};

struct IngestReport {
  int dropped_points = 0;
  int dropped_cameras = 0;
  int dropped_observations = 0;
  int normalized_rotations = 0;
  int discarded_components = 0;
};

/// Cameras, points and observations forming one connected bipartite
/// visibility graph. Immutable after construction.
///
/// Observations are kept sorted by (point, camera), so the observations of a
/// point are contiguous. Parameter vectors use the layout
/// x = [c_0 .. c_{m-1}, p_0 .. p_{n-1}], 6 values per camera
/// (angle-axis, translation) and 3 per point.
class BundleProblem {
 public:
  /// Validates every invariant and throws InvalidProblem on violation.
  /// Rotations are normalized to norm <= pi.
  BundleProblem(std::vector<Camera> cameras, std::vector<Point3D> points,
                std::vector<Observation> observations);

  /// Lenient construction for raw input: drops points seen fewer than twice
  /// and cameras left without observations, normalizes rotations, and
  /// optionally keeps only the largest connected component.
  static BundleProblem ingest(std::vector<Camera> cameras, std::vector<Point3D> points,
                              std::vector<Observation> observations,
                              const IngestOptions& options = {},
                              IngestReport* report = nullptr);

  int num_cameras() const { return static_cast<int>(cameras_.size()); }
  int num_points() const { return static_cast<int>(points_.size()); }
  int num_observations() const { return static_cast<int>(observations_.size()); }
  int num_parameters() const { return kCameraDim * num_cameras() + kPointDim * num_points(); }

  const std::vector<Camera>& cameras() const { return cameras_; }
  const std::vector<Point3D>& points() const { return points_; }
  const std::vector<Observation>& observations() const { return observations_; }

  /// Observation indices of camera i, ascending (hence ascending point index).
  std::span<const int> camera_observations(int camera) const;
  /// Half-open range of observation indices for point j.
  std::pair<int, int> point_observation_range(int point) const {
    return {point_offsets_[point], point_offsets_[point + 1]};
  }

  int camera_offset(int camera) const { return kCameraDim * camera; }
  int point_offset(int point) const { return kCameraDim * num_cameras() + kPointDim * point; }

  /// Parameter vector of the stored cameras and points.
  VecX parameters() const;
  /// Copy with cameras and points replaced from x.
  BundleProblem with_parameters(const VecX& x) const;

 private:
  void build_indices();

  std::vector<Camera> cameras_;
  std::vector<Point3D> points_;
  std::vector<Observation> observations_;
  std::vector<int> point_offsets_;
  std::vector<int> camera_offsets_;
  std::vector<int> camera_obs_;
};

/// Camera i of problem with pose taken from parameter vector x.
Camera camera_from_parameters(const BundleProblem& problem, const VecX& x, int camera);
Point3D point_from_parameters(const BundleProblem& problem, const VecX& x, int point);

struct CostEvaluation {
  double cost = 0.0;
  int degenerate = 0;  ///< observations charged the degenerate penalty
};

/// Robust cost sum_k rho(|r_k|^2) accumulated in a fixed pairwise order over
/// the sorted observations. Degenerate projections add `degenerate_penalty`.
CostEvaluation evaluate_cost(const BundleProblem& problem, const VecX& x,
                             const RobustKernel& kernel, double degenerate_penalty = 1e10,
                             WorkerPool* pool = nullptr);

double total_cost(const BundleProblem& problem, const VecX& x, const RobustKernel& kernel,
                  WorkerPool* pool = nullptr);

}  // namespace stba

#endif  // STBA_PROBLEM_HPP_
