#ifndef STBA_ROBUST_JACOBIANS_HPP_
#define STBA_ROBUST_JACOBIANS_HPP_

#include <vector>

#include "stba/common.hpp"
#include "stba/problem.hpp"
#include "stba/robust_kernel.hpp"

namespace stba {

/// Residual of one observation and its derivatives with respect to the
/// camera's 6 parameters (angle-axis, translation) and the point's 3.
struct ResidualJacobian {
  Vec2 residual = Vec2::Zero();
  Mat26 d_camera = Mat26::Zero();
  Mat23 d_point = Mat23::Zero();
};

/// Analytic derivative of residual(camera, point, pixel).
/// Throws DegenerateProjection.
ResidualJacobian residual_jacobian(const Camera& camera, const Point3D& point,
                                   const Vec2& pixel);

/// Per-observation residuals and Jacobian blocks, each scaled by
/// sqrt(rho'(|r|^2)) so that the Gauss-Newton system built from them is the
/// reweighted (IRLS) system of the robust cost. Ordered like
/// BundleProblem::observations().
struct JacobianBlocks {
  std::vector<Mat26> camera_blocks;
  std::vector<Mat23> point_blocks;
  std::vector<Vec2> residuals;
  int degenerate = 0;  ///< observations whose blocks were zeroed

  std::size_t size() const { return residuals.size(); }
};

JacobianBlocks weighted_blocks(const BundleProblem& problem, const VecX& x,
                               const RobustKernel& kernel, WorkerPool* pool = nullptr);

/// Gradient of total_cost assembled from weighted blocks: 2 J^T f.
VecX cost_gradient(const BundleProblem& problem, const JacobianBlocks& blocks);

}  // namespace stba

#endif  // STBA_ROBUST_JACOBIANS_HPP_
