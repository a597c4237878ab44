#include "stba/robust_jacobians.hpp"

#include <cmath>

#include "stba/errors.hpp"
#include "stba/parallel.hpp"
#include "stba/rotation.hpp"

namespace stba {

RhoEvaluation huber_rho(double squared_norm, const RobustKernel& kernel) {
  if (!kernel.enabled() || squared_norm <= kernel.delta * kernel.delta) {
    return {squared_norm, 1.0};
  }
  const double norm = std::sqrt(squared_norm);
  return {2.0 * kernel.delta * norm - kernel.delta * kernel.delta, kernel.delta / norm};
}

ResidualJacobian residual_jacobian(const Camera& camera, const Point3D& point,
                                   const Vec2& pixel) {
  const Mat3 rotation = angle_axis_to_rotation(camera.rotation);
  const Vec3 rotated = rotation * point.position;
  const Vec3 p = rotated + camera.translation;
  if (std::abs(p.z()) < kMinDepth) {
    throw DegenerateProjection("point lies on the camera plane");
  }
  const double inv_z = 1.0 / p.z();
  const Vec2 xy(-p.x() * inv_z, -p.y() * inv_z);
  const double n2 = xy.squaredNorm();
  const double k1 = camera.distortion[0];
  const double k2 = camera.distortion[1];
  const double radial = 1.0 + k1 * n2 + k2 * n2 * n2;

  ResidualJacobian out;
  out.residual = camera.focal * radial * xy - pixel;

  // d pixel / d xy = f (r I + xy (dr/dxy)^T), dr/dxy = 2 (k1 + 2 k2 |xy|^2) xy.
  const double dr = 2.0 * (k1 + 2.0 * k2 * n2);
  const Eigen::Matrix2d d_xy =
      camera.focal * (radial * Eigen::Matrix2d::Identity() + dr * xy * xy.transpose());
  Mat23 d_proj;
  d_proj << -inv_z, 0.0, -xy.x() * inv_z,
            0.0, -inv_z, -xy.y() * inv_z;
  const Mat23 d_p = d_xy * d_proj;

  out.d_camera.leftCols<3>() = -d_p * skew(rotated) * so3_left_jacobian(camera.rotation);
  out.d_camera.rightCols<3>() = d_p;
  out.d_point = d_p * rotation;
  return out;
}

JacobianBlocks weighted_blocks(const BundleProblem& problem, const VecX& x,
                               const RobustKernel& kernel, WorkerPool* pool) {
  const auto& observations = problem.observations();
  const std::size_t q = observations.size();
  JacobianBlocks blocks;
  blocks.camera_blocks.assign(q, Mat26::Zero());
  blocks.point_blocks.assign(q, Mat23::Zero());
  blocks.residuals.assign(q, Vec2::Zero());
  std::vector<char> degenerate(q, 0);

  parallel_for(pool, q, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const Observation& o = observations[k];
      ResidualJacobian rj;
      try {
        rj = residual_jacobian(camera_from_parameters(problem, x, o.camera),
                               point_from_parameters(problem, x, o.point), o.pixel);
      } catch (const DegenerateProjection&) {
        degenerate[k] = 1;
        continue;
      }
      if (kernel.enabled()) {
        const double weight = std::sqrt(huber_rho(rj.residual.squaredNorm(), kernel).derivative);
        rj.residual *= weight;
        rj.d_camera *= weight;
        rj.d_point *= weight;
      }
      blocks.camera_blocks[k] = rj.d_camera;
      blocks.point_blocks[k] = rj.d_point;
      blocks.residuals[k] = rj.residual;
    }
  });
  for (char d : degenerate) blocks.degenerate += d;
  return blocks;
}

VecX cost_gradient(const BundleProblem& problem, const JacobianBlocks& blocks) {
  VecX g = VecX::Zero(problem.num_parameters());
  const auto& observations = problem.observations();
  for (std::size_t k = 0; k < observations.size(); ++k) {
    const Observation& o = observations[k];
    g.segment<6>(problem.camera_offset(o.camera)) +=
        2.0 * blocks.camera_blocks[k].transpose() * blocks.residuals[k];
    g.segment<3>(problem.point_offset(o.point)) +=
        2.0 * blocks.point_blocks[k].transpose() * blocks.residuals[k];
  }
  return g;
}

}  // namespace stba
