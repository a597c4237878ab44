#ifndef STBA_TESTS_FIXTURES_HPP_
#define STBA_TESTS_FIXTURES_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stba/bench.hpp"
#include "stba/normal_equations.hpp"
#include "stba/problem.hpp"
#include "stba/robust_jacobians.hpp"
#include "stba/rotation.hpp"

namespace stba::testing {

/// Small ring problem with random distortion and perturbed parameters.
inline BundleProblem toy_problem(int cameras, int points, std::uint64_t seed,
                                 double sigma = 0.05, double density = 1.0) {
  SyntheticSpec spec;
  spec.cameras = cameras;
  spec.points = points;
  spec.density = density;
  spec.view_window_deg = 360.0;
  spec.pixel_noise = 0.5;
  spec.seed = seed;
  const BundleProblem base = generate_synthetic(spec);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> k(-0.05, 0.05);
  std::vector<Camera> cams = base.cameras();
  for (auto& c : cams) c.distortion = Vec2(k(rng), k(rng));
  const BundleProblem distorted(cams, base.points(), base.observations());
  return perturb(distorted, {sigma, sigma, seed + 1});
}

/// Dense 2q x (6m + 3n) Jacobian and 2q residual from the weighted blocks.
struct DenseSystem {
  MatX J;
  VecX f;
};

inline DenseSystem dense_system(const BundleProblem& problem, const JacobianBlocks& blocks) {
  const int q = problem.num_observations();
  DenseSystem d{MatX::Zero(2 * q, problem.num_parameters()), VecX::Zero(2 * q)};
  for (int k = 0; k < q; ++k) {
    const Observation& o = problem.observations()[k];
    d.J.block<2, 6>(2 * k, problem.camera_offset(o.camera)) = blocks.camera_blocks[k];
    d.J.block<2, 3>(2 * k, problem.point_offset(o.point)) = blocks.point_blocks[k];
    d.f.segment<2>(2 * k) = blocks.residuals[k];
  }
  return d;
}

/// Solution of (J^T J + lambda diag(J^T J)) dx = -J^T f.
inline VecX dense_damped_step(const DenseSystem& d, double lambda) {
  MatX h = d.J.transpose() * d.J;
  const VecX diag = h.diagonal();
  h.diagonal() += lambda * diag;
  const VecX g = -d.J.transpose() * d.f;
  return h.ldlt().solve(g);
}

inline double relative_error(const VecX& a, const VecX& reference) {
  return (a - reference).norm() / std::max(reference.norm(), 1e-300);
}

inline double cosine(const VecX& a, const VecX& b) { return a.dot(b) / (a.norm() * b.norm()); }

/// Projection evaluated one scalar at a time, sharing nothing with project().
inline Vec2 scalar_projection(const Camera& c, const Point3D& x) {
  const double rx = c.rotation[0], ry = c.rotation[1], rz = c.rotation[2];
  const double theta = std::sqrt(rx * rx + ry * ry + rz * rz);
  const double X = x.position[0], Y = x.position[1], Z = x.position[2];
  double px, py, pz;
  if (theta > 1e-12) {
    const double kx = rx / theta, ky = ry / theta, kz = rz / theta;
    const double ct = std::cos(theta), st = std::sin(theta);
    const double kdotx = kx * X + ky * Y + kz * Z;
    // Rodrigues: X cos + (k x X) sin + k (k . X)(1 - cos)
    px = X * ct + (ky * Z - kz * Y) * st + kx * kdotx * (1.0 - ct);
    py = Y * ct + (kz * X - kx * Z) * st + ky * kdotx * (1.0 - ct);
    pz = Z * ct + (kx * Y - ky * X) * st + kz * kdotx * (1.0 - ct);
  } else {
    px = X + (ry * Z - rz * Y);
    py = Y + (rz * X - rx * Z);
    pz = Z + (rx * Y - ry * X);
  }
  px += c.translation[0];
  py += c.translation[1];
  pz += c.translation[2];
  const double u = -px / pz;
  const double v = -py / pz;
  const double n2 = u * u + v * v;
  const double r = 1.0 + c.distortion[0] * n2 + c.distortion[1] * n2 * n2;
  return Vec2(c.focal * r * u, c.focal * r * v);
}

}  // namespace stba::testing

#endif  // STBA_TESTS_FIXTURES_HPP_
