#ifndef STBA_COMMON_HPP_
#define STBA_COMMON_HPP_

#include <cstddef>
#include <limits>

#include <Eigen/Core>

namespace stba {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat23 = Eigen::Matrix<double, 2, 3>;
using Mat26 = Eigen::Matrix<double, 2, 6>;
using Mat63 = Eigen::Matrix<double, 6, 3>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr int kCameraDim = 6;
inline constexpr int kPointDim = 3;

/// Sentinel for "no cluster size cap" / "no robust kernel".
inline constexpr std::size_t kUnbounded = std::numeric_limits<std::size_t>::max();
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

}  // namespace stba

#endif  // STBA_COMMON_HPP_
