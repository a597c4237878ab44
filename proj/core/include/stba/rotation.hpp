#ifndef STBA_ROTATION_HPP_
#define STBA_ROTATION_HPP_

#include "stba/common.hpp"

namespace stba {

/// Below this angle the Rodrigues terms switch to their Taylor expansions.
inline constexpr double kSmallAngle = 1e-8;

Mat3 skew(const Vec3& v);

/// Rodrigues' formula R = exp([w]x).
Mat3 angle_axis_to_rotation(const Vec3& angle_axis);

/// Left Jacobian of SO(3): exp(w + d) ~= exp([J_l(w) d]x) exp(w) to first order.
/// Hence d(R(w) X)/dw = -[R(w) X]x J_l(w).
Mat3 so3_left_jacobian(const Vec3& angle_axis);

/// Maps an angle-axis vector to the equivalent one with norm <= pi.
Vec3 normalize_angle_axis(const Vec3& angle_axis);

}  // namespace stba

#endif  // STBA_ROTATION_HPP_
