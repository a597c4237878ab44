#include "stba/rotation.hpp"

#include <cmath>
#include <numbers>

namespace stba {

Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return k;
}

Mat3 angle_axis_to_rotation(const Vec3& angle_axis) {
  const double theta = angle_axis.norm();
  const Mat3 k = skew(angle_axis);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + k + 0.5 * (k * k);
  }
  // (1 - cos t) / t^2 written as 2 sin^2(t/2) / t^2 to avoid cancellation.
  const double half = 0.5 * theta;
  const double s = std::sin(half) / half;
  const double a = std::sin(theta) / theta;
  const double b = 0.5 * s * s;
  return Mat3::Identity() + a * k + b * (k * k);
}

Mat3 so3_left_jacobian(const Vec3& angle_axis) {
  const double theta = angle_axis.norm();
  const Mat3 k = skew(angle_axis);
  if (theta < kSmallAngle) {
    return Mat3::Identity() + 0.5 * k + (1.0 / 6.0) * (k * k);
  }
  const double half = 0.5 * theta;
  const double s = std::sin(half) / half;
  const double a = 0.5 * s * s;
  const double b = (theta - std::sin(theta)) / (theta * theta * theta);
  return Mat3::Identity() + a * k + b * (k * k);
}

Vec3 normalize_angle_axis(const Vec3& angle_axis) {
  constexpr double kPi = std::numbers::pi;
  const double theta = angle_axis.norm();
  if (theta <= kPi) return angle_axis;
  double reduced = std::fmod(theta, 2.0 * kPi);
  if (reduced > kPi) reduced -= 2.0 * kPi;
  return angle_axis * (reduced / theta);
}

}  // namespace stba
