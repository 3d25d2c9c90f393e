#include "caplan/geometry.hpp"

#include <cmath>

namespace caplan {

double wrap_angle(double a) {
  double w = a - 2.0 * M_PI * std::floor((a + M_PI) / (2.0 * M_PI));
  // floor rounding can land exactly on pi for inputs just below a wrap point
  if (w >= M_PI) w -= 2.0 * M_PI;
  if (w < -M_PI) w += 2.0 * M_PI;
  return w;
}

Mat3 rpy_to_matrix(const Vec3& rpy) {
  const double cr = std::cos(rpy.x()), sr = std::sin(rpy.x());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  Mat3 R;
  R << cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
       sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
       -sp,     cp * sr,                cp * cr;
  return R;
}

Vec3 matrix_to_rpy(const Mat3& R) {
  Vec3 rpy;
  const double sp = -R(2, 0);
  if (std::abs(sp) > 1.0 - 1e-12) {
    // gimbal lock: only roll+yaw sum is observable; put it all in yaw
    rpy.y() = std::copysign(M_PI / 2.0, sp);
    rpy.x() = 0.0;
    rpy.z() = std::atan2(-R(0, 1), R(1, 1));
  } else {
    rpy.y() = std::asin(sp);
    rpy.x() = std::atan2(R(2, 1), R(2, 2));
    rpy.z() = std::atan2(R(1, 0), R(0, 0));
  }
  rpy.x() = wrap_angle(rpy.x());
  rpy.y() = wrap_angle(rpy.y());
  rpy.z() = wrap_angle(rpy.z());
  return rpy;
}

Pose6 Pose6::compose(const Pose6& local) const {
  Pose6 out;
  const Mat3 R = rotation();
  out.position = position + R * local.position;
  out.rpy = matrix_to_rpy(R * local.rotation());
  return out;
}

double Pose6::heading() const {
  const Mat3 R = rotation();
  return std::atan2(R(1, 0), R(0, 0));
}

Pose6 Pose6::mirrored_xz() const {
  Pose6 out;
  out.position = Vec3(position.x(), -position.y(), position.z());
  out.rpy = Vec3(wrap_angle(-rpy.x()), rpy.y(), wrap_angle(-rpy.z()));
  return out;
}

Pose6 Pose6::from_rotation(const Vec3& position, const Mat3& R) {
  Pose6 out;
  out.position = position;
  out.rpy = matrix_to_rpy(R);
  return out;
}

bool Pose6::approx_equal(const Pose6& other, double tol) const {
  if ((position - other.position).norm() > tol) return false;
  return (rotation() - other.rotation()).norm() <= tol;
}

Pose6 canonicalize_angles(const Pose6& pose) {
  if (!pose.position.allFinite() || !pose.rpy.allFinite()) {
    throw InvalidPoseError("canonicalize_angles: non-finite pose");
  }
  Pose6 out = pose;
  for (int i = 0; i < 3; ++i) out.rpy[i] = wrap_angle(out.rpy[i]);
  return out;
}

Mat3 orientation_on_surface(const Vec3& normal, double heading) {
  const Vec3 z = normal.normalized();
  Mat3 R;
  if (std::abs(z.z()) > 1e-6) {
    // unit x orthogonal to z whose XY projection points exactly along
    // the heading: x = (cos h, sin h, -k)/sqrt(1+k^2)
    const double ch = std::cos(heading), sh = std::sin(heading);
    const double k = (ch * z.x() + sh * z.y()) / z.z();
    const Vec3 x = Vec3(ch, sh, -k) / std::sqrt(1.0 + k * k);
    const Vec3 y = z.cross(x);
    R.col(0) = x;
    R.col(1) = y;
    R.col(2) = z;
  } else {
    // near-vertical surface: project the heading direction onto the plane
    Vec3 x_des(std::cos(heading), std::sin(heading), 0.0);
    if (std::abs(z.dot(x_des)) > 1.0 - 1e-9) x_des = Vec3::UnitZ();
    Vec3 y = z.cross(x_des).normalized();
    R.col(0) = y.cross(z);
    R.col(1) = y;
    R.col(2) = z;
  }
  return R;
}

}  // namespace caplan
