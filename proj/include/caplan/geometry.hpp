#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace caplan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct InvalidPoseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into [-pi, pi).
double wrap_angle(double a);

/// Rotation matrix for Tait-Bryan angles, convention X-Y-Z:
/// R = Rz(yaw) * Ry(pitch) * Rx(roll).
Mat3 rpy_to_matrix(const Vec3& rpy);

/// Inverse of rpy_to_matrix. Angles come out in [-pi, pi) with
/// pitch in [-pi/2, pi/2]. Near gimbal lock roll is set to zero.
Vec3 matrix_to_rpy(const Mat3& R);

/// SE(3) pose stored as position + Tait-Bryan X-Y-Z angles.
struct Pose6 {
  Vec3 position{Vec3::Zero()};
  Vec3 rpy{Vec3::Zero()};

  Mat3 rotation() const { return rpy_to_matrix(rpy); }

  Vec3 transform(const Vec3& local) const { return position + rotation() * local; }
  Vec3 rotate(const Vec3& local) const { return rotation() * local; }

  /// this * local, composing as homogeneous transforms.
  Pose6 compose(const Pose6& local) const;

  /// Heading of the pose's X axis projected on the world XY plane.
  double heading() const;

  /// Reflection across the world XZ plane (y -> -y). Exact on the
  /// angle representation: (roll, pitch, yaw) -> (-roll, pitch, -yaw).
  Pose6 mirrored_xz() const;

  static Pose6 from_rotation(const Vec3& position, const Mat3& R);

  bool approx_equal(const Pose6& other, double tol) const;
};

/// Returns an equivalent pose with every angle in [-pi, pi).
/// Throws InvalidPoseError on non-finite input.
Pose6 canonicalize_angles(const Pose6& pose);

/// Orientation whose Z axis is `normal` and whose X axis points along
/// world heading `heading` projected onto the surface plane.
Mat3 orientation_on_surface(const Vec3& normal, double heading);

}  // namespace caplan
