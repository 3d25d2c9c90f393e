#pragma once

#include <span>
#include <string>
#include <vector>

#include "caplan/geometry.hpp"
#include "caplan/surface.hpp"

namespace caplan {

enum class EndEffector { LeftFoot = 0, RightFoot = 1, LeftPalm = 2, RightPalm = 3 };

inline bool is_foot(EndEffector e) {
  return e == EndEffector::LeftFoot || e == EndEffector::RightFoot;
}
inline EndEffector other_foot(EndEffector e) {
  return e == EndEffector::LeftFoot ? EndEffector::RightFoot : EndEffector::LeftFoot;
}
/// Left <-> right swap used by the XZ-plane mirror.
EndEffector mirrored_ee(EndEffector e);
std::string to_string(EndEffector e);
EndEffector end_effector_from_string(const std::string& s);

struct ContactPose {
  EndEffector end_effector{EndEffector::LeftFoot};
  Pose6 pose;
  std::string surface;

  ContactPose mirrored_xz() const;

  /// Checks the on-surface and normal-alignment invariants against env.
  void validate(std::span<const Surface> env) const;
};

/// Set of end-effector contacts; at most one per end effector, at least
/// one foot.
struct Stance {
  std::vector<ContactPose> contacts;

  const ContactPose* find(EndEffector e) const;
  bool has(EndEffector e) const { return find(e) != nullptr; }
  int foot_count() const;
  Vec3 mean_foot_position() const;

  Stance mirrored_xz() const;
  Stance with_replaced(const ContactPose& c) const;

  void validate(std::span<const Surface> env) const;
};

}  // namespace caplan
