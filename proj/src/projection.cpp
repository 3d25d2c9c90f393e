#include "caplan/projection.hpp"

#include <cmath>

namespace caplan {

double FootLattice::max_mean_foot_travel() const {
  double lo = dx.front(), hi = dx.front();
  for (double x : dx) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return 0.5 * (hi - lo);
}

namespace {

Pose6 palm_pose_on_wall(const Vec3& point, const Vec3& normal) {
  // palm Z along the wall normal, X as close to world-up as possible
  const Vec3 z = normal.normalized();
  Vec3 x_des = Vec3::UnitZ();
  if (std::abs(z.dot(x_des)) > 1.0 - 1e-9) x_des = Vec3::UnitX();
  Vec3 y = z.cross(x_des).normalized();
  const Vec3 x = y.cross(z);
  Mat3 R;
  R.col(0) = x;
  R.col(1) = y;
  R.col(2) = z;
  return Pose6::from_rotation(point, R);
}

}  // namespace

std::optional<ContactPose> project_contact(EndEffector ee, const Pose6& seed,
                                           std::span<const Surface> env, bool feet,
                                           double ray_lift) {
  const Mat3 R = seed.rotation();
  const Vec3 origin = seed.position + ray_lift * R.col(2);
  const Vec3 dir = -R.col(2);
  auto hit = raycast_first(env, origin, dir, [&](const Surface& s) {
    return feet ? s.foot_allowed : s.palm_allowed;
  });
  if (!hit) return std::nullopt;
  ContactPose out;
  out.end_effector = ee;
  out.pose = Pose6::from_rotation(
      hit->point, orientation_on_surface(hit->surface->normal, seed.heading()));
  out.surface = hit->surface->id;
  return out;
}

std::vector<ContactPose> project_foot_transitions(const ContactPose& standing,
                                                  EndEffector moving,
                                                  std::span<const Surface> env,
                                                  const FootLattice& lattice) {
  std::vector<ContactPose> out;
  const double side = (moving == EndEffector::RightFoot) ? -1.0 : 1.0;
  const Mat3 R = standing.pose.rotation();
  const double base_heading = standing.pose.heading();
  for (double dx : lattice.dx) {
    for (double dy : lattice.dy) {
      for (double dyaw : lattice.dyaw) {
        const Vec3 origin =
            standing.pose.position + R * Vec3(dx, side * dy, lattice.ray_lift);
        const Vec3 dir = -R.col(2);
        auto hit =
            raycast_first(env, origin, dir, [](const Surface& s) { return s.foot_allowed; });
        if (!hit) continue;
        ContactPose c;
        c.end_effector = moving;
        c.pose = Pose6::from_rotation(
            hit->point,
            orientation_on_surface(hit->surface->normal,
                                   wrap_angle(base_heading + side * dyaw)));
        c.surface = hit->surface->id;
        out.push_back(std::move(c));
      }
    }
  }
  return out;
}

std::vector<CaptureCandidate> project_capture_contacts(const ContactPose& standing,
                                                       std::span<const Surface> env,
                                                       const FootLattice& foot_lattice,
                                                       const PalmLattice& palm_lattice) {
  std::vector<CaptureCandidate> out;

  const EndEffector swing = other_foot(standing.end_effector);
  for (ContactPose& c : project_foot_transitions(standing, swing, env, foot_lattice)) {
    out.push_back({CaptureMotion::step_other_foot, std::move(c)});
  }

  const bool standing_left = standing.end_effector == EndEffector::LeftFoot;
  const double heading = standing.pose.heading();
  const Mat3 Ryaw = rpy_to_matrix(Vec3(0.0, 0.0, heading));
  const Vec3 foot = standing.pose.position;

  struct Dir {
    Vec3 local;
    std::vector<EndEffector> palms;
  };
  // lateral rays go to the arm on that side; forward rays may suit either arm
  std::vector<Dir> dirs = {
      {Vec3::UnitY(), {EndEffector::LeftPalm}},
      {-Vec3::UnitY(), {EndEffector::RightPalm}},
      {Vec3::UnitX(), {EndEffector::LeftPalm, EndEffector::RightPalm}},
  };

  auto shoulder_of = [&](EndEffector palm) {
    const double lat = (palm == EndEffector::LeftPalm) ? palm_lattice.shoulder_lateral
                                                       : -palm_lattice.shoulder_lateral;
    return Vec3(foot + Ryaw * Vec3(0.0, lat, 0.0) +
                Vec3(0.0, 0.0, palm_lattice.shoulder_height));
  };

  auto push_unique = [&](CaptureMotion type, const ContactPose& pose) {
    for (const CaptureCandidate& c : out) {
      if (c.type == type && c.pose.pose.approx_equal(pose.pose, 1e-6)) return;
    }
    out.push_back({type, pose});
  };

  for (const Dir& d : dirs) {
    const Vec3 dir = (Ryaw * d.local).normalized();
    for (double h : palm_lattice.heights) {
      for (double off : palm_lattice.offsets) {
        const Vec3 origin = foot + off * dir + Vec3(0.0, 0.0, h);
        auto hit =
            raycast_first(env, origin, dir, [](const Surface& s) { return s.palm_allowed; });
        if (!hit) continue;
        if ((hit->point - foot).norm() > palm_lattice.max_range) continue;
        for (EndEffector palm : d.palms) {
          if ((hit->point - shoulder_of(palm)).norm() > palm_lattice.reach_radius) continue;
          const bool same_side = (palm == EndEffector::LeftPalm) == standing_left;
          ContactPose c;
          c.end_effector = palm;
          c.pose = palm_pose_on_wall(hit->point, hit->surface->normal);
          c.surface = hit->surface->id;
          push_unique(same_side ? CaptureMotion::same_side_palm
                                : CaptureMotion::opposite_side_palm,
                      c);
        }
      }
    }
  }
  return out;
}

}  // namespace caplan
