#include <doctest.h>

#include "caplan/projection.hpp"

using namespace caplan;

namespace {

Surface ground(double cx, double cy, double hx, double hy, const std::string& id = "ground") {
  Surface s;
  s.id = id;
  s.polygon = {Vec3(cx - hx, cy - hy, 0), Vec3(cx + hx, cy - hy, 0), Vec3(cx + hx, cy + hy, 0),
               Vec3(cx - hx, cy + hy, 0)};
  s.normal = Vec3::UnitZ();
  s.foot_allowed = true;
  return s;
}

Surface wall_at_y(double y, double x0, double x1, double z0, double z1,
                  const std::string& id = "wall") {
  // wall plane y = const, normal pointing toward -y (into the room)
  Surface s;
  s.id = id;
  s.polygon = {Vec3(x0, y, z0), Vec3(x1, y, z0), Vec3(x1, y, z1), Vec3(x0, y, z1)};
  s.normal = Vec3(0, -1, 0);
  s.kind = SurfaceKind::wall;
  s.palm_allowed = true;
  s.foot_allowed = false;
  return s;
}

ContactPose left_foot_at(double x, double y, double yaw = 0.0) {
  ContactPose c;
  c.end_effector = EndEffector::LeftFoot;
  c.pose.position = Vec3(x, y, 0.0);
  c.pose.rpy = Vec3(0.0, 0.0, yaw);
  c.surface = "ground";
  return c;
}

}  // namespace

TEST_CASE("flat ground projection preserves the lattice") {
  std::vector<Surface> env = {ground(0, 0, 50, 50)};
  const FootLattice lat;
  const auto poses = project_foot_transitions(left_foot_at(0, 0), EndEffector::RightFoot,
                                              std::span<const Surface>(env), lat);
  CHECK(poses.size() == lat.size());
  for (const ContactPose& p : poses) {
    CHECK(p.pose.rpy.x() == doctest::Approx(0.0));
    CHECK(p.pose.rpy.y() == doctest::Approx(0.0));
    CHECK(p.pose.position.y() < 0.0);  // right foot lands on the -y side
    CHECK(p.end_effector == EndEffector::RightFoot);
  }
}

TEST_CASE("lattice entries over a gap are dropped") {
  // two strips with a gap over x in [0.18, 0.32]
  std::vector<Surface> env = {ground(-0.5 + 0.18 / 2 - 0.25, 0, 0.34, 1.0, "a"),
                              ground(0.32 + 0.5, 0, 0.5, 1.0, "b")};
  // explicit strips: x in [-0.84, -0.16]... build directly instead
  env.clear();
  {
    Surface s;
    s.id = "a";
    s.polygon = {Vec3(-1.0, -1.0, 0), Vec3(0.18, -1.0, 0), Vec3(0.18, 1.0, 0),
                 Vec3(-1.0, 1.0, 0)};
    s.normal = Vec3::UnitZ();
    env.push_back(s);
    Surface b;
    b.id = "b";
    b.polygon = {Vec3(0.32, -1.0, 0), Vec3(1.5, -1.0, 0), Vec3(1.5, 1.0, 0), Vec3(0.32, 1.0, 0)};
    b.normal = Vec3::UnitZ();
    env.push_back(b);
  }
  const FootLattice lat;
  const auto poses = project_foot_transitions(left_foot_at(0, 0), EndEffector::RightFoot,
                                              std::span<const Surface>(env), lat);
  // x = 0.2 and 0.3 entries fall into the gap; x in {-0.1, 0, 0.1} survive
  CHECK(poses.size() == 3 * lat.dy.size() * lat.dyaw.size());
  for (const ContactPose& p : poses) CHECK(p.pose.position.x() < 0.19);
}

TEST_CASE("projection onto tilted plates aligns with the surface normal") {
  Surface plate;
  plate.id = "plate";
  const double tilt = 20.0 * M_PI / 180.0;
  const Mat3 R = rpy_to_matrix(Vec3(0.0, tilt, 0.0));
  plate.polygon = {R * Vec3(-1, -1, 0), R * Vec3(1, -1, 0), R * Vec3(1, 1, 0), R * Vec3(-1, 1, 0)};
  plate.normal = R.col(2);
  std::vector<Surface> env = {plate};

  ContactPose standing = left_foot_at(0, 0);
  standing.surface = "plate";
  const auto poses = project_foot_transitions(standing, EndEffector::RightFoot,
                                              std::span<const Surface>(env), FootLattice());
  REQUIRE(!poses.empty());
  for (const ContactPose& p : poses) {
    const Vec3 z = p.pose.rotation().col(2);
    CHECK(std::acos(std::clamp(z.dot(plate.normal), -1.0, 1.0)) < 1e-6);
    CHECK(plate.contains(p.pose.position, 1e-6));
  }
}

TEST_CASE("projection is idempotent for on-surface contacts") {
  std::vector<Surface> env = {ground(0, 0, 5, 5)};
  const auto poses = project_foot_transitions(left_foot_at(0.3, 0.2, 0.4),
                                              EndEffector::RightFoot,
                                              std::span<const Surface>(env), FootLattice());
  REQUIRE(!poses.empty());
  for (size_t i = 0; i < std::min<size_t>(5, poses.size()); ++i) {
    auto re = project_contact(poses[i].end_effector, poses[i].pose,
                              std::span<const Surface>(env), true);
    REQUIRE(re.has_value());
    CHECK(re->pose.approx_equal(poses[i].pose, 1e-9));
  }
}

TEST_CASE("transition sets are equivariant under yaw plus translation") {
  std::vector<Surface> env = {ground(0, 0, 50, 50)};
  const ContactPose standing = left_foot_at(0.1, -0.2, 0.3);
  const auto base = project_foot_transitions(standing, EndEffector::RightFoot,
                                             std::span<const Surface>(env), FootLattice());

  const double yaw = 0.77;
  const Vec3 shift(1.3, -2.1, 0.0);
  const Mat3 Ry = rpy_to_matrix(Vec3(0, 0, yaw));
  ContactPose moved = standing;
  moved.pose.position = Ry * standing.pose.position + shift;
  moved.pose.rpy.z() = wrap_angle(standing.pose.rpy.z() + yaw);
  const auto transformed = project_foot_transitions(moved, EndEffector::RightFoot,
                                                    std::span<const Surface>(env), FootLattice());
  REQUIRE(base.size() == transformed.size());
  for (size_t i = 0; i < base.size(); ++i) {
    const Vec3 expect_pos = Ry * base[i].pose.position + shift;
    CHECK((transformed[i].pose.position - expect_pos).norm() < 1e-9);
    CHECK(std::abs(wrap_angle(transformed[i].pose.rpy.z() -
                              base[i].pose.rpy.z() - yaw)) < 1e-9);
  }
}

TEST_CASE("mirror symmetry maps left transitions to right transitions") {
  std::vector<Surface> env = {ground(0.4, 0.2, 3, 3)};
  const ContactPose left = left_foot_at(0.1, 0.25, 0.2);
  const auto left_set = project_foot_transitions(left, EndEffector::RightFoot,
                                                 std::span<const Surface>(env), FootLattice());
  std::vector<Surface> env_m = env;
  for (Surface& s : env_m) {
    for (Vec3& v : s.polygon) v.y() = -v.y();
    std::reverse(s.polygon.begin(), s.polygon.end());  // keep CCW winding
    s.normal = Vec3(s.normal.x(), -s.normal.y(), s.normal.z());
  }
  const ContactPose right = left.mirrored_xz();
  const auto right_set = project_foot_transitions(right, EndEffector::LeftFoot,
                                                  std::span<const Surface>(env_m), FootLattice());
  REQUIRE(left_set.size() == right_set.size());
  for (size_t i = 0; i < left_set.size(); ++i) {
    const ContactPose expect = left_set[i].mirrored_xz();
    CHECK((right_set[i].pose.position - expect.pose.position).norm() < 1e-12);
    CHECK((right_set[i].pose.rotation() - expect.pose.rotation()).norm() < 1e-12);
  }
}

TEST_CASE("capture candidates: flat ground only yields foot candidates") {
  std::vector<Surface> env = {ground(0, 0, 50, 50)};
  const auto cands = project_capture_contacts(left_foot_at(0, 0),
                                              std::span<const Surface>(env));
  CHECK(!cands.empty());
  for (const CaptureCandidate& c : cands) CHECK(c.type == CaptureMotion::step_other_foot);
}

TEST_CASE("capture candidates: wall on the standing side yields same-side palms") {
  std::vector<Surface> env = {ground(0, 0, 50, 50), wall_at_y(0.5, -2.0, 2.0, 0.0, 2.0)};
  const auto cands = project_capture_contacts(left_foot_at(0, 0),
                                              std::span<const Surface>(env));
  int same_side = 0;
  for (const CaptureCandidate& c : cands) {
    if (c.type == CaptureMotion::same_side_palm) {
      ++same_side;
      CHECK(c.pose.end_effector == EndEffector::LeftPalm);
      const Vec3 z = c.pose.pose.rotation().col(2);
      CHECK((z - Vec3(0, -1, 0)).norm() < 1e-9);
    }
    CHECK(c.type != CaptureMotion::opposite_side_palm);  // wall out of right-arm reach
  }
  CHECK(same_side > 0);
}

TEST_CASE("capture candidates: wall beyond reach yields no palms") {
  std::vector<Surface> env = {ground(0, 0, 50, 50), wall_at_y(1.6, -2.0, 2.0, 0.0, 2.0)};
  const auto cands = project_capture_contacts(left_foot_at(0, 0),
                                              std::span<const Surface>(env));
  for (const CaptureCandidate& c : cands) CHECK(c.type == CaptureMotion::step_other_foot);
}
