#include <doctest.h>

#include <random>

#include "caplan/centroidal.hpp"
#include "support/wrench_check.hpp"

using namespace caplan;

namespace {

RobotParams robot_params() { return RobotParams{}; }

CentroidalOracle make_oracle(bool keep_trace = false) {
  OracleParams op;
  op.keep_trace = keep_trace;
  return CentroidalOracle(robot_params(), op);
}

Pose6 flat_foot(double x, double y, double yaw = 0.0) {
  Pose6 p;
  p.position = Vec3(x, y, 0.0);
  p.rpy = Vec3(0.0, 0.0, yaw);
  return p;
}

CaptureQuery zero_step_query(const Vec3& r0, const Vec3& l0) {
  CaptureQuery q;
  q.motion_type = 0;
  q.standing_foot = ContactSpec::foot(flat_foot(0.0, 0.0), robot_params(), 0.5);
  q.standing_is_left = true;
  q.initial.r = r0;
  q.initial.l = l0;
  q.initial.k = Vec3::Zero();
  return q;
}

/// Max tangential force along d over the pyramid, by vertex enumeration.
double max_force_along(const ContactSpec& c, const Vec3& d) {
  const Mat3 R = c.pose.rotation();
  const double mu = c.friction / std::sqrt(2.0);
  double best = 0.0;
  for (double sx : {1.0, -1.0})
    for (double sy : {1.0, -1.0})
      best = std::max(best, (c.f_max * (R * Vec3(sx * mu, sy * mu, 1.0))).dot(d));
  return best;
}

}  // namespace

TEST_CASE("static zero-step query is capturable") {
  const auto oracle = make_oracle(true);
  const CaptureResult res = oracle.solve_capture(zero_step_query(Vec3(0, 0, 0.85), Vec3::Zero()));
  REQUIRE(res.zero_step.has_value());
  CHECK(*res.zero_step == DurationVerdict::feasible);
  CHECK(res.capturable);
  REQUIRE(res.trajectory.has_value());
  CHECK(res.trajectory->knots.size() == 11);
  const CentroidalState& last = res.trajectory->knots.back();
  CHECK(last.l.norm() <= 1e-3 * robot_params().mass);
  CHECK(last.k.norm() <= 1e-3 * robot_params().mass);
  // the static solution carries the full weight on the foot
  REQUIRE(res.trace != nullptr);
  const Vec3 f0 = res.trace->contacts[0].f[0];
  CHECK(f0.z() == doctest::Approx(robot_params().mass * robot_params().gravity).epsilon(1e-3));
}

TEST_CASE("feasible results satisfy the transcription constraints") {
  const auto oracle = make_oracle(true);
  const CaptureResult res =
      oracle.solve_capture(zero_step_query(Vec3(0.05, -0.03, 0.8), Vec3(8.0, 5.0, 0.0)));
  if (res.capturable) {
    REQUIRE(res.trace != nullptr);
    CHECK(max_constraint_violation(*res.trace, robot_params().mass, robot_params().gravity) <=
          1e-6);
  }
}

TEST_CASE("impulse beyond the pyramid capacity is not capturable") {
  const auto oracle = make_oracle();
  const ContactSpec foot = ContactSpec::foot(flat_foot(0.0, 0.0), robot_params(), 0.5);
  const double capacity = max_force_along(foot, Vec3::UnitX()) * 1.0;  // horizon 1 s
  const Vec3 l0(1.5 * capacity, 0.0, 0.0);
  const CaptureResult res = oracle.solve_capture(zero_step_query(Vec3(0, 0, 0.85), l0));
  CHECK_FALSE(res.capturable);
}

TEST_CASE("capture verdicts are mirror symmetric") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto oracle = make_oracle();
  for (int i = 0; i < 6; ++i) {
    CaptureQuery q = zero_step_query(
        Vec3(0.2 * u(rng), 0.2 * u(rng), 0.8 + 0.1 * u(rng)),
        Vec3(25.0 * u(rng), 25.0 * u(rng), 8.0 * u(rng)));
    q.standing_foot.pose.rpy = Vec3(0.3 * u(rng), 0.3 * u(rng), u(rng));
    const CaptureResult a = oracle.solve_capture(q);
    const CaptureResult b = oracle.solve_capture(q.mirrored_xz());
    CHECK(a.capturable == b.capturable);
  }
}

TEST_CASE("one-step capture with the other foot extends capturability") {
  const auto oracle = make_oracle();
  // lateral momentum too large for zero-step but manageable with a step
  const Vec3 r0(0.0, 0.0, 0.85);
  const Vec3 l0(0.0, 30.0, 0.0);
  const CaptureResult zs = oracle.solve_capture(zero_step_query(r0, l0));
  CHECK_FALSE(zs.capturable);

  CaptureQuery q;
  q.motion_type = 1;
  q.standing_foot = ContactSpec::foot(flat_foot(0.0, 0.0), robot_params(), 0.5);
  q.standing_is_left = false;  // standing on the right foot, stepping left
  q.capture_contact = ContactSpec::foot(flat_foot(0.0, 0.35), robot_params(), 0.5);
  q.initial.r = r0;
  q.initial.l = l0;
  q.initial.k = Vec3::Zero();
  const CaptureResult os = oracle.solve_capture(q);
  CHECK(os.per_duration.size() == 3);
  CHECK(os.capturable);
}

TEST_CASE("zero-length transition from rest is feasible and nearly static") {
  const auto oracle = make_oracle();
  TransitionQuery q;
  q.standing = ContactSpec::foot(flat_foot(0.0, 0.1), robot_params(), 0.5);
  q.new_foot = ContactSpec::foot(flat_foot(0.0, -0.1), robot_params(), 0.5);
  q.old_mean_foot_xy = Vec2(0.0, 0.0);
  q.initial.r = Vec3(0.0, 0.0, 0.85);
  q.initial.l = Vec3::Zero();
  q.initial.k = Vec3::Zero();
  const TransitionResult res = oracle.solve_transition(q);
  REQUIRE(res.feasible);
  CHECK(res.state_after.l.norm() <= 1e-3 * robot_params().mass);
  CHECK(res.trajectory.knots.size() == 11);
}

TEST_CASE("forward step pins the terminal CoM to the new mean foot") {
  const auto oracle = make_oracle();
  TransitionQuery q;
  q.standing = ContactSpec::foot(flat_foot(0.0, 0.1), robot_params(), 0.5);
  q.new_foot = ContactSpec::foot(flat_foot(0.3, -0.1), robot_params(), 0.5);
  q.old_mean_foot_xy = Vec2(-0.05, 0.0);
  q.initial.r = Vec3(-0.05, 0.0, 0.85);
  q.initial.l = Vec3(3.0, 0.0, 0.0);
  q.initial.k = Vec3::Zero();
  const TransitionResult res = oracle.solve_transition(q);
  REQUIRE(res.feasible);
  const Vec2 mean_xy(0.15, 0.0);
  CHECK((res.state_after.r.head<2>() - mean_xy).norm() <= 1e-3);
  // forward momentum at the end of the cycle
  CHECK(res.state_after.l.x() > 0.0);
}

TEST_CASE("step onto a steeply tilted plate is infeasible") {
  const auto oracle = make_oracle();
  const double tilt = 60.0 * M_PI / 180.0;
  TransitionQuery q;
  q.standing = ContactSpec::foot(flat_foot(0.0, 0.1), robot_params(), 0.5);
  Pose6 target;
  target.position = Vec3(0.3, -0.1, 0.0);
  target.rpy = Vec3(0.0, tilt, 0.0);
  q.new_foot = ContactSpec::foot(target, robot_params(), 0.5);
  q.old_mean_foot_xy = Vec2(0.0, 0.0);
  q.initial.r = Vec3(0.0, 0.0, 0.85);
  q.initial.l = Vec3::Zero();
  q.initial.k = Vec3::Zero();
  const TransitionResult res = oracle.solve_transition(q);
  CHECK_FALSE(res.feasible);

  // independent check 1: gravity in the tilted foot frame needs a
  // tangential/normal force ratio of tan(60 deg), beyond any friction
  // pyramid with mu = 0.5, so the plate alone can never hold the robot
  CHECK(std::tan(tilt) > 0.5 * std::sqrt(2.0));
  CHECK_FALSE(caplan_test::static_balance_feasible(
      {q.new_foot}, Vec3(0.3, -0.1, 0.85), robot_params().mass, robot_params().gravity));

  // independent check 2: with the terminal CoM pinned between the feet,
  // no CoM height satisfies both reachability boxes. In the tilted foot
  // frame x' = cos(t) (r_x - p_x) - sin(t) r_z, which over the flat
  // foot's admissible heights stays far below the -0.35 box edge.
  const RobotParams rp = robot_params();
  const double rx = 0.15;  // pinned terminal CoM x
  for (double rz = rp.com_box_z_min; rz <= rp.com_box_z_max; rz += 0.01) {
    const double xprime = std::cos(tilt) * (rx - 0.3) - std::sin(tilt) * rz;
    CHECK(xprime < -rp.com_box_xy);
  }
}

TEST_CASE("static balance check agrees with an upright stance") {
  const std::vector<ContactSpec> contacts = {
      ContactSpec::foot(flat_foot(0.0, 0.1), robot_params(), 0.5),
      ContactSpec::foot(flat_foot(0.0, -0.1), robot_params(), 0.5)};
  CHECK(caplan_test::static_balance_feasible(contacts, Vec3(0.0, 0.0, 0.85),
                                             robot_params().mass, robot_params().gravity));
  // CoM far outside the support region cannot be balanced statically
  CHECK_FALSE(caplan_test::static_balance_feasible(contacts, Vec3(1.0, 0.0, 0.85),
                                                   robot_params().mass,
                                                   robot_params().gravity));
}

TEST_CASE("zero-step monotonicity along a fixed direction (spot check)") {
  const auto oracle = make_oracle();
  const Vec3 dir = Vec3(1.0, 0.4, 0.0).normalized();
  bool was_uncapturable = false;
  for (double mag : {5.0, 15.0, 30.0, 60.0, 120.0, 240.0}) {
    const CaptureResult res =
        oracle.solve_capture(zero_step_query(Vec3(0, 0, 0.85), mag * dir));
    if (was_uncapturable) CHECK_FALSE(res.capturable);
    if (!res.capturable) was_uncapturable = true;
  }
}
