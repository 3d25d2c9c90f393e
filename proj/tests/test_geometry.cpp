#include <doctest.h>

#include <random>

#include "caplan/geometry.hpp"

using namespace caplan;

TEST_CASE("wrap_angle maps into [-pi, pi)") {
  CHECK(wrap_angle(0.0) == 0.0);
  CHECK(wrap_angle(M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(-M_PI));
  CHECK(wrap_angle(3.0 * M_PI / 2.0) == doctest::Approx(-M_PI / 2.0));
  for (double a = -20.0; a < 20.0; a += 0.173) {
    const double w = wrap_angle(a);
    CHECK(w >= -M_PI);
    CHECK(w < M_PI);
    CHECK(std::abs(std::sin(w - a)) < 1e-12);
  }
}

TEST_CASE("canonicalize_angles identity and periodicity") {
  Pose6 p;
  Pose6 c = canonicalize_angles(p);
  CHECK(c.rpy == Vec3::Zero());

  p.rpy = Vec3(0.0, 0.0, 3.0 * M_PI / 2.0);
  c = canonicalize_angles(p);
  CHECK(c.rpy.z() == doctest::Approx(-M_PI / 2.0));
  CHECK((c.rotation() - p.rotation()).norm() < 1e-12);
}

TEST_CASE("canonicalize_angles rejects non-finite input") {
  Pose6 p;
  p.rpy.x() = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(canonicalize_angles(p), InvalidPoseError);
}

TEST_CASE("rpy round-trip reproduces the rotation matrix") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 500; ++i) {
    const Vec3 rpy(u(rng), u(rng), u(rng));
    const Mat3 R = rpy_to_matrix(rpy);
    const Vec3 back = matrix_to_rpy(R);
    // independent comparison: rebuild the matrix from the recovered angles
    CHECK((rpy_to_matrix(back) - R).norm() < 1e-9);
    for (int j = 0; j < 3; ++j) {
      CHECK(back[j] >= -M_PI);
      CHECK(back[j] < M_PI);
    }
  }
}

TEST_CASE("mirror is an involution and flips y") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    Pose6 p;
    p.position = Vec3(u(rng), u(rng), u(rng));
    p.rpy = Vec3(u(rng) * 0.4, u(rng) * 0.4, u(rng));
    const Pose6 m = p.mirrored_xz();
    CHECK(m.position.y() == doctest::Approx(-p.position.y()));
    const Pose6 back = m.mirrored_xz();
    CHECK(back.approx_equal(p, 1e-12));
    // mirrored rotation equals S R S
    const Mat3 S = Vec3(1, -1, 1).asDiagonal();
    CHECK((m.rotation() - S * p.rotation() * S).norm() < 1e-12);
  }
}

TEST_CASE("orientation_on_surface keeps heading and normal") {
  const Vec3 n = Vec3(0.2, -0.1, 0.97).normalized();
  const Mat3 R = orientation_on_surface(n, 0.7);
  CHECK((R.col(2) - n).norm() < 1e-12);
  CHECK(std::atan2(R(1, 0), R(0, 0)) == doctest::Approx(0.7));
  CHECK((R * R.transpose() - Mat3::Identity()).norm() < 1e-12);
  CHECK(R.determinant() == doctest::Approx(1.0));
}
