#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "caplan/geometry.hpp"

namespace caplan {

enum class SurfaceKind { ground, wall, obstacle };

std::string to_string(SurfaceKind k);
SurfaceKind surface_kind_from_string(const std::string& s);

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Planar convex contact surface. Vertices are counterclockwise about
/// the outward normal.
struct Surface {
  std::string id;
  std::vector<Vec3> polygon;
  Vec3 normal{Vec3::UnitZ()};
  double friction{0.5};
  SurfaceKind kind{SurfaceKind::ground};
  bool palm_allowed{false};
  bool foot_allowed{true};

  Vec3 centroid() const;
  double plane_offset() const { return normal.dot(polygon.front()); }

  /// Signed distance of p to the surface plane.
  double plane_distance(const Vec3& p) const { return normal.dot(p) - plane_offset(); }

  /// True if p, projected onto the plane, lies inside the polygon
  /// (closed, with tolerance `tol` on the edges).
  bool contains_projection(const Vec3& p, double tol = 1e-9) const;

  /// True if p lies on the surface: within `tol` of the plane and inside
  /// the polygon.
  bool contains(const Vec3& p, double tol = 1e-6) const;

  /// Distance within the surface plane from the projection of p to the
  /// polygon (0 if inside).
  double projected_boundary_distance(const Vec3& p) const;

  /// Checks coplanarity (1e-6 m), convexity, winding, unit normal and
  /// the kind/flag rules. Throws ValidationError.
  void validate() const;
};

struct RayHit {
  const Surface* surface{nullptr};
  double t{0.0};
  Vec3 point{Vec3::Zero()};
};

/// First intersection of the ray origin + t*dir (t >= 0) with any surface
/// accepted by `pred`. Hits on the polygon boundary count.
template <typename Pred>
std::optional<RayHit> raycast_first(std::span<const Surface> surfaces, const Vec3& origin,
                                    const Vec3& dir, Pred pred) {
  std::optional<RayHit> best;
  for (const Surface& s : surfaces) {
    if (!pred(s)) continue;
    const double denom = s.normal.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = (s.plane_offset() - s.normal.dot(origin)) / denom;
    if (t < -1e-9) continue;
    const Vec3 p = origin + t * dir;
    if (!s.contains_projection(p, 1e-9)) continue;
    if (!best || t < best->t) best = RayHit{&s, t, p};
  }
  return best;
}

}  // namespace caplan
