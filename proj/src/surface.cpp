#include "caplan/surface.hpp"

#include <cmath>

namespace caplan {

std::string to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::ground: return "ground";
    case SurfaceKind::wall: return "wall";
    case SurfaceKind::obstacle: return "obstacle";
  }
  return "ground";
}

SurfaceKind surface_kind_from_string(const std::string& s) {
  if (s == "ground") return SurfaceKind::ground;
  if (s == "wall") return SurfaceKind::wall;
  if (s == "obstacle") return SurfaceKind::obstacle;
  throw ValidationError("unknown surface kind: " + s);
}

Vec3 Surface::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const Vec3& v : polygon) c += v;
  return c / static_cast<double>(polygon.size());
}

bool Surface::contains_projection(const Vec3& p, double tol) const {
  // convex polygon: p is inside iff it is on the inner side of every edge
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = polygon[i];
    const Vec3& b = polygon[(i + 1) % n];
    const Vec3 edge = b - a;
    const Vec3 inward = normal.cross(edge);  // points into the polygon (CCW winding)
    if (inward.dot(p - a) < -tol * inward.norm()) return false;
  }
  return true;
}

bool Surface::contains(const Vec3& p, double tol) const {
  if (std::abs(plane_distance(p)) > tol) return false;
  return contains_projection(p, tol);
}

double Surface::projected_boundary_distance(const Vec3& p) const {
  const Vec3 q = p - plane_distance(p) * normal;
  if (contains_projection(q, 1e-9)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec3& a = polygon[i];
    const Vec3& b = polygon[(i + 1) % n];
    const Vec3 ab = b - a;
    const double s = std::clamp((q - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    best = std::min(best, (q - (a + s * ab)).norm());
  }
  return best;
}

void Surface::validate() const {
  if (polygon.size() < 3) throw ValidationError("surface '" + id + "': fewer than 3 vertices");
  if (std::abs(normal.norm() - 1.0) > 1e-6)
    throw ValidationError("surface '" + id + "': normal is not unit length");
  for (const Vec3& v : polygon) {
    if (!v.allFinite()) throw ValidationError("surface '" + id + "': non-finite vertex");
    if (std::abs(plane_distance(v)) > 1e-6)
      throw ValidationError("surface '" + id + "': vertices not coplanar within 1e-6");
  }
  const size_t n = polygon.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec3 e0 = polygon[(i + 1) % n] - polygon[i];
    const Vec3 e1 = polygon[(i + 2) % n] - polygon[(i + 1) % n];
    if (normal.dot(e0.cross(e1)) < -1e-9)
      throw ValidationError("surface '" + id + "': polygon not convex/CCW about normal");
  }
  if (kind == SurfaceKind::obstacle && (palm_allowed || foot_allowed))
    throw ValidationError("surface '" + id + "': obstacle surfaces cannot allow contacts");
}

}  // namespace caplan
