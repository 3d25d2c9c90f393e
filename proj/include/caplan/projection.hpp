#pragma once

#include <span>
#include <vector>

#include "caplan/contacts.hpp"

namespace caplan {

/// Discrete foot transition model: candidate displacements of the moving
/// foot expressed in the standing-foot frame. `dy` entries are toward the
/// swing side and get mirrored for a right step.
struct FootLattice {
  std::vector<double> dx{-0.10, 0.0, 0.10, 0.20, 0.30};
  std::vector<double> dy{0.15, 0.20, 0.25, 0.30, 0.35};
  std::vector<double> dyaw{-20.0 * M_PI / 180.0, 0.0, 20.0 * M_PI / 180.0};
  double ray_lift{0.5};  // ray start height above the lattice point, m

  size_t size() const { return dx.size() * dy.size() * dyaw.size(); }

  /// Half of the largest forward travel between two lattice x entries;
  /// used as the heuristic's per-transition mean-foot travel bound.
  double max_mean_foot_travel() const;
};

/// Palm projection model for one-step capture: rays cast horizontally
/// from a grid of start points toward walls, filtered by shoulder reach.
struct PalmLattice {
  std::vector<double> heights{0.9, 1.1, 1.3};   // above standing foot, m
  std::vector<double> offsets{0.3, 0.45, 0.6};  // ray start offset along the cast direction, m
  double reach_radius{0.9};
  double shoulder_lateral{0.25};
  double shoulder_height{1.4};
  double max_range{2.0};  // hits farther than this from the foot are ignored
};

/// Capture motion types, indexed as in the classifier table.
enum class CaptureMotion {
  zero_step = 0,
  step_other_foot = 1,
  same_side_palm = 2,
  opposite_side_palm = 3,
};

struct CaptureCandidate {
  CaptureMotion type{CaptureMotion::step_other_foot};
  ContactPose pose;
};

/// Projects a pose onto the surface hit by the ray from slightly above it
/// along its own -Z, preserving heading. Identity (within fp tolerance)
/// for poses already on a surface.
std::optional<ContactPose> project_contact(EndEffector ee, const Pose6& seed,
                                           std::span<const Surface> env, bool feet,
                                           double ray_lift = 0.5);

/// All lattice poses of `moving` that project onto a foot-allowed surface
/// by ray-cast along -Z of the standing foot frame.
std::vector<ContactPose> project_foot_transitions(const ContactPose& standing,
                                                  EndEffector moving,
                                                  std::span<const Surface> env,
                                                  const FootLattice& lattice = FootLattice());

/// Candidate one-step capture contacts around a single standing foot:
/// other-foot poses over the transition lattice plus palm poses ray-cast
/// along the standing-foot-frame +-Y and +X directions.
std::vector<CaptureCandidate> project_capture_contacts(const ContactPose& standing,
                                                       std::span<const Surface> env,
                                                       const FootLattice& foot_lattice = FootLattice(),
                                                       const PalmLattice& palm_lattice = PalmLattice());

}  // namespace caplan
