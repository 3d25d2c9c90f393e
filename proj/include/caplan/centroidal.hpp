#pragma once

#include <map>
#include <memory>
#include <optional>

#include "caplan/contacts.hpp"
#include "caplan/qp.hpp"
#include "caplan/scenario.hpp"

namespace caplan {

/// Contact description as seen by the dynamics transcription.
struct ContactSpec {
  Pose6 pose;
  Vec2 support_half{Vec2::Zero()};  // CoP rectangle half extents; zero => point contact
  double friction{0.5};
  double f_max{0.0};
  double tau_max{0.0};
  bool is_foot{true};

  static ContactSpec foot(const Pose6& pose, const RobotParams& robot, double friction);
  static ContactSpec palm(const Pose6& pose, const RobotParams& robot, double friction);
  ContactSpec mirrored_xz() const;
};

/// Capture motion query (classifier table indexing):
///   0 zero-step, 1 other foot, 2 same-side palm, 3 opposite-side palm.
struct CaptureQuery {
  int motion_type{0};
  ContactSpec standing_foot;
  bool standing_is_left{true};
  std::optional<ContactSpec> capture_contact;
  CentroidalState initial;  // k must be zero

  CaptureQuery mirrored_xz() const;
};

enum class DurationVerdict { feasible, infeasible, solver_limit };
std::string to_string(DurationVerdict v);

struct Trajectory {
  double dt{0.1};
  std::vector<CentroidalState> knots;
};

/// Per-contact force trace of a solved program (for re-verification).
struct ContactTrace {
  ContactSpec spec;
  int first_step{0};
  int last_step{0};  // inclusive
  std::vector<Vec3> f;
  std::vector<Vec2> z;
  std::vector<double> tau;
};

struct SolveTrace {
  Trajectory traj;
  std::vector<ContactTrace> contacts;
  std::vector<Vec3> r_guess;  // linearization anchor of the final pass
  std::vector<std::vector<Vec3>> f_bar;
  std::vector<std::vector<Vec2>> z_bar;
  double drift{0.0};
  std::string note;  // why a solve was rejected, for diagnostics
};

struct CaptureResult {
  bool capturable{false};
  std::optional<DurationVerdict> zero_step;          // motion type 0
  std::map<double, DurationVerdict> per_duration;    // motion types 1-3
  std::optional<Trajectory> trajectory;
  std::shared_ptr<SolveTrace> trace;  // populated when OracleParams::keep_trace
};

struct TransitionQuery {
  ContactSpec standing;
  ContactSpec new_foot;
  Vec2 old_mean_foot_xy{Vec2::Zero()};
  CentroidalState initial;  // k must be zero
};

struct TransitionResult {
  bool feasible{false};
  DurationVerdict verdict{DurationVerdict::infeasible};
  CentroidalState state_after;
  Trajectory trajectory;
  std::shared_ptr<SolveTrace> trace;
};

struct OracleParams {
  double dt{0.1};
  double horizon{1.0};  // capture horizon and step-cycle duration
  int scp_passes{3};
  double trust_region{0.05};
  double terminal_momentum_tol{1e-3};  // * mass
  double swing_duration{0.4};
  // objective weights (per knot, SI scaled)
  double w_l{1.0}, w_ldot{0.1}, w_k{1.0}, w_kdot{0.1}, w_f{1e-4}, w_tau{1e-3};
  double reg{1e-8};
  double transition_terminal_weight{500.0};
  double nominal_com_height{0.8};
  std::vector<double> capture_contact_times{0.2, 0.4, 0.6};
  double constraint_check_tol{1e-6};
  bool keep_trace{false};
  QpSettings qp;
};

/// Ground-truth capturability and transition dynamics via direct
/// transcription of the centroidal dynamics, solved by sequential
/// convexification of the CoP/lever-arm torque terms.
class CentroidalOracle {
 public:
  CentroidalOracle(const RobotParams& robot, const OracleParams& params = OracleParams())
      : robot_(robot), params_(params) {}

  const RobotParams& robot() const { return robot_; }
  const OracleParams& params() const { return params_; }

  CaptureResult solve_capture(const CaptureQuery& query) const;

  /// General capture program over an arbitrary existing contact set, with
  /// an optional new contact placed at `contact_time`. Used by the typed
  /// query path and by ground-truth path evaluation.
  DurationVerdict solve_capture_general(std::span<const ContactSpec> existing,
                                        const std::optional<ContactSpec>& new_contact,
                                        double contact_time, const CentroidalState& initial,
                                        std::shared_ptr<SolveTrace>* trace = nullptr) const;

  TransitionResult solve_transition(const TransitionQuery& query) const;

  /// Hash of every parameter that affects oracle verdicts.
  std::string config_hash() const;

 private:
  RobotParams robot_;
  OracleParams params_;
};

/// Max violation of the transcription's constraints (dynamics with the
/// stored linearization, friction pyramid, CoP box, force bounds) by a
/// solved trace. Independent re-check of solver output.
double max_constraint_violation(const SolveTrace& trace, double mass, double gravity);

}  // namespace caplan
