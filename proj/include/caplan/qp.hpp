#pragma once

#include <Eigen/Sparse>
#include <optional>

#include "caplan/geometry.hpp"

namespace caplan {

using SpMat = Eigen::SparseMatrix<double>;
using VecX = Eigen::VectorXd;

/// Convex QP:  min 1/2 x'Px + q'x
///             s.t. A_eq x = b_eq,  A_in x <= u_in,  lb <= x <= ub.
/// P is symmetrized on entry; it must be PSD (tiny negative curvature is
/// absorbed by the solver's regularization).
struct QuadraticProgram {
  SpMat P;
  VecX q;
  SpMat A_eq;
  VecX b_eq;
  SpMat A_in;
  VecX u_in;
  VecX lb;  // may be -inf
  VecX ub;  // may be +inf

  int num_vars() const { return static_cast<int>(q.size()); }
};

enum class QpStatus { optimal, infeasible, iteration_limit };

std::string to_string(QpStatus s);

struct QpSolution {
  QpStatus status{QpStatus::iteration_limit};
  VecX x;
  VecX y;  // multipliers for the stacked rows [eq; in; bounds]
  double objective{0.0};
  double kkt_residual{std::numeric_limits<double>::infinity()};
  int iterations{0};
  bool polished{false};
};

struct QpSettings {
  double eps{1e-6};            // scaled KKT residual required for `optimal`
  double eps_admm{2e-5};       // ADMM loop tolerance before polish attempts
  double eps_infeas{1e-4};
  int max_iterations{20000};
  int check_interval{25};
  double rho{0.1};
  double sigma{1e-6};
  double alpha{1.6};
  bool adaptive_rho{true};
  // when the loop stalls, solve a minimal-slack feasibility problem that
  // either certifies infeasibility or supplies a feasible warm start
  bool enable_phase1{true};
  int phase1_after{1000};
  std::optional<VecX> warm_x;
  std::optional<VecX> warm_y;
};

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& settings = QpSettings());

/// Text dump (dense) of a transcribed program for external verification.
void dump_qp(const QuadraticProgram& qp, const std::string& path);

}  // namespace caplan
