#include "caplan/centroidal.hpp"

#include <cmath>
#include <cstdio>

namespace caplan {

ContactSpec ContactSpec::foot(const Pose6& pose, const RobotParams& robot, double friction) {
  ContactSpec c;
  c.pose = pose;
  c.support_half = Vec2(robot.foot_half_length, robot.foot_half_width);
  c.friction = friction;
  c.f_max = robot.f_max();
  c.tau_max = robot.tau_max_foot;
  c.is_foot = true;
  return c;
}

ContactSpec ContactSpec::palm(const Pose6& pose, const RobotParams& robot, double friction) {
  ContactSpec c;
  c.pose = pose;
  c.support_half = Vec2::Zero();
  c.friction = friction;
  c.f_max = robot.f_max();
  c.tau_max = robot.tau_max_palm;
  c.is_foot = false;
  return c;
}

ContactSpec ContactSpec::mirrored_xz() const {
  ContactSpec c = *this;
  c.pose = pose.mirrored_xz();
  return c;
}

CaptureQuery CaptureQuery::mirrored_xz() const {
  CaptureQuery q = *this;
  q.standing_foot = standing_foot.mirrored_xz();
  q.standing_is_left = !standing_is_left;
  if (q.capture_contact) q.capture_contact = capture_contact->mirrored_xz();
  q.initial.r = Vec3(initial.r.x(), -initial.r.y(), initial.r.z());
  q.initial.l = Vec3(initial.l.x(), -initial.l.y(), initial.l.z());
  q.initial.k = Vec3(-initial.k.x(), initial.k.y(), -initial.k.z());
  return q;
}

std::string to_string(DurationVerdict v) {
  switch (v) {
    case DurationVerdict::feasible: return "feasible";
    case DurationVerdict::infeasible: return "infeasible";
    case DurationVerdict::solver_limit: return "solver_limit";
  }
  return "infeasible";
}

namespace {

inline Mat3 skew(const Vec3& a) {
  Mat3 S;
  S << 0, -a.z(), a.y(), a.z(), 0, -a.x(), -a.y(), a.x(), 0;
  return S;
}

struct ContactWindow {
  ContactSpec spec;
  int first{0};
  int last{0};  // inclusive force steps
};

struct Layout {
  int n_steps{0};
  struct ContactVars {
    int base{0};
    int first{0}, last{0};
    bool cop{false};
    int stride{0};
    int f(int t) const { return base + stride * (t - first); }
    int z(int t) const { return f(t) + 3; }
    int tau(int t) const { return base + stride * (t - first) + (cop ? 5 : 3); }
    bool active_step(int t) const { return t >= first && t <= last; }
    bool active_knot(int t) const { return t >= first && t <= last + 1; }
  };
  std::vector<ContactVars> cs;
  int nvars{0};

  int r(int t) const { return 9 * t; }
  int l(int t) const { return 9 * t + 3; }
  int k(int t) const { return 9 * t + 6; }
};

Layout make_layout(int n_steps, const std::vector<ContactWindow>& contacts) {
  Layout L;
  L.n_steps = n_steps;
  int off = 9 * (n_steps + 1);
  for (const ContactWindow& w : contacts) {
    Layout::ContactVars v;
    v.base = off;
    v.first = w.first;
    v.last = w.last;
    v.cop = w.spec.is_foot;
    v.stride = v.cop ? 6 : 4;
    off += v.stride * (w.last - w.first + 1);
    L.cs.push_back(v);
  }
  L.nvars = off;
  return L;
}

struct Linearization {
  std::vector<Vec3> r_bar;                // per knot
  std::vector<std::vector<Vec3>> f_bar;   // per contact, per force step (global index)
  std::vector<std::vector<Vec2>> z_bar;
};

struct PSpec {
  std::vector<ContactWindow> contacts;
  CentroidalState initial;
  int n_steps{10};
  double dt{0.1};
  double mass{60.0};
  double gravity{9.81};
  bool hard_terminal{true};
  std::optional<Vec2> terminal_com_xy;
  Vec3 terminal_l_target{Vec3::Zero()};
  double terminal_weight{0.0};
  const RobotParams* robot{nullptr};
  const OracleParams* op{nullptr};
};

QuadraticProgram build_program(const PSpec& ps, const Linearization& lin, Layout& L) {
  L = make_layout(ps.n_steps, ps.contacts);
  const int N = ps.n_steps;
  const double dt = ps.dt;
  const OracleParams& op = *ps.op;

  QuadraticProgram qp;
  std::vector<Eigen::Triplet<double>> Pt, Et, It;
  VecX q = VecX::Zero(L.nvars);

  auto add_sq = [&](int i, double w) { Pt.emplace_back(i, i, 2.0 * w); };
  auto add_cross = [&](int i, int j, double w) {
    Pt.emplace_back(i, j, w);
    Pt.emplace_back(j, i, w);
  };

  // objective
  for (int j = 0; j < L.nvars; ++j) add_sq(j, op.reg);
  for (int t = 0; t <= N; ++t) {
    for (int i = 0; i < 3; ++i) {
      add_sq(L.l(t) + i, op.w_l);
      add_sq(L.k(t) + i, op.w_k);
    }
  }
  const double wld = op.w_ldot / (dt * dt), wkd = op.w_kdot / (dt * dt);
  for (int t = 0; t < N; ++t) {
    for (int i = 0; i < 3; ++i) {
      add_sq(L.l(t) + i, wld);
      add_sq(L.l(t + 1) + i, wld);
      add_cross(L.l(t) + i, L.l(t + 1) + i, -2.0 * wld);
      add_sq(L.k(t) + i, wkd);
      add_sq(L.k(t + 1) + i, wkd);
      add_cross(L.k(t) + i, L.k(t + 1) + i, -2.0 * wkd);
    }
  }
  for (const auto& cv : L.cs) {
    for (int t = cv.first; t <= cv.last; ++t) {
      for (int i = 0; i < 3; ++i) add_sq(cv.f(t) + i, op.w_f);
      add_sq(cv.tau(t), op.w_tau);
      if (cv.cop)
        for (int i = 0; i < 2; ++i) add_sq(cv.z(t) + i, op.reg);
    }
  }
  if (ps.terminal_weight > 0.0) {
    for (int i = 0; i < 3; ++i) {
      add_sq(L.l(N) + i, ps.terminal_weight);
      q[L.l(N) + i] += -2.0 * ps.terminal_weight * ps.terminal_l_target[i];
      add_sq(L.k(N) + i, ps.terminal_weight);
    }
  }

  // equalities
  int n_eq = 9 + 9 * N + (ps.hard_terminal ? 6 : 0) + (ps.terminal_com_xy ? 2 : 0);
  VecX b_eq = VecX::Zero(n_eq);
  int row = 0;
  auto eq = [&](int col, double v) { Et.emplace_back(row, col, v); };

  // initial state
  for (int i = 0; i < 3; ++i) {
    eq(L.r(0) + i, 1.0);
    b_eq[row++] = ps.initial.r[i];
  }
  for (int i = 0; i < 3; ++i) {
    eq(L.l(0) + i, 1.0);
    b_eq[row++] = ps.initial.l[i];
  }
  for (int i = 0; i < 3; ++i) {
    eq(L.k(0) + i, 1.0);
    b_eq[row++] = ps.initial.k[i];
  }

  // forward-Euler dynamics
  for (int t = 0; t < N; ++t) {
    // r_{t+1} - r_t - dt/M l_t = 0
    for (int i = 0; i < 3; ++i) {
      eq(L.r(t + 1) + i, 1.0);
      eq(L.r(t) + i, -1.0);
      eq(L.l(t) + i, -dt / ps.mass);
      b_eq[row++] = 0.0;
    }
    // l_{t+1} - l_t - dt sum f = dt M g
    for (int i = 0; i < 3; ++i) {
      eq(L.l(t + 1) + i, 1.0);
      eq(L.l(t) + i, -1.0);
      for (const auto& cv : L.cs)
        if (cv.active_step(t)) eq(cv.f(t) + i, -dt);
      b_eq[row++] = (i == 2) ? -dt * ps.mass * ps.gravity : 0.0;
    }
    // k_{t+1} - k_t - dt sum T_e = dt sum const_e, torque linearized about
    // (r_bar, z_bar, f_bar)
    Vec3 rhs_const = Vec3::Zero();
    struct TorqueRow {
      int c;
      Mat3 lever;        // coefficient of f
      Vec3 zx_coef, zy_coef;
      Mat3 r_coef;       // coefficient of r_t
      Vec3 n_axis;
    };
    std::vector<TorqueRow> torows;
    for (size_t ci = 0; ci < L.cs.size(); ++ci) {
      const auto& cv = L.cs[ci];
      if (!cv.active_step(t)) continue;
      const ContactSpec& spec = ps.contacts[ci].spec;
      const Mat3 R = spec.pose.rotation();
      const Vec3 fb = lin.f_bar[ci][t];
      const Vec2 zb = lin.z_bar[ci][t];
      const Vec3 zb3 = R.col(0) * zb.x() + R.col(1) * zb.y();
      const Vec3 a = spec.pose.position + zb3 - lin.r_bar[t];
      TorqueRow tr;
      tr.c = static_cast<int>(ci);
      tr.lever = skew(a);
      tr.zx_coef = R.col(0).cross(fb);
      tr.zy_coef = R.col(1).cross(fb);
      tr.r_coef = skew(fb);  // -r x f_bar == skew(f_bar) r
      tr.n_axis = R.col(2);
      torows.push_back(tr);
      rhs_const += lin.r_bar[t].cross(fb) - zb3.cross(fb);
    }
    for (int i = 0; i < 3; ++i) {
      eq(L.k(t + 1) + i, 1.0);
      eq(L.k(t) + i, -1.0);
      for (const TorqueRow& tr : torows) {
        const auto& cv = L.cs[tr.c];
        for (int j = 0; j < 3; ++j) {
          if (tr.lever(i, j) != 0.0) eq(cv.f(t) + j, -dt * tr.lever(i, j));
          if (tr.r_coef(i, j) != 0.0) eq(L.r(t) + j, -dt * tr.r_coef(i, j));
        }
        if (cv.cop) {
          if (tr.zx_coef[i] != 0.0) eq(cv.z(t) + 0, -dt * tr.zx_coef[i]);
          if (tr.zy_coef[i] != 0.0) eq(cv.z(t) + 1, -dt * tr.zy_coef[i]);
        }
        eq(cv.tau(t), -dt * tr.n_axis[i]);
      }
      b_eq[row++] = dt * rhs_const[i];
    }
  }

  if (ps.hard_terminal) {
    for (int i = 0; i < 3; ++i) {
      eq(L.l(N) + i, 1.0);
      b_eq[row++] = 0.0;
    }
    for (int i = 0; i < 3; ++i) {
      eq(L.k(N) + i, 1.0);
      b_eq[row++] = 0.0;
    }
  }
  if (ps.terminal_com_xy) {
    eq(L.r(N) + 0, 1.0);
    b_eq[row++] = ps.terminal_com_xy->x();
    eq(L.r(N) + 1, 1.0);
    b_eq[row++] = ps.terminal_com_xy->y();
  }

  // inequalities: friction pyramids and CoM reachability boxes
  int n_in = 0;
  for (const auto& cv : L.cs) {
    n_in += 6 * (cv.last - cv.first + 1);             // friction
    n_in += 6 * (cv.last + 1 - cv.first + 1);         // reach per active knot
  }
  VecX u_in = VecX::Zero(n_in);
  row = 0;
  auto in = [&](int col, double v) { It.emplace_back(row, col, v); };

  for (size_t ci = 0; ci < L.cs.size(); ++ci) {
    const auto& cv = L.cs[ci];
    const ContactSpec& spec = ps.contacts[ci].spec;
    const Mat3 R = spec.pose.rotation();
    const double mu = spec.friction / std::sqrt(2.0);
    for (int t = cv.first; t <= cv.last; ++t) {
      // +-tangent <= mu' normal (4 rows), 0 <= f_n <= f_max (2 rows)
      for (int axis = 0; axis < 2; ++axis) {
        for (double s : {1.0, -1.0}) {
          const Vec3 coef = s * R.col(axis) - mu * R.col(2);
          for (int j = 0; j < 3; ++j) in(cv.f(t) + j, coef[j]);
          u_in[row++] = 0.0;
        }
      }
      for (int j = 0; j < 3; ++j) in(cv.f(t) + j, -R.col(2)[j]);
      u_in[row++] = 0.0;
      for (int j = 0; j < 3; ++j) in(cv.f(t) + j, R.col(2)[j]);
      u_in[row++] = spec.f_max;
    }
    // reachability: R^T (r_t - p) within the box while the contact is on
    const Vec3 p = spec.pose.position;
    Vec3 box_lo, box_hi;
    if (spec.is_foot) {
      box_lo = Vec3(-ps.robot->com_box_xy, -ps.robot->com_box_xy, ps.robot->com_box_z_min);
      box_hi = Vec3(ps.robot->com_box_xy, ps.robot->com_box_xy, ps.robot->com_box_z_max);
    } else {
      const double d = ps.robot->palm_reach_box;
      box_lo = Vec3(-d, -d, -d);
      box_hi = Vec3(d, d, d);
    }
    for (int t = cv.first; t <= cv.last + 1; ++t) {
      for (int axis = 0; axis < 3; ++axis) {
        const Vec3 a = R.col(axis);
        for (int j = 0; j < 3; ++j) in(L.r(t) + j, a[j]);
        u_in[row++] = a.dot(p) + box_hi[axis];
        for (int j = 0; j < 3; ++j) in(L.r(t) + j, -a[j]);
        u_in[row++] = -(a.dot(p) + box_lo[axis]);
      }
    }
  }

  // variable bounds: CoP offsets and normal torques
  VecX lb = VecX::Constant(L.nvars, -std::numeric_limits<double>::infinity());
  VecX ub = VecX::Constant(L.nvars, std::numeric_limits<double>::infinity());
  for (size_t ci = 0; ci < L.cs.size(); ++ci) {
    const auto& cv = L.cs[ci];
    const ContactSpec& spec = ps.contacts[ci].spec;
    for (int t = cv.first; t <= cv.last; ++t) {
      if (cv.cop) {
        lb[cv.z(t) + 0] = -spec.support_half.x();
        ub[cv.z(t) + 0] = spec.support_half.x();
        lb[cv.z(t) + 1] = -spec.support_half.y();
        ub[cv.z(t) + 1] = spec.support_half.y();
      }
      lb[cv.tau(t)] = -spec.tau_max;
      ub[cv.tau(t)] = spec.tau_max;
    }
  }

  qp.P.resize(L.nvars, L.nvars);
  qp.P.setFromTriplets(Pt.begin(), Pt.end());
  qp.q = q;
  qp.A_eq.resize(n_eq, L.nvars);
  qp.A_eq.setFromTriplets(Et.begin(), Et.end());
  qp.b_eq = b_eq;
  qp.A_in.resize(n_in, L.nvars);
  qp.A_in.setFromTriplets(It.begin(), It.end());
  qp.u_in = u_in;
  qp.lb = lb;
  qp.ub = ub;
  return qp;
}

Linearization initial_linearization(const PSpec& ps, const Vec3& r_target) {
  Linearization lin;
  const int N = ps.n_steps;
  lin.r_bar.resize(N + 1);
  for (int t = 0; t <= N; ++t) {
    const double a = static_cast<double>(t) / N;
    lin.r_bar[t] = (1.0 - a) * ps.initial.r + a * r_target;
  }
  lin.f_bar.assign(ps.contacts.size(), std::vector<Vec3>(N, Vec3::Zero()));
  lin.z_bar.assign(ps.contacts.size(), std::vector<Vec2>(N, Vec2::Zero()));
  for (int t = 0; t < N; ++t) {
    int n_active = 0;
    for (const ContactWindow& w : ps.contacts)
      if (t >= w.first && t <= w.last) ++n_active;
    if (n_active == 0) continue;
    const Vec3 share(0.0, 0.0, ps.mass * ps.gravity / n_active);
    for (size_t ci = 0; ci < ps.contacts.size(); ++ci)
      if (t >= ps.contacts[ci].first && t <= ps.contacts[ci].last) lin.f_bar[ci][t] = share;
  }
  return lin;
}

/// Sound necessary condition: the momentum change needed to stop must be
/// attainable with the pyramid-bounded impulses of the active windows.
/// Exceeding it certifies infeasibility of every transcription pass.
bool impulse_bound_infeasible(const PSpec& ps) {
  if (!ps.hard_terminal) return false;
  const double H = ps.n_steps * ps.dt;

  auto dir_capacity = [&](const Vec3& d, bool maximize) {
    double total = 0.0;
    for (const ContactWindow& w : ps.contacts) {
      const Mat3 R = w.spec.pose.rotation();
      const double mu = w.spec.friction / std::sqrt(2.0);
      double best = 0.0;  // apex vertex
      for (double sx : {1.0, -1.0})
        for (double sy : {1.0, -1.0}) {
          const Vec3 v = w.spec.f_max * (R * Vec3(sx * mu, sy * mu, 1.0));
          const double val = v.dot(d);
          best = maximize ? std::max(best, val) : std::min(best, val);
        }
      total += best * ps.dt * (w.last - w.first + 1);
    }
    return total;
  };

  const double tol = 1e-9 * (1.0 + ps.initial.l.norm() + ps.mass * ps.gravity * H);
  const Vec3 l0 = ps.initial.l;
  const Vec2 lxy(l0.x(), l0.y());
  if (lxy.norm() > 1e-12) {
    const Vec3 d(lxy.x() / lxy.norm(), lxy.y() / lxy.norm(), 0.0);
    const double needed = -l0.dot(d);  // integral of total tangential force
    if (needed > dir_capacity(d, true) + tol) return true;
    if (needed < dir_capacity(d, false) - tol) return true;
  }
  {
    const double needed = ps.mass * ps.gravity * H - l0.z();
    if (needed > dir_capacity(Vec3::UnitZ(), true) + tol) return true;
    if (needed < dir_capacity(Vec3::UnitZ(), false) - tol) return true;
  }
  return false;
}

struct ScpOutcome {
  DurationVerdict verdict{DurationVerdict::infeasible};
  SolveTrace trace;
};

ScpOutcome run_scp(const PSpec& ps, const Vec3& r_target) {
  ScpOutcome out;
  if (impulse_bound_infeasible(ps)) {
    out.verdict = DurationVerdict::infeasible;
    out.trace.note = "impulse_bound";
    return out;
  }

  const OracleParams& op = *ps.op;
  Linearization lin = initial_linearization(ps, r_target);
  Layout L;
  QpSolution sol;
  bool warm = false;
  double drift = 0.0;

  for (int pass = 0; pass < op.scp_passes; ++pass) {
    QuadraticProgram qp = build_program(ps, lin, L);
    QpSettings settings = op.qp;
    if (warm) {
      settings.warm_x = sol.x;
      settings.warm_y = sol.y;
    }
    sol = solve_qp(qp, settings);
    if (sol.status == QpStatus::infeasible) {
      out.verdict = DurationVerdict::infeasible;
      out.trace.note = "qp_infeasible_pass_" + std::to_string(pass);
      return out;
    }
    if (sol.status == QpStatus::iteration_limit) {
      out.verdict = DurationVerdict::solver_limit;
      out.trace.note = "qp_limit_pass_" + std::to_string(pass) + "_res_" +
                       std::to_string(sol.kkt_residual);
      return out;
    }
    warm = true;

    // extract
    SolveTrace& tr = out.trace;
    tr.traj.dt = ps.dt;
    tr.traj.knots.resize(ps.n_steps + 1);
    for (int t = 0; t <= ps.n_steps; ++t) {
      tr.traj.knots[t].r = sol.x.segment<3>(L.r(t));
      tr.traj.knots[t].l = sol.x.segment<3>(L.l(t));
      tr.traj.knots[t].k = sol.x.segment<3>(L.k(t));
    }
    tr.contacts.clear();
    for (size_t ci = 0; ci < L.cs.size(); ++ci) {
      const auto& cv = L.cs[ci];
      ContactTrace ct;
      ct.spec = ps.contacts[ci].spec;
      ct.first_step = cv.first;
      ct.last_step = cv.last;
      for (int t = cv.first; t <= cv.last; ++t) {
        ct.f.push_back(sol.x.segment<3>(cv.f(t)));
        ct.z.push_back(cv.cop ? Vec2(sol.x[cv.z(t)], sol.x[cv.z(t) + 1]) : Vec2::Zero());
        ct.tau.push_back(sol.x[cv.tau(t)]);
      }
      tr.contacts.push_back(std::move(ct));
    }
    tr.r_guess = lin.r_bar;
    tr.f_bar = lin.f_bar;
    tr.z_bar = lin.z_bar;

    drift = 0.0;
    for (int t = 0; t <= ps.n_steps; ++t)
      drift = std::max(drift,
                       (tr.traj.knots[t].r - lin.r_bar[t]).cwiseAbs().maxCoeff());
    tr.drift = drift;

    if (pass + 1 < op.scp_passes) {
      for (int t = 0; t <= ps.n_steps; ++t) lin.r_bar[t] = tr.traj.knots[t].r;
      for (size_t ci = 0; ci < L.cs.size(); ++ci) {
        const auto& cv = L.cs[ci];
        for (int t = cv.first; t <= cv.last; ++t) {
          lin.f_bar[ci][t] = tr.contacts[ci].f[t - cv.first];
          lin.z_bar[ci][t] = tr.contacts[ci].z[t - cv.first];
        }
      }
    }
  }

  // verify the result instead of trusting solver status
  const double viol = max_constraint_violation(out.trace, ps.mass, ps.gravity);
  bool ok = true;
  if (viol > op.constraint_check_tol) {
    ok = false;
    out.trace.note = "violation_" + std::to_string(viol);
  }
  if (drift > op.trust_region) {
    ok = false;
    out.trace.note = "drift_" + std::to_string(drift);
  }
  if (ps.hard_terminal) {
    const CentroidalState& last = out.trace.traj.knots.back();
    const double tol = op.terminal_momentum_tol * ps.mass;
    if (last.l.norm() > tol || last.k.norm() > tol) {
      ok = false;
      out.trace.note = "terminal_momentum";
    }
  }
  out.verdict = ok ? DurationVerdict::feasible : DurationVerdict::infeasible;
  return out;
}

Vec3 capture_guess_target(const PSpec& ps, const OracleParams& op) {
  Vec3 centroid = Vec3::Zero();
  double foot_z = 0.0;
  int n = 0, nf = 0;
  for (const ContactWindow& w : ps.contacts) {
    centroid += w.spec.pose.position;
    ++n;
    if (w.spec.is_foot) {
      foot_z += w.spec.pose.position.z();
      ++nf;
    }
  }
  centroid /= std::max(1, n);
  const double base_z = nf > 0 ? foot_z / nf : centroid.z();
  return Vec3(centroid.x(), centroid.y(), base_z + op.nominal_com_height);
}

}  // namespace

double max_constraint_violation(const SolveTrace& trace, double mass, double gravity) {
  const double dt = trace.traj.dt;
  const int N = static_cast<int>(trace.traj.knots.size()) - 1;
  double worst = 0.0;
  const double dyn_scale = 1.0 + mass * gravity * dt;

  for (int t = 0; t < N; ++t) {
    const CentroidalState& a = trace.traj.knots[t];
    const CentroidalState& b = trace.traj.knots[t + 1];
    Vec3 fsum = Vec3::Zero();
    Vec3 tsum = Vec3::Zero();
    for (size_t ci = 0; ci < trace.contacts.size(); ++ci) {
      const ContactTrace& ct = trace.contacts[ci];
      if (t < ct.first_step || t > ct.last_step) continue;
      const int i = t - ct.first_step;
      const Mat3 R = ct.spec.pose.rotation();
      fsum += ct.f[i];
      const Vec3 fb = trace.f_bar[ci][t];
      const Vec2 zb = trace.z_bar[ci][t];
      const Vec3 zb3 = R.col(0) * zb.x() + R.col(1) * zb.y();
      const Vec3 aarm = ct.spec.pose.position + zb3 - trace.r_guess[t];
      const Vec3 z3 = R.col(0) * ct.z[i].x() + R.col(1) * ct.z[i].y();
      tsum += aarm.cross(ct.f[i]) + z3.cross(fb) - zb3.cross(fb) -
              (a.r - trace.r_guess[t]).cross(fb) + R.col(2) * ct.tau[i];
    }
    const Vec3 res_r = b.r - a.r - (dt / mass) * a.l;
    const Vec3 res_l = b.l - a.l - dt * (Vec3(0, 0, -mass * gravity) + fsum);
    const Vec3 res_k = b.k - a.k - dt * tsum;
    worst = std::max(worst, res_r.cwiseAbs().maxCoeff() / dyn_scale);
    worst = std::max(worst, res_l.cwiseAbs().maxCoeff() / dyn_scale);
    worst = std::max(worst, res_k.cwiseAbs().maxCoeff() / dyn_scale);
  }

  for (const ContactTrace& ct : trace.contacts) {
    const Mat3 R = ct.spec.pose.rotation();
    const double mu = ct.spec.friction / std::sqrt(2.0);
    const double fscale = 1.0 + ct.spec.f_max;
    for (size_t i = 0; i < ct.f.size(); ++i) {
      const Vec3 fl = R.transpose() * ct.f[i];
      worst = std::max(worst, (std::abs(fl.x()) - mu * fl.z()) / fscale);
      worst = std::max(worst, (std::abs(fl.y()) - mu * fl.z()) / fscale);
      worst = std::max(worst, -fl.z() / fscale);
      worst = std::max(worst, (fl.z() - ct.spec.f_max) / fscale);
      if (ct.spec.is_foot) {
        const double cscale = 1.0 + ct.spec.support_half.maxCoeff();
        worst = std::max(worst, (std::abs(ct.z[i].x()) - ct.spec.support_half.x()) / cscale);
        worst = std::max(worst, (std::abs(ct.z[i].y()) - ct.spec.support_half.y()) / cscale);
      }
      worst = std::max(worst, (std::abs(ct.tau[i]) - ct.spec.tau_max) / (1.0 + ct.spec.tau_max));
    }
  }
  return worst;
}

DurationVerdict CentroidalOracle::solve_capture_general(
    std::span<const ContactSpec> existing, const std::optional<ContactSpec>& new_contact,
    double contact_time, const CentroidalState& initial,
    std::shared_ptr<SolveTrace>* trace) const {
  PSpec ps;
  const int N = static_cast<int>(std::lround(params_.horizon / params_.dt));
  ps.n_steps = N;
  ps.dt = params_.dt;
  ps.mass = robot_.mass;
  ps.gravity = robot_.gravity;
  ps.initial = initial;
  ps.hard_terminal = true;
  ps.robot = &robot_;
  ps.op = &params_;
  for (const ContactSpec& c : existing) ps.contacts.push_back({c, 0, N - 1});
  if (new_contact) {
    const int first = static_cast<int>(std::lround(contact_time / params_.dt));
    if (first >= N) return DurationVerdict::infeasible;
    ps.contacts.push_back({*new_contact, first, N - 1});
  }

  ScpOutcome oc = run_scp(ps, capture_guess_target(ps, params_));
  if (trace) *trace = std::make_shared<SolveTrace>(std::move(oc.trace));
  return oc.verdict;
}

CaptureResult CentroidalOracle::solve_capture(const CaptureQuery& query) const {
  if (query.initial.k.norm() > 1e-12)
    throw std::invalid_argument("solve_capture: capture queries assume zero angular momentum");
  if ((query.motion_type == 0) != !query.capture_contact.has_value())
    throw std::invalid_argument("solve_capture: capture contact must be absent iff type 0");

  CaptureResult out;
  const std::array<ContactSpec, 1> existing{query.standing_foot};

  if (query.motion_type == 0) {
    std::shared_ptr<SolveTrace> tr;
    const DurationVerdict v = solve_capture_general(existing, std::nullopt, 0.0, query.initial,
                                                    params_.keep_trace ? &tr : nullptr);
    out.zero_step = v;
    out.capturable = v == DurationVerdict::feasible;
    if (out.capturable && tr) {
      out.trajectory = tr->traj;
      out.trace = tr;
    }
    return out;
  }

  for (double ct : params_.capture_contact_times) {
    std::shared_ptr<SolveTrace> tr;
    const DurationVerdict v = solve_capture_general(existing, query.capture_contact, ct,
                                                    query.initial,
                                                    params_.keep_trace ? &tr : nullptr);
    out.per_duration[ct] = v;
    if (v == DurationVerdict::feasible && !out.capturable) {
      out.capturable = true;
      if (tr) {
        out.trajectory = tr->traj;
        out.trace = tr;
      }
    }
  }
  return out;
}

TransitionResult CentroidalOracle::solve_transition(const TransitionQuery& query) const {
  PSpec ps;
  const int N = static_cast<int>(std::lround(params_.horizon / params_.dt));
  const int touchdown = static_cast<int>(std::lround(params_.swing_duration / params_.dt));
  ps.n_steps = N;
  ps.dt = params_.dt;
  ps.mass = robot_.mass;
  ps.gravity = robot_.gravity;
  ps.initial = query.initial;
  ps.initial.k = Vec3::Zero();
  ps.hard_terminal = false;
  ps.robot = &robot_;
  ps.op = &params_;
  ps.contacts.push_back({query.standing, 0, N - 1});
  ps.contacts.push_back({query.new_foot, touchdown, N - 1});

  const Vec2 new_mean_xy =
      0.5 * (query.standing.pose.position.head<2>() + query.new_foot.pose.position.head<2>());
  ps.terminal_com_xy = new_mean_xy;
  const Vec2 step = new_mean_xy - query.old_mean_foot_xy;
  ps.terminal_l_target =
      Vec3(step.x(), step.y(), 0.0) * robot_.mass / (params_.dt * N);
  ps.terminal_weight = params_.transition_terminal_weight;

  const double base_z =
      0.5 * (query.standing.pose.position.z() + query.new_foot.pose.position.z());
  const Vec3 target(new_mean_xy.x(), new_mean_xy.y(), base_z + params_.nominal_com_height);

  ScpOutcome oc = run_scp(ps, target);
  TransitionResult out;
  out.verdict = oc.verdict;
  out.feasible = oc.verdict == DurationVerdict::feasible;
  if (out.feasible) {
    out.state_after.r = oc.trace.traj.knots.back().r;
    out.state_after.l = oc.trace.traj.knots.back().l;
    out.state_after.k = Vec3::Zero();
    out.trajectory = oc.trace.traj;
  }
  if (params_.keep_trace) out.trace = std::make_shared<SolveTrace>(std::move(oc.trace));
  return out;
}

std::string CentroidalOracle::config_hash() const {
  char buf[768];
  std::snprintf(buf, sizeof(buf),
                "m=%.9g g=%.9g fhl=%.9g fhw=%.9g fmax=%.9g tf=%.9g tp=%.9g box=%.9g,%.9g,%.9g "
                "reach=%.9g dt=%.9g hz=%.9g scp=%d tr=%.9g tmt=%.9g sw=%.9g "
                "w=%.9g,%.9g,%.9g,%.9g,%.9g,%.9g reg=%.9g tw=%.9g nch=%.9g eps=%.9g",
                robot_.mass, robot_.gravity, robot_.foot_half_length, robot_.foot_half_width,
                robot_.f_max(), robot_.tau_max_foot, robot_.tau_max_palm, robot_.com_box_xy,
                robot_.com_box_z_min, robot_.com_box_z_max, robot_.palm_reach_box, params_.dt,
                params_.horizon, params_.scp_passes, params_.trust_region,
                params_.terminal_momentum_tol, params_.swing_duration, params_.w_l,
                params_.w_ldot, params_.w_k, params_.w_kdot, params_.w_f, params_.w_tau,
                params_.reg, params_.transition_terminal_weight, params_.nominal_com_height,
                params_.qp.eps);
  // FNV-1a
  uint64_t h = 1469598103934665603ull;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return std::string(hex);
}

}  // namespace caplan
