#include "caplan/qp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>

namespace caplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Stacked {
  SpMat C;  // all constraint rows
  VecX l, u;
  int n{0}, m{0};
};

Stacked stack_constraints(const QuadraticProgram& qp) {
  Stacked s;
  s.n = qp.num_vars();
  const int me = static_cast<int>(qp.b_eq.size());
  const int mi = static_cast<int>(qp.u_in.size());
  std::vector<int> bounded;
  for (int j = 0; j < s.n; ++j) {
    const bool has_lb = qp.lb.size() > 0 && qp.lb[j] > -kInf;
    const bool has_ub = qp.ub.size() > 0 && qp.ub[j] < kInf;
    if (has_lb || has_ub) bounded.push_back(j);
  }
  s.m = me + mi + static_cast<int>(bounded.size());
  s.C.resize(s.m, s.n);
  s.l.resize(s.m);
  s.u.resize(s.m);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(qp.A_eq.nonZeros() + qp.A_in.nonZeros() + bounded.size());
  for (int k = 0; k < qp.A_eq.outerSize(); ++k)
    for (SpMat::InnerIterator it(qp.A_eq, k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (int k = 0; k < qp.A_in.outerSize(); ++k)
    for (SpMat::InnerIterator it(qp.A_in, k); it; ++it)
      trips.emplace_back(me + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
  for (size_t i = 0; i < bounded.size(); ++i)
    trips.emplace_back(me + mi + static_cast<int>(i), bounded[i], 1.0);
  s.C.setFromTriplets(trips.begin(), trips.end());

  for (int i = 0; i < me; ++i) {
    s.l[i] = qp.b_eq[i];
    s.u[i] = qp.b_eq[i];
  }
  for (int i = 0; i < mi; ++i) {
    s.l[me + i] = -kInf;
    s.u[me + i] = qp.u_in[i];
  }
  for (size_t i = 0; i < bounded.size(); ++i) {
    const int j = bounded[i];
    s.l[me + mi + i] = qp.lb.size() > 0 ? qp.lb[j] : -kInf;
    s.u[me + mi + i] = qp.ub.size() > 0 ? qp.ub[j] : kInf;
  }
  return s;
}

double inf_norm(const VecX& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Unscaled KKT residual with per-row / per-variable normalization, so
/// small-magnitude rows (for example CoP bounds) are held to the same
/// relative accuracy as large force rows.
double kkt_residual(const SpMat& P, const VecX& q, const SpMat& C, const VecX& l, const VecX& u,
                    const VecX& x, const VecX& y, double* parts = nullptr) {
  const VecX Cx = C * x;
  const VecX Px = P.selfadjointView<Eigen::Lower>() * x;
  const VecX Cty = C.transpose() * y;

  double prim = 0.0;
  for (int i = 0; i < Cx.size(); ++i) {
    double v = 0.0;
    if (u[i] < kInf) v = std::max(v, Cx[i] - u[i]);
    if (l[i] > -kInf) v = std::max(v, l[i] - Cx[i]);
    double scale = 1.0 + std::abs(Cx[i]);
    if (u[i] < kInf) scale = std::max(scale, 1.0 + std::abs(u[i]));
    if (l[i] > -kInf) scale = std::max(scale, 1.0 + std::abs(l[i]));
    prim = std::max(prim, v / scale);
  }

  double dual = 0.0;
  for (int j = 0; j < x.size(); ++j) {
    const double v = std::abs(Px[j] + q[j] + Cty[j]);
    const double scale = 1.0 + std::max({std::abs(Px[j]), std::abs(q[j]), std::abs(Cty[j])});
    dual = std::max(dual, v / scale);
  }

  double comp = 0.0;
  for (int i = 0; i < Cx.size(); ++i) {
    if (y[i] == 0.0) continue;
    const bool upper = y[i] > 0.0;
    const double bound = upper ? u[i] : l[i];
    double v;
    if (std::abs(bound) >= kInf) {
      v = std::abs(y[i]) / (1.0 + std::abs(y[i]));  // must be zero on an open side
    } else {
      const double slack = std::abs(bound - Cx[i]);
      v = std::abs(y[i]) * slack / ((1.0 + std::abs(y[i])) * (1.0 + std::abs(Cx[i])));
    }
    comp = std::max(comp, v);
  }

  if (parts) {
    parts[0] = prim;
    parts[1] = dual;
    parts[2] = comp;
  }
  return std::max({prim, dual, comp});
}

struct Scaling {
  VecX D, E;
  double c{1.0};
};

Scaling ruiz_equilibrate(SpMat& P, VecX& q, SpMat& C, VecX& l, VecX& u, int iters = 10) {
  const int n = static_cast<int>(q.size());
  const int m = static_cast<int>(l.size());
  Scaling s;
  s.D = VecX::Ones(n);
  s.E = VecX::Ones(m);
  s.c = 1.0;

  for (int it = 0; it < iters; ++it) {
    VecX dcol = VecX::Zero(n), erow = VecX::Zero(m);
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator itr(P, k); itr; ++itr) {
        const double a = std::abs(itr.value());
        dcol[itr.col()] = std::max(dcol[itr.col()], a);
        dcol[itr.row()] = std::max(dcol[itr.row()], a);
      }
    for (int k = 0; k < C.outerSize(); ++k)
      for (SpMat::InnerIterator itr(C, k); itr; ++itr) {
        const double a = std::abs(itr.value());
        dcol[itr.col()] = std::max(dcol[itr.col()], a);
        erow[itr.row()] = std::max(erow[itr.row()], a);
      }
    for (int j = 0; j < n; ++j) dcol[j] = dcol[j] > 1e-12 ? 1.0 / std::sqrt(dcol[j]) : 1.0;
    for (int i = 0; i < m; ++i) erow[i] = erow[i] > 1e-12 ? 1.0 / std::sqrt(erow[i]) : 1.0;

    // apply
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator itr(P, k); itr; ++itr)
        itr.valueRef() *= dcol[itr.row()] * dcol[itr.col()];
    for (int k = 0; k < C.outerSize(); ++k)
      for (SpMat::InnerIterator itr(C, k); itr; ++itr)
        itr.valueRef() *= erow[itr.row()] * dcol[itr.col()];
    q = q.cwiseProduct(dcol);
    for (int i = 0; i < m; ++i) {
      if (l[i] > -kInf) l[i] *= erow[i];
      if (u[i] < kInf) u[i] *= erow[i];
    }
    s.D = s.D.cwiseProduct(dcol);
    s.E = s.E.cwiseProduct(erow);

    // cost scaling
    VecX pcol = VecX::Zero(n);
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator itr(P, k); itr; ++itr) {
        pcol[itr.col()] = std::max(pcol[itr.col()], std::abs(itr.value()));
        pcol[itr.row()] = std::max(pcol[itr.row()], std::abs(itr.value()));
      }
    const double pmean = pcol.size() ? pcol.mean() : 0.0;
    double gamma = std::max(pmean, inf_norm(q));
    gamma = gamma > 1e-12 ? 1.0 / gamma : 1.0;
    if (std::abs(gamma - 1.0) > 1e-3) {
      P *= gamma;
      q *= gamma;
      s.c *= gamma;
    }
  }
  return s;
}

class KktSolver {
 public:
  void setup(const SpMat& P, const SpMat& C, double sigma, const VecX& rho_vec) {
    n_ = static_cast<int>(P.rows());
    m_ = static_cast<int>(C.rows());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(P.nonZeros() + C.nonZeros() + n_ + m_);
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator it(P, k); it; ++it)
        if (it.row() >= it.col())
          trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, sigma);
    for (int k = 0; k < C.outerSize(); ++k)
      for (SpMat::InnerIterator it(C, k); it; ++it)
        trips.emplace_back(n_ + static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int i = 0; i < m_; ++i) trips.emplace_back(n_ + i, n_ + i, -1.0 / rho_vec[i]);
    K_.resize(n_ + m_, n_ + m_);
    K_.setFromTriplets(trips.begin(), trips.end(),
                       [](const double& a, const double& b) { return a + b; });
    if (first_) {
      ldlt_.analyzePattern(K_);
      first_ = false;
    }
    ldlt_.factorize(K_);
    ok_ = ldlt_.info() == Eigen::Success;
  }

  bool ok() const { return ok_; }

  VecX solve(const VecX& rhs) const { return ldlt_.solve(rhs); }

  int n() const { return n_; }
  int m() const { return m_; }

 private:
  SpMat K_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> ldlt_;
  int n_{0}, m_{0};
  bool first_{true};
  bool ok_{false};
};

/// Equality-constrained solve on an active set estimated from the ADMM
/// multipliers, with a few refinement rounds that add rows the candidate
/// still violates. Returns true if the refined solution satisfies the
/// KKT conditions on the original data to tolerance.
bool polish(const SpMat& P, const VecX& q, const SpMat& C, const VecX& l, const VecX& u,
            const VecX& x_admm, const VecX& y_admm, double eps, VecX& x_out, VecX& y_out,
            double& residual_out) {
  const int n = static_cast<int>(q.size());
  const int m = static_cast<int>(l.size());

  // row-major view of C for cheap active-row gathering
  std::vector<std::vector<std::pair<int, double>>> crows(m);
  for (int k = 0; k < C.outerSize(); ++k)
    for (SpMat::InnerIterator it(C, k); it; ++it)
      crows[it.row()].emplace_back(static_cast<int>(it.col()), it.value());

  // initial guess: rows whose ADMM slack is tight or whose multiplier
  // clearly points at a bound
  std::vector<int> side(m, 0);  // -1 lower active, +1 upper active, 0 inactive
  {
    const VecX Cx = C * x_admm;
    for (int i = 0; i < m; ++i) {
      if (l[i] == u[i]) {
        side[i] = -1;
        continue;
      }
      const double scale = 1.0 + std::abs(Cx[i]);
      const bool tight_l = l[i] > -kInf && Cx[i] - l[i] < 1e-5 * scale;
      const bool tight_u = u[i] < kInf && u[i] - Cx[i] < 1e-5 * scale;
      if (y_admm[i] < -1e-6 || (tight_l && !tight_u))
        side[i] = -1;
      else if (y_admm[i] > 1e-6 || (tight_u && !tight_l))
        side[i] = 1;
    }
  }

  for (int round = 0; round < 12; ++round) {
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (side[i] != 0) active.push_back(i);

    // degenerate active sets are routine (several pyramid rows activate
    // together when a force sits at the apex); keep an independent subset
    if (!active.empty()) {
      Eigen::MatrixXd At(n, static_cast<int>(active.size()));
      At.setZero();
      for (size_t i = 0; i < active.size(); ++i)
        for (auto& [col, val] : crows[active[i]]) At(col, static_cast<int>(i)) = val;
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(At);
      qr.setThreshold(1e-10);
      const int rank = static_cast<int>(qr.rank());
      if (rank < static_cast<int>(active.size())) {
        const auto& perm = qr.colsPermutation().indices();
        std::vector<int> keep;
        keep.reserve(rank);
        for (int i = 0; i < rank; ++i) keep.push_back(active[perm[i]]);
        std::sort(keep.begin(), keep.end());
        active = std::move(keep);
      }
    }
    const int ma = static_cast<int>(active.size());

    const double delta = 1e-11;
    std::vector<Eigen::Triplet<double>> trips;
    for (int k = 0; k < P.outerSize(); ++k)
      for (SpMat::InnerIterator it(P, k); it; ++it)
        if (it.row() >= it.col())
          trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int j = 0; j < n; ++j) trips.emplace_back(j, j, delta);
    for (int i = 0; i < ma; ++i)
      for (auto& [col, val] : crows[active[i]]) trips.emplace_back(n + i, col, val);
    for (int i = 0; i < ma; ++i) trips.emplace_back(n + i, n + i, -delta);

    SpMat K(n + ma, n + ma);
    K.setFromTriplets(trips.begin(), trips.end(),
                      [](const double& a, const double& b) { return a + b; });
    // pivoting LU: the active-set KKT system is indefinite and often has
    // (near-)dependent rows
    Eigen::SparseLU<SpMat> lu;
    lu.compute(SpMat(K.selfadjointView<Eigen::Lower>()));
    if (lu.info() != Eigen::Success) {
      if (std::getenv("CAPLAN_QP_DEBUG"))
        std::fprintf(stderr, "polish: factorization failed (ma=%d)\n", ma);
      return false;
    }
    auto ksolve = [&](const VecX& b) { return VecX(lu.solve(b)); };

    VecX rhs(n + ma);
    rhs.head(n) = -q;
    for (int i = 0; i < ma; ++i)
      rhs[n + i] = side[active[i]] < 0 ? l[active[i]] : u[active[i]];

    VecX sol = ksolve(rhs);
    for (int refine = 0; refine < 6; ++refine) {
      VecX r(n + ma);
      VecX x = sol.head(n), nu = sol.tail(ma);
      VecX Px = P.selfadjointView<Eigen::Lower>() * x;
      VecX Ctnu = VecX::Zero(n);
      for (int i = 0; i < ma; ++i)
        for (auto& [col, val] : crows[active[i]]) Ctnu[col] += val * nu[i];
      r.head(n) = -q - Px - Ctnu;
      for (int i = 0; i < ma; ++i) {
        double cx = 0.0;
        for (auto& [col, val] : crows[active[i]]) cx += val * x[col];
        r[n + i] = rhs[n + i] - cx;
      }
      sol += ksolve(r);
    }

    VecX x = sol.head(n);
    VecX y = VecX::Zero(m);
    for (int i = 0; i < ma; ++i) y[active[i]] = sol[n + i];

    // primal-dual active set update on the raw multipliers: drop rows
    // whose multiplier points the wrong way, add rows the candidate
    // violates
    const VecX Cx = C * x;
    bool changed = false;
    const bool allow_drops = round < 6;  // add-only later so the loop settles
    for (int i = 0; i < m; ++i) {
      if (l[i] == u[i]) continue;
      if (side[i] != 0) {
        if (allow_drops && side[i] < 0 && y[i] > 1e-9) {
          side[i] = 0;
          changed = true;
        } else if (allow_drops && side[i] > 0 && y[i] < -1e-9) {
          side[i] = 0;
          changed = true;
        }
        continue;
      }
      const double scale = 1.0 + std::max(std::abs(Cx[i]),
                                          std::max(l[i] > -kInf ? std::abs(l[i]) : 0.0,
                                                   u[i] < kInf ? std::abs(u[i]) : 0.0));
      if (u[i] < kInf && Cx[i] - u[i] > 0.1 * eps * scale) {
        side[i] = 1;
        changed = true;
      } else if (l[i] > -kInf && l[i] - Cx[i] > 0.1 * eps * scale) {
        side[i] = -1;
        changed = true;
      }
    }
    if (changed) continue;

    // settled: silence residual noise on open sides before the KKT check
    for (int i = 0; i < m; ++i) {
      if (l[i] == u[i]) continue;
      if (l[i] <= -kInf && y[i] < 0.0) y[i] = 0.0;
      if (u[i] >= kInf && y[i] > 0.0) y[i] = 0.0;
    }

    double parts[3];
    const double res = kkt_residual(P, q, C, l, u, x, y, parts);
    if (res <= eps) {
      x_out = x;
      y_out = y;
      residual_out = res;
      return true;
    }
    if (std::getenv("CAPLAN_QP_DEBUG")) {
      std::fprintf(stderr, "polish failed: prim=%.3e dual=%.3e comp=%.3e active=%d/%d\n",
                   parts[0], parts[1], parts[2], ma, m);
    }
    return false;
  }
  if (std::getenv("CAPLAN_QP_DEBUG"))
    std::fprintf(stderr, "polish failed: active set did not settle\n");
  return false;
}

}  // namespace

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::iteration_limit: return "iteration_limit";
  }
  return "iteration_limit";
}

QpSolution solve_qp(const QuadraticProgram& qp, const QpSettings& st) {
  QpSolution out;
  const int n = qp.num_vars();
  if (n == 0) {
    out.status = QpStatus::optimal;
    out.kkt_residual = 0.0;
    return out;
  }

  // symmetrize the cost
  SpMat P0 = SpMat(0.5 * (SpMat(qp.P) + SpMat(qp.P.transpose())));
  Stacked stacked = stack_constraints(qp);
  const SpMat C0 = stacked.C;
  const VecX l0 = stacked.l, u0 = stacked.u;
  const int m = stacked.m;

  // unconstrained case: direct solve
  if (m == 0) {
    SpMat Preg = P0;
    std::vector<Eigen::Triplet<double>> t;
    for (int j = 0; j < n; ++j) t.emplace_back(j, j, 1e-12);
    SpMat eye(n, n);
    eye.setFromTriplets(t.begin(), t.end());
    Preg = SpMat(P0 + eye);
    Eigen::SimplicialLDLT<SpMat> ldlt(Preg);
    out.x = ldlt.solve(-qp.q);
    out.y = VecX::Zero(0);
    out.objective = 0.5 * out.x.dot(P0.selfadjointView<Eigen::Lower>() * out.x) +
                    qp.q.dot(out.x);
    out.kkt_residual = kkt_residual(P0, qp.q, C0, l0, u0, out.x, VecX::Zero(0));
    out.status = out.kkt_residual <= st.eps ? QpStatus::optimal : QpStatus::iteration_limit;
    return out;
  }

  // scaled copies
  SpMat P = P0, C = C0;
  VecX q = qp.q, l = l0, u = u0;
  const Scaling sc = ruiz_equilibrate(P, q, C, l, u);

  VecX rho_vec(m);
  double rho = st.rho;
  auto fill_rho = [&](double r) {
    for (int i = 0; i < m; ++i) rho_vec[i] = (l[i] == u[i]) ? r * 1e3 : r;
  };
  fill_rho(rho);

  KktSolver kkt;
  kkt.setup(P, C, st.sigma, rho_vec);
  if (!kkt.ok()) {
    out.status = QpStatus::iteration_limit;
    return out;
  }

  VecX x = VecX::Zero(n), z = VecX::Zero(m), y = VecX::Zero(m);
  if (st.warm_x && st.warm_x->size() == n) {
    x = sc.D.cwiseInverse().cwiseProduct(*st.warm_x);
    z = C * x;
  }
  if (st.warm_y && st.warm_y->size() == m)
    y = sc.E.cwiseInverse().cwiseProduct(*st.warm_y) * sc.c;

  VecX rhs(n + m), xz(n + m);
  VecX x_prev = x, y_prev = y;
  VecX x_long = x, y_long = y;
  int long_mark = 0;

  auto unscale_x = [&](const VecX& xs) { return VecX(sc.D.cwiseProduct(xs)); };
  auto unscale_y = [&](const VecX& ys) { return VecX(sc.E.cwiseProduct(ys) / sc.c); };

  int iter = 0;
  bool converged_admm = false;
  double loop_tol = st.eps_admm;
  int next_polish = 250;
  for (iter = 1; iter <= st.max_iterations; ++iter) {
    rhs.head(n) = st.sigma * x - q;
    rhs.tail(m) = z - y.cwiseQuotient(rho_vec);
    xz = kkt.solve(rhs);
    const VecX x_tilde = xz.head(n);
    const VecX nu = xz.tail(m);
    const VecX z_tilde = z + (nu - y).cwiseQuotient(rho_vec);

    x = st.alpha * x_tilde + (1.0 - st.alpha) * x;
    const VecX v = st.alpha * z_tilde + (1.0 - st.alpha) * z;
    VecX z_new = (v + y.cwiseQuotient(rho_vec)).cwiseMin(u).cwiseMax(l);
    y = y + rho_vec.cwiseProduct(v - z_new);
    z = z_new;

    if (iter % st.check_interval == 0 || iter == st.max_iterations) {
      // unscaled residuals
      const VecX xu = unscale_x(x);
      const VecX yu = unscale_y(y);
      const VecX zu = sc.E.cwiseInverse().cwiseProduct(z);
      const VecX Cx = C0 * xu;
      const VecX Px = P0.selfadjointView<Eigen::Lower>() * xu;
      const VecX Cty = C0.transpose() * yu;
      const double rp = inf_norm(Cx - zu);
      const double rd = inf_norm(Px + qp.q + Cty);
      const double ep = loop_tol * (1.0 + std::max(inf_norm(Cx), inf_norm(zu)));
      const double ed =
          loop_tol * (1.0 + std::max({inf_norm(Px), inf_norm(qp.q), inf_norm(Cty)}));
      if (std::getenv("CAPLAN_QP_DEBUG") && iter % 2000 == 0) {
        int worst = 0;
        (Cx - zu).cwiseAbs().maxCoeff(&worst);
        std::fprintf(stderr, "admm iter=%d rp=%.3e rd=%.3e rho=%.3e |x|=%.3e worst_row=%d/%d\n",
                     iter, rp, rd, rho, inf_norm(xu), worst, static_cast<int>(zu.size()));
      }
      if (st.enable_phase1 && iter >= st.phase1_after && rp > 1e-3) {
        // minimal-slack feasibility problem over [x; s]
        QuadraticProgram ph;
        const int nn = n + m;
        std::vector<Eigen::Triplet<double>> pt;
        for (int j = 0; j < n; ++j) pt.emplace_back(j, j, 1e-8);
        for (int i = 0; i < m; ++i) pt.emplace_back(n + i, n + i, 1.0);
        ph.P.resize(nn, nn);
        ph.P.setFromTriplets(pt.begin(), pt.end());
        ph.q = VecX::Zero(nn);
        ph.A_eq.resize(0, nn);
        ph.b_eq.resize(0);
        std::vector<double> ub_rows;
        int r = 0;
        for (int i = 0; i < m; ++i) {
          if (u0[i] < kInf) {
            ++r;
            ub_rows.push_back(u0[i]);
          }
          if (l0[i] > -kInf) {
            ++r;
            ub_rows.push_back(-l0[i]);
          }
        }
        ph.A_in.resize(r, nn);
        {
          std::vector<Eigen::Triplet<double>> rows;
          int rr = 0;
          std::vector<std::vector<std::pair<int, double>>> crows(m);
          for (int k = 0; k < C0.outerSize(); ++k)
            for (SpMat::InnerIterator it(C0, k); it; ++it)
              crows[it.row()].emplace_back(static_cast<int>(it.col()), it.value());
          for (int i = 0; i < m; ++i) {
            if (u0[i] < kInf) {
              for (auto& [col, val] : crows[i]) rows.emplace_back(rr, col, val);
              rows.emplace_back(rr, n + i, -1.0);
              ++rr;
            }
            if (l0[i] > -kInf) {
              for (auto& [col, val] : crows[i]) rows.emplace_back(rr, col, -val);
              rows.emplace_back(rr, n + i, -1.0);
              ++rr;
            }
          }
          ph.A_in.setFromTriplets(rows.begin(), rows.end());
        }
        ph.u_in = Eigen::Map<VecX>(ub_rows.data(), r);
        ph.lb = VecX::Constant(nn, -kInf);
        ph.ub = VecX::Constant(nn, kInf);
        for (int i = 0; i < m; ++i) ph.lb[n + i] = 0.0;

        QpSettings pst;
        pst.enable_phase1 = false;
        pst.eps = 1e-7;
        pst.max_iterations = st.max_iterations;
        const QpSolution psol = solve_qp(ph, pst);
        if (psol.status == QpStatus::optimal) {
          double worst = 0.0;
          for (int i = 0; i < m; ++i) {
            const double scale =
                1.0 + std::max(u0[i] < kInf ? std::abs(u0[i]) : 0.0,
                               l0[i] > -kInf ? std::abs(l0[i]) : 0.0);
            worst = std::max(worst, psol.x[n + i] / scale);
          }
          if (worst > 1e-6) {
            out.status = QpStatus::infeasible;
            out.iterations = iter;
            return out;
          }
          // feasible: restart the loop from the slack solution
          x = sc.D.cwiseInverse().cwiseProduct(psol.x.head(n));
          z = C * x;
          y.setZero();
        }
      }
      const bool try_polish_now = iter >= next_polish && rp < 1.0 && rd < 1.0;
      if (try_polish_now && !(rp <= ep && rd <= ed)) {
        next_polish = iter * 2;
        VecX xp, yp;
        double res = 0.0;
        if (polish(P0, qp.q, C0, l0, u0, xu, yu, st.eps, xp, yp, res)) {
          out.x = xp;
          out.y = yp;
          out.kkt_residual = res;
          out.polished = true;
          out.status = QpStatus::optimal;
          out.iterations = iter;
          out.objective = 0.5 * out.x.dot(P0.selfadjointView<Eigen::Lower>() * out.x) +
                          qp.q.dot(out.x);
          return out;
        }
      }
      if (rp <= ep && rd <= ed) {
        // converged at the current tolerance; try to polish to full accuracy
        VecX xp, yp;
        double res = 0.0;
        if (polish(P0, qp.q, C0, l0, u0, xu, yu, st.eps, xp, yp, res)) {
          out.x = xp;
          out.y = yp;
          out.kkt_residual = res;
          out.polished = true;
          out.status = QpStatus::optimal;
          out.iterations = iter;
          out.objective = 0.5 * out.x.dot(P0.selfadjointView<Eigen::Lower>() * out.x) +
                          qp.q.dot(out.x);
          return out;
        }
        const double full = kkt_residual(P0, qp.q, C0, l0, u0, xu, yu);
        if (full <= st.eps) {
          converged_admm = true;
          break;
        }
        if (loop_tol <= st.eps) {
          converged_admm = true;  // as tight as the loop will get
          break;
        }
        loop_tol = std::max(loop_tol * 0.01, st.eps);
      }

      // infeasibility certificates, over a short and a long window
      auto primal_cert = [&](const VecX& dy_scaled) {
        const double dy_norm = inf_norm(unscale_y(dy_scaled));
        if (dy_norm <= 1e-14) return false;
        const VecX dyu = unscale_y(dy_scaled);
        if (inf_norm(C0.transpose() * dyu) > st.eps_infeas * dy_norm) return false;
        double support = 0.0;
        for (int i = 0; i < m; ++i) {
          const double dpi = std::max(dyu[i], 0.0), dmi = std::min(dyu[i], 0.0);
          if (u0[i] < kInf)
            support += u0[i] * dpi;
          else if (dpi > st.eps_infeas * dy_norm)
            return false;
          if (l0[i] > -kInf)
            support += l0[i] * dmi;
          else if (-dmi > st.eps_infeas * dy_norm)
            return false;
        }
        return support <= -st.eps_infeas * dy_norm;
      };
      if (iter - long_mark >= 500) {
        if (primal_cert(y - y_long)) {
          out.status = QpStatus::infeasible;
          out.iterations = iter;
          return out;
        }
        x_long = x;
        y_long = y;
        long_mark = iter;
      }
      const VecX dy = y - y_prev;
      const double dy_norm = inf_norm(unscale_y(dy));
      if (dy_norm > 1e-14) {
        const VecX dyu = unscale_y(dy);
        bool cert = inf_norm(C0.transpose() * dyu) <= st.eps_infeas * dy_norm;
        if (cert) {
          double support = 0.0;
          for (int i = 0; i < m; ++i) {
            const double dpi = std::max(dyu[i], 0.0), dmi = std::min(dyu[i], 0.0);
            if (u0[i] < kInf)
              support += u0[i] * dpi;
            else if (dpi > st.eps_infeas * dy_norm) {
              cert = false;
              break;
            }
            if (l0[i] > -kInf)
              support += l0[i] * dmi;
            else if (-dmi > st.eps_infeas * dy_norm) {
              cert = false;
              break;
            }
          }
          if (cert && support <= -st.eps_infeas * dy_norm) {
            out.status = QpStatus::infeasible;
            out.iterations = iter;
            return out;
          }
        }
      }
      const VecX dx = x - x_prev;
      const double dx_norm = inf_norm(unscale_x(dx));
      if (dx_norm > 1e-14) {
        const VecX dxu = unscale_x(dx);
        if (inf_norm(P0.selfadjointView<Eigen::Lower>() * dxu) <= st.eps_infeas * dx_norm &&
            qp.q.dot(dxu) <= -st.eps_infeas * dx_norm) {
          const VecX Cdx = C0 * dxu;
          bool cert = true;
          for (int i = 0; i < m && cert; ++i) {
            if (u0[i] < kInf && Cdx[i] > st.eps_infeas * dx_norm) cert = false;
            if (l0[i] > -kInf && Cdx[i] < -st.eps_infeas * dx_norm) cert = false;
          }
          if (cert) {
            out.status = QpStatus::infeasible;  // unbounded below == dual infeasible
            out.iterations = iter;
            return out;
          }
        }
      }
      x_prev = x;
      y_prev = y;

      // adaptive rho
      if (st.adaptive_rho && iter % (st.check_interval * 8) == 0) {
        const double num = rp / (1.0 + std::max(inf_norm(Cx), inf_norm(zu)));
        const double den = rd / (1.0 + std::max({inf_norm(Px), inf_norm(qp.q), inf_norm(Cty)}));
        if (den > 1e-16 && num > 1e-16) {
          const double ratio = std::sqrt(num / den);
          if (ratio > 5.0 || ratio < 0.2) {
            rho = std::clamp(rho * ratio, 1e-3, 1e2);
            fill_rho(rho);
            kkt.setup(P, C, st.sigma, rho_vec);
            if (!kkt.ok()) {
              if (std::getenv("CAPLAN_QP_DEBUG"))
                std::fprintf(stderr, "kkt refactor failed at iter=%d rho=%.3e\n", iter, rho);
              break;
            }
          }
        }
      }
    }
  }

  out.iterations = std::min(iter, st.max_iterations);
  VecX xu = unscale_x(x);
  VecX yu = unscale_y(y);
  out.x = xu;
  out.y = yu;
  out.kkt_residual = kkt_residual(P0, qp.q, C0, l0, u0, xu, yu);
  out.status = (converged_admm && out.kkt_residual <= st.eps) ? QpStatus::optimal
                                                              : QpStatus::iteration_limit;
  out.objective =
      0.5 * out.x.dot(P0.selfadjointView<Eigen::Lower>() * out.x) + qp.q.dot(out.x);
  return out;
}

void dump_qp(const QuadraticProgram& qp, const std::string& path) {
  std::ofstream f(path);
  f.precision(17);
  auto dump_mat = [&](const char* name, const SpMat& M) {
    f << name << " " << M.rows() << " " << M.cols() << "\n";
    Eigen::MatrixXd D = Eigen::MatrixXd(M);
    f << D << "\n";
  };
  auto dump_vec = [&](const char* name, const VecX& v) {
    f << name << " " << v.size() << "\n" << v.transpose() << "\n";
  };
  dump_mat("P", qp.P);
  dump_vec("q", qp.q);
  dump_mat("A_eq", qp.A_eq);
  dump_vec("b_eq", qp.b_eq);
  dump_mat("A_in", qp.A_in);
  dump_vec("u_in", qp.u_in);
  dump_vec("lb", qp.lb);
  dump_vec("ub", qp.ub);
}

}  // namespace caplan
