#include <doctest.h>

#include <random>

#include "caplan/qp.hpp"
#include "support/qp_bruteforce.hpp"

using namespace caplan;

namespace {

SpMat sparse_of(const Eigen::MatrixXd& M) {
  SpMat S(M.rows(), M.cols());
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (M(i, j) != 0.0) t.emplace_back(i, j, M(i, j));
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

QuadraticProgram make_qp(const Eigen::MatrixXd& P, const Eigen::VectorXd& q,
                         const Eigen::MatrixXd& A, const Eigen::VectorXd& b) {
  QuadraticProgram qp;
  qp.P = sparse_of(P);
  qp.q = q;
  qp.A_eq.resize(0, q.size());
  qp.b_eq.resize(0);
  qp.A_in = sparse_of(A);
  qp.u_in = b;
  return qp;
}

}  // namespace

TEST_CASE("min x^2 subject to x >= 1") {
  QuadraticProgram qp;
  qp.P = sparse_of(Eigen::MatrixXd::Constant(1, 1, 2.0));
  qp.q = Eigen::VectorXd::Zero(1);
  qp.A_eq.resize(0, 1);
  qp.b_eq.resize(0);
  qp.A_in = sparse_of(Eigen::MatrixXd::Constant(1, 1, -1.0));  // -x <= -1
  qp.u_in = Eigen::VectorXd::Constant(1, -1.0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  CHECK(sol.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.kkt_residual <= 1e-6);
}

TEST_CASE("projection onto the zero-sum hyperplane") {
  const int n = 7;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = u(rng);

  QuadraticProgram qp;
  qp.P = sparse_of(2.0 * Eigen::MatrixXd::Identity(n, n));
  qp.q = -2.0 * c;
  qp.A_eq = sparse_of(Eigen::MatrixXd::Ones(1, n));
  qp.b_eq = Eigen::VectorXd::Zero(1);
  qp.A_in.resize(0, n);
  qp.u_in.resize(0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  const Eigen::VectorXd expected = c.array() - c.mean();
  CHECK((sol.x - expected).norm() < 1e-6);
}

TEST_CASE("unconstrained QP solves directly") {
  QuadraticProgram qp;
  Eigen::MatrixXd P(2, 2);
  P << 4, 1, 1, 3;
  qp.P = sparse_of(P);
  qp.q = Eigen::VectorXd::Constant(2, 1.0);
  qp.A_eq.resize(0, 2);
  qp.b_eq.resize(0);
  qp.A_in.resize(0, 2);
  qp.u_in.resize(0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  const Eigen::VectorXd expected = -P.ldlt().solve(qp.q);
  CHECK((sol.x - expected).norm() < 1e-5);
}

TEST_CASE("random QPs match brute-force active-set enumeration") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_int_distribution<int> nd(2, 8), md(1, 10);

  int checked = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = nd(rng), m = md(rng);
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = g(rng);
    const Eigen::MatrixXd P = B.transpose() * B + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd q(n);
    for (int i = 0; i < n; ++i) q[i] = g(rng);
    Eigen::MatrixXd A(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = g(rng);
    Eigen::VectorXd x0(n);
    for (int i = 0; i < n; ++i) x0[i] = 0.3 * g(rng);
    Eigen::VectorXd b = A * x0;
    for (int i = 0; i < m; ++i) b[i] += std::abs(g(rng)) * 0.5;  // feasible by construction

    const caplan_test::DenseQp dqp{P, q, A, b};
    const auto expected = caplan_test::brute_force_qp(dqp);
    REQUIRE(expected.feasible);

    const QpSolution sol = solve_qp(make_qp(P, q, A, b));
    REQUIRE(sol.status == QpStatus::optimal);
    CHECK(std::abs(sol.objective - expected.objective) <=
          1e-5 * (1.0 + std::abs(expected.objective)));
    ++checked;
  }
  CHECK(checked == 60);
}

TEST_CASE("contradictory constraints are declared infeasible") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4;
    Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n) * 2.0;
    Eigen::VectorXd q = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd A(2, n);
    Eigen::VectorXd row(n);
    for (int j = 0; j < n; ++j) row[j] = g(rng);
    row.normalize();
    A.row(0) = row.transpose();         // row * x <= 1
    A.row(1) = -row.transpose();        // row * x >= 2
    Eigen::VectorXd b(2);
    b << 1.0, -2.0;
    const QpSolution sol = solve_qp(make_qp(P, q, A, b));
    CHECK(sol.status == QpStatus::infeasible);
  }
}

TEST_CASE("variable bounds participate") {
  QuadraticProgram qp;
  qp.P = sparse_of(2.0 * Eigen::MatrixXd::Identity(2, 2));
  qp.q = Eigen::VectorXd::Constant(2, -10.0);  // pull toward +5
  qp.A_eq.resize(0, 2);
  qp.b_eq.resize(0);
  qp.A_in.resize(0, 2);
  qp.u_in.resize(0);
  qp.lb = Eigen::VectorXd::Constant(2, -1.0);
  qp.ub = Eigen::VectorXd::Constant(2, 2.0);
  const QpSolution sol = solve_qp(qp);
  REQUIRE(sol.status == QpStatus::optimal);
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(2.0));
}
