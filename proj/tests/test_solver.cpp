#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tcreg/solver.hpp"

using namespace tcreg;
using tcreg::testing::Gen;

namespace {

MixedLsProblem pos_only(Eigen::MatrixXd a, Eigen::VectorXd y) {
  return {Eigen::MatrixXd(y.size(), 0), std::move(a), std::move(y), std::nullopt};
}

Eigen::VectorXd fitted(const MixedLsProblem& pr, const Solution& s) {
  return pr.a_free * s.beta_free + pr.a_pos * s.beta_pos;
}

// Random problem with independent columns, optionally with hinge-like nonnegative columns.
MixedLsProblem random_problem(Gen& g, bool capped) {
  const int mf = g.integer(0, 3), mp = g.integer(1, 10);
  const int n = mf + mp + g.integer(2, 8);
  MixedLsProblem pr;
  pr.a_free = g.matrix(n, mf);
  pr.a_pos = g.coin() ? g.matrix(n, mp) : g.matrix(n, mp, 0.0, 1.0);
  pr.y = g.vector(n);
  if (capped) pr.v_cap = g.uniform(0.01, 2.0);
  return pr;
}

}  // namespace

TEST_CASE("one column, interior optimum") {
  Eigen::MatrixXd a(2, 1);
  a << 1, 1;
  const auto pr = pos_only(a, Eigen::Vector2d(1, 2));
  const Solution s = solve_mixed_nnls(pr);
  CHECK(s.converged);
  CHECK(s.beta_pos(0) == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("one column, boundary optimum") {
  Eigen::MatrixXd a(2, 1);
  a << 1, 1;
  const auto pr = pos_only(a, Eigen::Vector2d(-1, -2));
  const Solution s = solve_mixed_nnls(pr);
  CHECK(s.beta_pos(0) == 0.0);
  const KktDiagnostics k = kkt_report(pr, s);
  CHECK(k.complementarity_worst == 0.0);
  CHECK(k.dual_infeasibility == 0.0);
}

TEST_CASE("two columns against exhaustive enumeration") {
  Eigen::MatrixXd a(2, 2);
  a << 1, 1, 0, 1;
  const auto pr = pos_only(a, Eigen::Vector2d(1, -1));
  const auto oracle = tcreg::testing::brute_force_mixed_nnls(pr.a_free, pr.a_pos, pr.y);
  REQUIRE(oracle.certified == 1);
  for (SolverMethod m : {SolverMethod::kActiveSet, SolverMethod::kAcceleratedGradient}) {
    SolverOptions o;
    o.method = m;
    o.tol = 1e-12;
    const Solution s = solve_mixed_nnls(pr, o);
    CHECK((fitted(pr, s) - oracle.fitted).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("kkt report on exact, perturbed and boundary solutions") {
  Eigen::MatrixXd a(2, 1);
  a << 1, 1;
  const auto pr = pos_only(a, Eigen::Vector2d(1, 2));
  Solution exact;
  exact.beta_free = Eigen::VectorXd(0);
  exact.beta_pos = Eigen::VectorXd::Constant(1, 1.5);
  CHECK(kkt_report(pr, exact).worst() <= 1e-12);

  Solution off = exact;
  off.beta_pos(0) += 0.1;
  CHECK(kkt_report(pr, off).stationarity_pos > 0.01);

  const auto neg = pos_only(a, Eigen::Vector2d(-1, -2));
  Solution zero = exact;
  zero.beta_pos(0) = 0.0;
  const KktDiagnostics k = kkt_report(neg, zero);
  CHECK(k.complementarity_worst == 0.0);
  CHECK(k.dual_infeasibility == 0.0);
}

TEST_CASE("capped simplex projection examples") {
  CHECK((project_capped_simplex(Eigen::Vector2d(0.5, 0.3), 1.0) - Eigen::Vector2d(0.5, 0.3)).norm() == 0.0);
  CHECK(project_capped_simplex(Eigen::Vector2d(-1, -2), 5.0).norm() == 0.0);
  CHECK((project_capped_simplex(Eigen::Vector2d(2, -1), 1.0) - Eigen::Vector2d(1, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(project_capped_simplex(Eigen::Vector2d(1, 1), -1.0), SpecError);
}

TEST_CASE("capped simplex projection: idempotent, nonexpansive, matches bisection") {
  Gen g(11);
  for (int trial = 0; trial < 300; ++trial) {
    const int m = g.integer(1, 12);
    const Eigen::VectorXd u = g.vector(m, 2.0), v = g.vector(m, 2.0);
    Eigen::VectorXd c(m);
    for (int i = 0; i < m; ++i) c(i) = trial % 2 ? g.uniform(0.1, 3.0) : 1.0;
    const double cap = g.uniform(0.0, 3.0);
    const Eigen::VectorXd pu = project_weighted_capped_simplex(u, c, cap);
    const Eigen::VectorXd pv = project_weighted_capped_simplex(v, c, cap);
    CHECK((project_weighted_capped_simplex(pu, c, cap) - pu).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pu - pv).norm() <= (u - v).norm() + 1e-12);
    CHECK((pu - tcreg::testing::bisection_capped_projection(u, c, cap)).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(pu.minCoeff() >= 0.0);
    CHECK(pu.dot(c) <= cap + 1e-12);
  }
}

TEST_CASE("random problems match exhaustive enumeration") {
  Gen g(2024);
  for (int trial = 0; trial < 150; ++trial) {
    const bool capped = trial % 3 == 2;
    const MixedLsProblem pr = random_problem(g, capped);
    const auto oracle = tcreg::testing::brute_force_mixed_nnls(pr.a_free, pr.a_pos, pr.y, pr.v_cap);
    REQUIRE(oracle.certified >= 1);
    const Solution s = solve_mixed_nnls(pr);
    CHECK(s.converged);
    CHECK((fitted(pr, s) - oracle.fitted).cwiseAbs().maxCoeff() < 1e-9);
    CHECK(s.beta_pos.minCoeff() >= 0.0);
    if (pr.v_cap) CHECK(s.beta_pos.sum() <= *pr.v_cap + 1e-12);
    CHECK(kkt_report(pr, s).worst() <= 10 * SolverOptions{}.tol);
    CHECK(s.objective <= 0.5 * pr.y.squaredNorm() + 1e-12);
  }
}

TEST_CASE("accelerated gradient agrees with the oracle") {
  Gen g(77);
  SolverOptions o;
  o.method = SolverMethod::kAcceleratedGradient;
  o.tol = 1e-11;
  o.max_iter = 400000;
  for (int trial = 0; trial < 40; ++trial) {
    const MixedLsProblem pr = random_problem(g, trial % 2 == 1);
    const auto oracle = tcreg::testing::brute_force_mixed_nnls(pr.a_free, pr.a_pos, pr.y, pr.v_cap);
    const Solution s = solve_mixed_nnls(pr, o);
    CHECK((fitted(pr, s) - oracle.fitted).cwiseAbs().maxCoeff() < 1e-6);
    if (pr.v_cap) CHECK(s.beta_pos.sum() <= *pr.v_cap + 1e-12);
  }
}

TEST_CASE("zero columns are pinned and a zero cap leaves the free block alone") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 2);
  a.col(1) << 1, 0, 0;
  Eigen::MatrixXd f = Eigen::MatrixXd::Ones(3, 1);
  MixedLsProblem pr{f, a, Eigen::Vector3d(3, 1, 2), 0.0};
  Solution s = solve_mixed_nnls(pr);
  CHECK(s.beta_pos.norm() == 0.0);
  CHECK(s.beta_free(0) == doctest::Approx(2.0));
  pr.v_cap.reset();
  s = solve_mixed_nnls(pr);
  CHECK(s.beta_pos(0) == 0.0);
  CHECK(s.beta_pos(1) == doctest::Approx(1.5));
}

TEST_CASE("inequality least squares: single halfspace") {
  Eigen::SparseMatrix<double> m(3, 3), c(1, 3);
  m.setIdentity();
  c.insert(0, 0) = 1.0;
  c.insert(0, 1) = -2.0;
  c.insert(0, 2) = 1.0;
  const IneqLsResult r = solve_ls_linear_ineq({m, Eigen::Vector3d(0, 0, 1), c, 0.0});
  CHECK(r.converged);
  // y - (c^T y / |c|^2) c
  const Eigen::Vector3d cy(1, -2, 1), y(0, 0, 1);
  const Eigen::Vector3d expect = y - (cy.dot(y) / cy.squaredNorm()) * cy;
  CHECK((r.fitted - expect).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("inequality least squares: inactive and empty constraint sets") {
  Eigen::SparseMatrix<double> m(3, 3), c(1, 3), none(0, 3);
  m.setIdentity();
  c.insert(0, 0) = 1.0;
  c.insert(0, 1) = -2.0;
  c.insert(0, 2) = 1.0;
  const Eigen::Vector3d concave(0, 1, 1.2);
  CHECK((solve_ls_linear_ineq({m, concave, c, 0.0}).fitted - concave).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((solve_ls_linear_ineq({m, concave, none, 0.0}).fitted - concave).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("inequality least squares: fitted values do not depend on rho") {
  Gen g(5);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = g.integer(4, 12), n = g.integer(3, 20);
    Eigen::SparseMatrix<double> m(n, k), c(k - 2, k);
    std::vector<Eigen::Triplet<double>> mt;
    for (int i = 0; i < n; ++i) mt.emplace_back(i, g.integer(0, k - 1), 1.0);
    m.setFromTriplets(mt.begin(), mt.end());
    for (int i = 0; i + 2 < k; ++i) {
      c.insert(i, i) = 1.0;
      c.insert(i, i + 1) = -2.0;
      c.insert(i, i + 2) = 1.0;
    }
    const Eigen::VectorXd y = g.vector(n);
    Eigen::VectorXd ref;
    for (double rho : {0.1, 1.0, 10.0}) {
      IneqLsOptions o;
      o.rho = rho;
      const IneqLsResult r = solve_ls_linear_ineq({m, y, c, 0.0}, o);
      CHECK(r.primal_residual <= 1e-8);
      if (ref.size() == 0) {
        ref = r.fitted;
      } else {
        CHECK((r.fitted - ref).cwiseAbs().maxCoeff() < 1e-6);
      }
    }
  }
}

TEST_CASE("dimension errors") {
  MixedLsProblem pr{Eigen::MatrixXd(2, 1), Eigen::MatrixXd(3, 1), Eigen::VectorXd(3), std::nullopt};
  CHECK_THROWS_AS(solve_mixed_nnls(pr), SpecError);
}
