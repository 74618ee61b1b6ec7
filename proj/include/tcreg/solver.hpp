#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "tcreg/errors.hpp"
#include "tcreg/types.hpp"

namespace tcreg {

/// min 1/2 ||y - A_free b - A_pos w||^2  s.t.  w >= 0  (and sum w <= v_cap when set).
struct MixedLsProblem {
  Eigen::MatrixXd a_free;
  Eigen::MatrixXd a_pos;
  Eigen::VectorXd y;
  std::optional<double> v_cap;

  Index n() const { return y.size(); }
  void validate() const;
};

struct Solution {
  Eigen::VectorXd beta_free;
  Eigen::VectorXd beta_pos;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = false;
};

enum class SolverMethod {
  kActiveSet,            ///< exact active-set on normalized columns (default)
  kAcceleratedGradient,  ///< FISTA with adaptive restart and capped-simplex projection
};

struct SolverOptions {
  double tol = 1e-8;  ///< relative to ||y||
  int max_iter = 50000;
  SolverMethod method = SolverMethod::kActiveSet;
};

Solution solve_mixed_nnls(const MixedLsProblem& problem, const SolverOptions& options = {});

/// Residuals recomputed from scratch. Gradient entries are taken per unit column
/// norm and divided by max(||y||, 1e-300), so they compare directly with `tol`.
struct KktDiagnostics {
  double stationarity_free = 0.0;   ///< max |grad| over free coordinates
  double stationarity_pos = 0.0;    ///< max |grad + mu| over positive hinge weights
  double dual_infeasibility = 0.0;  ///< max (-(grad + mu))_+ over zero hinge weights
  double complementarity_worst = 0.0;  ///< max |w_j (grad_j + mu)| (scaled)
  double feasibility_worst = 0.0;      ///< max(-w_j, sum w - cap)_+
  double cap_multiplier = 0.0;         ///< mu, zero unless the cap binds

  double worst() const {
    return std::max({stationarity_free, stationarity_pos, dual_infeasibility, complementarity_worst,
                     feasibility_worst});
  }
};

KktDiagnostics kkt_report(const MixedLsProblem& problem, const Solution& solution);

/// Euclidean projection of v onto {x >= 0, sum_i c_i x_i <= cap} with positive weights c:
/// x_i = (v_i - tau c_i)_+ where tau >= 0 solves sum_i c_i (v_i - tau c_i)_+ = cap.
template <typename DerivedV, typename DerivedC>
Eigen::Matrix<typename DerivedV::Scalar, Eigen::Dynamic, 1> project_weighted_capped_simplex(
    const Eigen::MatrixBase<DerivedV>& v, const Eigen::MatrixBase<DerivedC>& c,
    typename DerivedV::Scalar cap) {
  using Scalar = typename DerivedV::Scalar;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (cap < Scalar(0)) throw SpecError("capped-simplex projection: cap must be nonnegative");
  Vector x = v.cwiseMax(Scalar(0));
  if (x.dot(c) <= cap) return x;

  // Breakpoints tau_i = v_i / c_i, descending; only positive entries matter.
  std::vector<Index> order;
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) > Scalar(0)) order.push_back(i);
  }
  std::sort(order.begin(), order.end(),
            [&](Index a, Index b) { return v(a) * c(b) > v(b) * c(a); });
  Scalar cv(0), cc(0), tau(0);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Index i = order[k];
    cv += c(i) * v(i);
    cc += c(i) * c(i);
    tau = (cv - cap) / cc;
    const Scalar next = k + 1 < order.size() ? v(order[k + 1]) / c(order[k + 1]) : Scalar(0);
    if (tau >= next) break;
  }
  for (Index i = 0; i < x.size(); ++i) x(i) = std::max(Scalar(0), v(i) - tau * c(i));
  return x;
}

/// Projection onto {x >= 0, sum x <= cap}.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> project_capped_simplex(
    const Eigen::MatrixBase<Derived>& v, typename Derived::Scalar cap) {
  using Vector = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>;
  return project_weighted_capped_simplex(v, Vector::Ones(v.size()), cap);
}

/// min 1/2 ||y - M theta||^2 + ridge/2 ||theta||^2  s.t.  C theta <= 0.
struct IneqLsProblem {
  Eigen::SparseMatrix<double> m;
  Eigen::VectorXd y;
  Eigen::SparseMatrix<double> c;
  double ridge = 0.0;

  void validate() const;
};

struct IneqLsOptions {
  double tol = 1e-9;
  int max_iter = 20000;
  double rho = 1.0;
  double relaxation = 1.6;
  bool polish = true;
};

struct IneqLsResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd fitted;  ///< M theta
  double objective = 0.0;
  double primal_residual = 0.0;  ///< max (C theta)_+ over rows of unit norm
  double dual_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool polished = false;
};

/// ADMM on the split z = C theta, z <= 0 (rows of C normalized internally), followed by
/// an equality-constrained polish on the detected active set.
IneqLsResult solve_ls_linear_ineq(const IneqLsProblem& problem, const IneqLsOptions& options = {});

}  // namespace tcreg
