#include "tcreg/solver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

namespace tcreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

void MixedLsProblem::validate() const {
  if (a_free.rows() != y.size() || a_pos.rows() != y.size()) {
    throw SpecError("mixed least squares: matrix rows must match the response length");
  }
  if (!a_free.allFinite() || !a_pos.allFinite() || !y.allFinite()) {
    throw DataError("mixed least squares: non-finite input");
  }
  if (v_cap && !(*v_cap >= 0.0)) throw SpecError("mixed least squares: cap must be nonnegative");
}

void IneqLsProblem::validate() const {
  if (m.rows() != y.size()) throw SpecError("inequality least squares: M rows must match y");
  if (c.cols() != m.cols()) throw SpecError("inequality least squares: C and M column counts differ");
  if (!(ridge >= 0.0)) throw SpecError("inequality least squares: ridge must be nonnegative");
  if (!y.allFinite()) throw DataError("inequality least squares: non-finite response");
}

namespace {

VectorXd column_norms(const MatrixXd& a) {
  VectorXd s(a.cols());
  for (Index j = 0; j < a.cols(); ++j) s(j) = a.col(j).norm();
  return s;
}

double y_scale(const VectorXd& y) { return std::max(y.norm(), 1e-300); }

VectorXd least_squares(const MatrixXd& B, const VectorXd& rhs) {
  if (B.cols() == 0) return VectorXd(0);
  return B.completeOrthogonalDecomposition().solve(rhs);
}

// Shared state of the active-set solvers. Columns are normalized only inside the
// least-squares subproblems and in the pricing step; the iterates stay in original units.
struct ActiveSet {
  const MixedLsProblem& pr;
  const SolverOptions& opt;
  VectorXd sf, sp;
  std::vector<Index> free_cols;  // nonzero free columns
  double threshold;
  int iterations = 0;

  ActiveSet(const MixedLsProblem& p, const SolverOptions& o) : pr(p), opt(o) {
    sf = column_norms(pr.a_free);
    sp = column_norms(pr.a_pos);
    for (Index k = 0; k < sf.size(); ++k) {
      if (sf(k) > 0.0) free_cols.push_back(k);
    }
    threshold = opt.tol * y_scale(pr.y);
  }

  bool exhausted() const { return iterations >= opt.max_iter; }

  VectorXd residual(const VectorXd& b, const VectorXd& w, const std::vector<Index>& P) const {
    VectorXd r = pr.y - pr.a_free * b;
    for (Index i : P) r -= w(i) * pr.a_pos.col(i);
    return r;
  }

  // Least squares of y on the free columns and the hinge columns in P.
  void solve_plain(const std::vector<Index>& P, VectorXd& zb, VectorXd& zw) {
    ++iterations;
    const auto nf = static_cast<Index>(free_cols.size());
    MatrixXd B(pr.n(), nf + static_cast<Index>(P.size()));
    for (Index c = 0; c < nf; ++c) B.col(c) = pr.a_free.col(free_cols[c]) / sf(free_cols[c]);
    for (std::size_t a = 0; a < P.size(); ++a) B.col(nf + static_cast<Index>(a)) = pr.a_pos.col(P[a]) / sp(P[a]);
    const VectorXd coef = least_squares(B, pr.y);
    zb = VectorXd::Zero(pr.a_free.cols());
    for (Index c = 0; c < nf; ++c) zb(free_cols[c]) = coef(c) / sf(free_cols[c]);
    zw = VectorXd::Zero(pr.a_pos.cols());
    for (std::size_t a = 0; a < P.size(); ++a) zw(P[a]) = coef(nf + static_cast<Index>(a)) / sp(P[a]);
  }

  // Same with sum_{i in P} w_i = cap enforced by eliminating w_pivot.
  void solve_capped(const std::vector<Index>& P, Index pivot, double cap, VectorXd& zb, VectorXd& zw) {
    ++iterations;
    const auto nf = static_cast<Index>(free_cols.size());
    MatrixXd B(pr.n(), nf + static_cast<Index>(P.size()));
    VectorXd scale = VectorXd::Zero(static_cast<Index>(P.size()));
    for (Index c = 0; c < nf; ++c) B.col(c) = pr.a_free.col(free_cols[c]) / sf(free_cols[c]);
    for (std::size_t a = 0; a < P.size(); ++a) {
      auto col = B.col(nf + static_cast<Index>(a));
      if (P[a] == pivot) {
        col.setZero();
        continue;
      }
      col = pr.a_pos.col(P[a]) - pr.a_pos.col(pivot);
      const double nrm = col.norm();
      if (nrm > 0.0) {
        col /= nrm;
        scale(static_cast<Index>(a)) = nrm;
      }
    }
    const VectorXd rhs = pr.y - cap * pr.a_pos.col(pivot);
    const VectorXd coef = least_squares(B, rhs);
    zb = VectorXd::Zero(pr.a_free.cols());
    for (Index c = 0; c < nf; ++c) zb(free_cols[c]) = coef(c) / sf(free_cols[c]);
    zw = VectorXd::Zero(pr.a_pos.cols());
    double rest = 0.0;
    for (std::size_t a = 0; a < P.size(); ++a) {
      const double s = scale(static_cast<Index>(a));
      if (P[a] == pivot || s == 0.0) continue;
      zw(P[a]) = coef(nf + static_cast<Index>(a)) / s;
      rest += zw(P[a]);
    }
    zw(pivot) = cap - rest;
  }

  // Inner loop shared by both variants: move from the feasible (b, w) toward the
  // subproblem minimizer on P, dropping coordinates that hit zero. Returns false
  // when `entering` is rejected on the first solve.
  template <typename Solve>
  bool settle(std::vector<Index>& P, VectorXd& b, VectorXd& w, Index entering, Solve&& solve) {
    bool first = true;
    while (!exhausted()) {
      VectorXd zb, zw;
      solve(P, zb, zw);
      bool all_positive = true;
      for (Index i : P) all_positive = all_positive && zw(i) > 0.0;
      if (all_positive) {
        b = zb;
        for (Index i : P) w(i) = zw(i);
        return true;
      }
      if (first && entering >= 0 && !(zw(entering) > 0.0)) {
        P.erase(std::find(P.begin(), P.end(), entering));
        w(entering) = 0.0;
        return false;
      }
      first = false;
      double alpha = 1.0;
      Index blocking = -1;
      for (Index i : P) {
        if (zw(i) <= 0.0) {
          const double a = w(i) / (w(i) - zw(i));
          if (a < alpha || blocking < 0) {
            alpha = a;
            blocking = i;
          }
        }
      }
      b += alpha * (zb - b);
      for (Index i : P) w(i) += alpha * (zw(i) - w(i));
      w(blocking) = 0.0;
      std::vector<Index> keep;
      for (Index i : P) {
        if (w(i) > 0.0) {
          keep.push_back(i);
        } else {
          w(i) = 0.0;
        }
      }
      P = std::move(keep);
      if (P.empty() && entering < 0) return true;
    }
    return true;
  }

  // Lawson-Hanson with an unconstrained block.
  bool run_uncapped(VectorXd& b, VectorXd& w) {
    const Index mp = pr.a_pos.cols();
    b = VectorXd::Zero(pr.a_free.cols());
    w = VectorXd::Zero(mp);
    std::vector<Index> P;
    std::vector<char> in_p(static_cast<std::size_t>(mp), 0), banned(static_cast<std::size_t>(mp), 0);
    auto plain = [&](const std::vector<Index>& S, VectorXd& zb, VectorXd& zw) { solve_plain(S, zb, zw); };
    settle(P, b, w, -1, plain);
    while (!exhausted()) {
      const VectorXd g = pr.a_pos.transpose() * residual(b, w, P);
      Index best = -1;
      double best_g = threshold;
      for (Index j = 0; j < mp; ++j) {
        if (in_p[static_cast<std::size_t>(j)] || banned[static_cast<std::size_t>(j)] || sp(j) == 0.0) continue;
        const double gj = g(j) / sp(j);
        if (gj > best_g) {
          best_g = gj;
          best = j;
        }
      }
      if (best < 0) return true;
      P.push_back(best);
      const bool accepted = settle(P, b, w, best, plain);
      std::fill(in_p.begin(), in_p.end(), 0);
      for (Index i : P) in_p[static_cast<std::size_t>(i)] = 1;
      if (accepted) {
        std::fill(banned.begin(), banned.end(), 0);
      } else {
        banned[static_cast<std::size_t>(best)] = 1;
      }
    }
    return false;
  }

  // Active set on {w >= 0, sum w = cap}, started from a feasible point.
  bool run_capped(double cap, VectorXd& b, VectorXd& w) {
    const Index mp = pr.a_pos.cols();
    std::vector<Index> P;
    for (Index i = 0; i < mp; ++i) {
      if (w(i) > 0.0) P.push_back(i);
    }
    std::vector<char> in_p(static_cast<std::size_t>(mp), 0), banned(static_cast<std::size_t>(mp), 0);
    auto pick_pivot = [&]() {
      Index p = P.front();
      for (Index i : P) {
        if (w(i) > w(p)) p = i;
      }
      return p;
    };
    auto capped = [&](const std::vector<Index>& S, VectorXd& zb, VectorXd& zw) {
      Index p = S.front();
      for (Index i : S) {
        if (w(i) > w(p)) p = i;
      }
      solve_capped(S, p, cap, zb, zw);
    };
    settle(P, b, w, -1, capped);
    for (Index i : P) in_p[static_cast<std::size_t>(i)] = 1;
    while (!exhausted()) {
      const VectorXd g = pr.a_pos.transpose() * residual(b, w, P);
      const double mu = g(pick_pivot());
      Index best = -1;
      double best_g = threshold;
      for (Index j = 0; j < mp; ++j) {
        if (in_p[static_cast<std::size_t>(j)] || banned[static_cast<std::size_t>(j)] || sp(j) == 0.0) continue;
        const double gj = (g(j) - mu) / sp(j);
        if (gj > best_g) {
          best_g = gj;
          best = j;
        }
      }
      if (best < 0) return true;
      P.push_back(best);
      const bool accepted = settle(P, b, w, best, capped);
      std::fill(in_p.begin(), in_p.end(), 0);
      for (Index i : P) in_p[static_cast<std::size_t>(i)] = 1;
      if (accepted) {
        std::fill(banned.begin(), banned.end(), 0);
      } else {
        banned[static_cast<std::size_t>(best)] = 1;
      }
    }
    return false;
  }
};

Solution solve_active_set(const MixedLsProblem& pr, const SolverOptions& opt) {
  ActiveSet as(pr, opt);
  Solution sol;
  bool ok = true;
  if (pr.v_cap && *pr.v_cap == 0.0) {
    std::vector<Index> none;
    as.solve_plain(none, sol.beta_free, sol.beta_pos);
  } else {
    ok = as.run_uncapped(sol.beta_free, sol.beta_pos);
    if (ok && pr.v_cap && sol.beta_pos.sum() > *pr.v_cap) {
      sol.beta_pos *= *pr.v_cap / sol.beta_pos.sum();
      ok = as.run_capped(*pr.v_cap, sol.beta_free, sol.beta_pos);
    }
  }
  sol.converged = ok;
  sol.iterations = as.iterations;
  return sol;
}

// FISTA on normalized columns with function-value restarts.
Solution solve_accelerated(const MixedLsProblem& pr, const SolverOptions& opt) {
  const Index mf = pr.a_free.cols(), mp = pr.a_pos.cols(), m = mf + mp;
  VectorXd scale(m);
  scale << column_norms(pr.a_free), column_norms(pr.a_pos);
  VectorXd inv = VectorXd::Zero(m);
  for (Index j = 0; j < m; ++j) {
    if (scale(j) > 0.0) inv(j) = 1.0 / scale(j);
  }
  MatrixXd A(pr.n(), m);
  A << pr.a_free, pr.a_pos;
  A = A * inv.asDiagonal();

  // Power iteration for the largest eigenvalue of A^T A.
  VectorXd v = VectorXd::Ones(m) / std::sqrt(static_cast<double>(std::max<Index>(m, 1)));
  double lip = 1.0;
  for (int k = 0; k < 100 && m > 0; ++k) {
    VectorXd next = A.transpose() * (A * v);
    const double nrm = next.norm();
    if (nrm == 0.0) break;
    lip = nrm;
    v = next / nrm;
  }
  lip = lip * 1.01 + 1e-12;

  // Cap in normalized variables: sum_j w~_j / s_j <= cap.
  const VectorXd cap_weights = inv.tail(mp).unaryExpr([](double c) { return c > 0.0 ? c : 1.0; });
  auto project = [&](VectorXd x) {
    for (Index j = 0; j < mf; ++j) {
      if (inv(j) == 0.0) x(j) = 0.0;
    }
    VectorXd w = x.tail(mp).cwiseMax(0.0);
    for (Index j = 0; j < mp; ++j) {
      if (inv(mf + j) == 0.0) w(j) = 0.0;
    }
    if (pr.v_cap) w = project_weighted_capped_simplex(w, cap_weights, *pr.v_cap);
    x.tail(mp) = w;
    return x;
  };
  auto value = [&](const VectorXd& x) { return 0.5 * (pr.y - A * x).squaredNorm(); };

  const double threshold = opt.tol * y_scale(pr.y);
  VectorXd x = VectorXd::Zero(m), z = x;
  double fx = value(x), t = 1.0;
  Solution sol;
  sol.converged = false;
  int it = 0;
  for (; it < opt.max_iter; ++it) {
    const VectorXd grad = -(A.transpose() * (pr.y - A * z));
    VectorXd next = project(z - grad / lip);
    const double fn = value(next);
    if (fn > fx) {
      z = x;
      t = 1.0;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    z = next + ((t - 1.0) / tn) * (next - x);
    x = std::move(next);
    fx = fn;
    t = tn;
    if (it % 25 == 0) {
      const VectorXd gx = -(A.transpose() * (pr.y - A * x));
      const double gap = lip * (x - project(x - gx / lip)).cwiseAbs().maxCoeff();
      if (gap <= threshold) {
        sol.converged = true;
        break;
      }
    }
  }
  const VectorXd unscaled = inv.asDiagonal() * x;
  sol.beta_free = unscaled.head(mf);
  sol.beta_pos = unscaled.tail(mp).cwiseMax(0.0);
  sol.iterations = it;
  return sol;
}

}  // namespace

Solution solve_mixed_nnls(const MixedLsProblem& problem, const SolverOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0)) throw SpecError("solver tolerance must be positive");
  Solution sol = options.method == SolverMethod::kActiveSet ? solve_active_set(problem, options)
                                                           : solve_accelerated(problem, options);
  if (problem.v_cap) {
    const double total = sol.beta_pos.sum();
    if (total > *problem.v_cap) sol.beta_pos *= *problem.v_cap / total;
  }
  const VectorXd r = problem.y - problem.a_free * sol.beta_free - problem.a_pos * sol.beta_pos;
  sol.objective = 0.5 * r.squaredNorm();
  sol.kkt_residual = kkt_report(problem, sol).worst();
  return sol;
}

KktDiagnostics kkt_report(const MixedLsProblem& problem, const Solution& solution) {
  problem.validate();
  if (solution.beta_free.size() != problem.a_free.cols() || solution.beta_pos.size() != problem.a_pos.cols()) {
    throw SpecError("kkt_report: solution dimensions do not match the problem");
  }
  const VectorXd& w = solution.beta_pos;
  const VectorXd r = problem.y - problem.a_free * solution.beta_free - problem.a_pos * w;
  const double ys = y_scale(problem.y);
  KktDiagnostics out;

  const VectorXd gf = problem.a_free.transpose() * r;
  for (Index k = 0; k < gf.size(); ++k) {
    const double s = problem.a_free.col(k).norm();
    if (s > 0.0) out.stationarity_free = std::max(out.stationarity_free, std::abs(gf(k)) / s / ys);
  }

  // g_j = a_j^T r; optimality asks g_j = mu on the support and g_j <= mu elsewhere.
  const VectorXd g = problem.a_pos.transpose() * r;
  const double total = w.sum();
  if (problem.v_cap && total > 0.0 && total >= *problem.v_cap * (1.0 - 1e-9)) {
    double num = 0.0;
    for (Index j = 0; j < w.size(); ++j) {
      if (w(j) > 0.0) num += w(j) * g(j);
    }
    out.cap_multiplier = std::max(0.0, num / total);
  }
  const double mu = out.cap_multiplier;
  for (Index j = 0; j < w.size(); ++j) {
    out.feasibility_worst = std::max(out.feasibility_worst, -w(j));
    const double s = problem.a_pos.col(j).norm();
    if (s == 0.0) continue;
    const double dev = (g(j) - mu) / s / ys;
    if (w(j) > 0.0) {
      out.stationarity_pos = std::max(out.stationarity_pos, std::abs(dev));
    } else {
      out.dual_infeasibility = std::max(out.dual_infeasibility, dev);
    }
    out.complementarity_worst = std::max(out.complementarity_worst, std::abs(w(j) * (g(j) - mu)) / (ys * ys));
  }
  if (problem.v_cap) out.feasibility_worst = std::max(out.feasibility_worst, total - *problem.v_cap);
  return out;
}

namespace {

SpMat identity(Index m) {
  SpMat eye(m, m);
  eye.setIdentity();
  return eye;
}

struct Polished {
  bool ok = false;
  VectorXd theta;
  VectorXd lambda;  // one per row of C, zero off the active set
};

// Solves the equality-constrained problem on the detected active rows with a
// regularized KKT factorization and iterative refinement toward the exact system.
Polished polish(const SpMat& P, const VectorXd& q, const SpMat& C, const VectorXd& theta0,
                const VectorXd& dual0, double scale) {
  const Index m = P.rows();
  std::vector<Index> active;
  const VectorXd ct = C * theta0;
  for (Index i = 0; i < C.rows(); ++i) {
    if (dual0(i) > 1e-10 * scale || ct(i) > -1e-8 * scale) active.push_back(i);
  }
  const auto na = static_cast<Index>(active.size());
  const double reg = 1e-8;

  std::vector<Eigen::Triplet<double>> trips, exact;
  for (int k = 0; k < P.outerSize(); ++k) {
    for (SpMat::InnerIterator it(P, k); it; ++it) {
      trips.emplace_back(it.row(), it.col(), it.value());
      exact.emplace_back(it.row(), it.col(), it.value());
    }
  }
  for (Index i = 0; i < m; ++i) trips.emplace_back(i, i, reg);
  const Eigen::SparseMatrix<double, Eigen::RowMajor> crow = C;
  for (Index a = 0; a < na; ++a) {
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(crow, active[a]); it; ++it) {
      trips.emplace_back(m + a, it.col(), it.value());
      trips.emplace_back(it.col(), m + a, it.value());
      exact.emplace_back(m + a, it.col(), it.value());
      exact.emplace_back(it.col(), m + a, it.value());
    }
    trips.emplace_back(m + a, m + a, -reg);
  }
  SpMat K(m + na, m + na), K0(m + na, m + na);
  K.setFromTriplets(trips.begin(), trips.end());
  K0.setFromTriplets(exact.begin(), exact.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  Polished out;
  if (ldlt.info() != Eigen::Success) return out;

  VectorXd rhs = VectorXd::Zero(m + na);
  rhs.head(m) = q;
  VectorXd x(m + na);
  x.head(m) = theta0;
  for (Index a = 0; a < na; ++a) x(m + a) = dual0(active[a]);
  for (int k = 0; k < 25; ++k) {
    const VectorXd delta = ldlt.solve(rhs - K0 * x);
    x += delta;
    if (delta.cwiseAbs().maxCoeff() <= 1e-15 * (1.0 + x.cwiseAbs().maxCoeff())) break;
  }
  out.theta = x.head(m);
  out.lambda = VectorXd::Zero(C.rows());
  for (Index a = 0; a < na; ++a) out.lambda(active[a]) = x(m + a);

  const double tol = 1e-9 * scale;
  const double primal = C.rows() > 0 ? (C * out.theta).maxCoeff() : 0.0;
  const double dual_neg = na > 0 ? -out.lambda.minCoeff() : 0.0;
  const double station = (P * out.theta - q + C.transpose() * out.lambda).cwiseAbs().maxCoeff();
  out.ok = primal <= tol && dual_neg <= tol && station <= tol;
  return out;
}

}  // namespace

IneqLsResult solve_ls_linear_ineq(const IneqLsProblem& problem, const IneqLsOptions& options) {
  problem.validate();
  if (!(options.tol > 0.0) || !(options.rho > 0.0)) throw SpecError("inequality least squares: bad options");
  const Index m = problem.m.cols();
  const double rho = options.rho, alpha = options.relaxation, sigma = 1e-6;

  // Unit-norm constraint rows; rows of zeros constrain nothing and stay zero.
  VectorXd row_norm = VectorXd::Zero(problem.c.rows());
  for (int k = 0; k < problem.c.outerSize(); ++k) {
    for (SpMat::InnerIterator it(problem.c, k); it; ++it) row_norm(it.row()) += it.value() * it.value();
  }
  VectorXd row_scale = row_norm.unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 0.0; });
  const SpMat C = row_scale.asDiagonal() * problem.c;

  SpMat P = SpMat(problem.m.transpose() * problem.m) + problem.ridge * identity(m);
  const VectorXd q = problem.m.transpose() * problem.y;
  const double scale = 1.0 + q.cwiseAbs().maxCoeff();

  SpMat K = P + sigma * identity(m) + rho * SpMat(C.transpose() * C);
  Eigen::SimplicialLDLT<SpMat> ldlt(K);
  if (ldlt.info() != Eigen::Success) throw DataError("inequality least squares: factorization failed");

  VectorXd theta = VectorXd::Zero(m), z = VectorXd::Zero(C.rows()), u = z;
  IneqLsResult res;
  bool done = false;
  int it = 0;
  for (; it < options.max_iter && !done; ++it) {
    const VectorXd prev = theta;
    theta = ldlt.solve(q + sigma * theta + rho * (C.transpose() * (z - u)));
    const VectorXd ct = C * theta;
    const VectorXd zhat = alpha * ct + (1.0 - alpha) * z;
    const VectorXd znew = (zhat + u).cwiseMin(0.0);
    u += zhat - znew;
    const double prim = C.rows() > 0 ? (ct - znew).cwiseAbs().maxCoeff() : 0.0;
    const double dual = (rho * (C.transpose() * (znew - z)) + sigma * (theta - prev)).cwiseAbs().maxCoeff();
    z = znew;
    const double prim_scale = 1.0 + (C.rows() > 0 ? std::max(ct.cwiseAbs().maxCoeff(), z.cwiseAbs().maxCoeff()) : 0.0);
    res.primal_residual = prim;
    res.dual_residual = dual;
    if (prim <= options.tol * prim_scale && dual <= options.tol * scale) {
      res.converged = true;
      done = true;
    }
    const bool checkpoint = (it + 1) % 50 == 0 && prim <= 1e-4 * prim_scale && dual <= 1e-4 * scale;
    if (options.polish && (done || checkpoint)) {
      Polished pol = polish(P, q, C, theta, rho * u, scale);
      if (pol.ok) {
        theta = pol.theta;
        res.polished = true;
        res.converged = true;
        done = true;
      }
    }
  }
  res.iterations = it;
  res.theta = theta;
  res.fitted = problem.m * theta;
  res.objective = 0.5 * (problem.y - res.fitted).squaredNorm() + 0.5 * problem.ridge * theta.squaredNorm();
  res.primal_residual = C.rows() > 0 ? std::max(0.0, (C * theta).maxCoeff()) : 0.0;
  return res;
}

}  // namespace tcreg
