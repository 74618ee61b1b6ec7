#pragma once

// Independent oracles and hand-rolled generators shared by the unit tests and
// the acceptance binary. Nothing here calls into the solvers under test.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/data_io.hpp"

namespace tcreg::testing {

/// Small deterministic generator; everything random in the tests goes through it.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j) {
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = uniform(lo, hi);
    }
    return m;
  }

  Eigen::VectorXd vector(Eigen::Index n, double sd = 1.0) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = normal(sd);
    return v;
  }

  /// Covariates on a coarse random grid so that repeated values occur.
  Eigen::MatrixXd design(Eigen::Index n, Eigen::Index d, int levels = 0) {
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) {
        X(i, j) = levels > 0 ? static_cast<double>(integer(0, levels)) / levels : uniform();
      }
    }
    return X;
  }

 private:
  std::mt19937_64 rng_;
};

struct OracleResult {
  Eigen::VectorXd fitted;
  Eigen::VectorXd beta_free;
  Eigen::VectorXd beta_pos;
  double objective = std::numeric_limits<double>::infinity();
  int certified = 0;  ///< number of supports passing every KKT check
};

/// Exhaustive active-set enumeration for
///   min 1/2 ||y - F b - A w||^2,  w >= 0  (and sum w <= cap).
/// For each support P the equality-constrained least squares is solved by a
/// bordered normal-equation system; a support is accepted only when primal and
/// dual feasibility both hold. Columns must be linearly independent.
inline OracleResult brute_force_mixed_nnls(const Eigen::MatrixXd& F, const Eigen::MatrixXd& A,
                                           const Eigen::VectorXd& y, std::optional<double> cap = std::nullopt,
                                           double slack = 1e-9) {
  const Eigen::Index mf = F.cols(), mp = A.cols();
  OracleResult best;
  for (std::uint32_t mask = 0; mask < (1u << mp); ++mask) {
    std::vector<Eigen::Index> P;
    for (Eigen::Index j = 0; j < mp; ++j) {
      if (mask & (1u << j)) P.push_back(j);
    }
    for (int bind = 0; bind < (cap ? 2 : 1); ++bind) {
      if (bind && P.empty()) continue;
      const Eigen::Index k = mf + static_cast<Eigen::Index>(P.size());
      Eigen::MatrixXd B(y.size(), k);
      B.leftCols(mf) = F;
      for (std::size_t a = 0; a < P.size(); ++a) B.col(mf + static_cast<Eigen::Index>(a)) = A.col(P[a]);
      const Eigen::Index dim = k + bind;
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
      K.topLeftCorner(k, k) = B.transpose() * B;
      rhs.head(k) = B.transpose() * y;
      if (bind) {
        for (std::size_t a = 0; a < P.size(); ++a) {
          K(k, mf + static_cast<Eigen::Index>(a)) = 1.0;
          K(mf + static_cast<Eigen::Index>(a), k) = 1.0;
        }
        rhs(k) = *cap;
      }
      const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
      if (!((K * sol - rhs).norm() <= 1e-8 * (1.0 + rhs.norm()))) continue;
      const Eigen::VectorXd coef = sol.head(k);
      // Last entry of the bordered solution is the cap multiplier.
      const double mu = bind ? sol(k) : 0.0;
      Eigen::VectorXd w = Eigen::VectorXd::Zero(mp);
      bool ok = mu >= -slack;
      for (std::size_t a = 0; a < P.size(); ++a) {
        w(P[a]) = coef(mf + static_cast<Eigen::Index>(a));
        ok = ok && w(P[a]) >= -slack;
      }
      if (cap && !bind) ok = ok && w.sum() <= *cap + slack;
      const Eigen::VectorXd r = y - B * coef;
      const double scale = 1.0 + y.norm();
      for (Eigen::Index j = 0; j < mp && ok; ++j) {
        if (!(mask & (1u << j))) ok = A.col(j).dot(r) - mu <= slack * scale;
      }
      if (!ok) continue;
      ++best.certified;
      const double obj = 0.5 * r.squaredNorm();
      if (obj < best.objective) {
        best.objective = obj;
        best.fitted = B * coef;
        best.beta_free = coef.head(mf);
        best.beta_pos = w;
      }
    }
  }
  return best;
}

/// Reference projection onto {x >= 0, sum c_i x_i <= cap} by bisection on tau.
inline Eigen::VectorXd bisection_capped_projection(const Eigen::VectorXd& v, const Eigen::VectorXd& c, double cap) {
  auto at = [&](double tau) { return (v - tau * c).cwiseMax(0.0).eval(); };
  if (at(0.0).dot(c) <= cap) return at(0.0);
  double lo = 0.0, hi = 1.0;
  while (at(hi).dot(c) > cap) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (at(mid).dot(c) > cap ? lo : hi) = mid;
  }
  return at(0.5 * (lo + hi));
}

/// Noisy samples of a random totally concave function built from nonnegative hinge
/// mixtures, with random sign-free low-order polynomial parts.
inline Dataset concave_dataset(Gen& g, Eigen::Index n, Eigen::Index d, double noise, int levels = 0) {
  Dataset data;
  data.X = g.design(n, d, levels);
  data.y.resize(n);
  Eigen::VectorXd lin = g.vector(d);
  const double inter = g.normal(0.5);
  std::vector<std::pair<Eigen::VectorXd, double>> bumps;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd t(d);
    for (Eigen::Index j = 0; j < d; ++j) t(j) = g.uniform(0.0, 0.8);
    bumps.emplace_back(t, g.uniform(0.2, 2.0));
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    double v = 0.3 + lin.dot(data.X.row(i).transpose());
    if (d >= 2) v += inter * data.X(i, 0) * data.X(i, 1);
    for (const auto& [t, w] : bumps) {
      for (Eigen::Index j = 0; j < d; ++j) v -= w * std::max(0.0, data.X(i, j) - t(j));
    }
    data.y(i) = v + g.normal(noise);
  }
  return data;
}

}  // namespace tcreg::testing
