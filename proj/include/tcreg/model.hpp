#pragma once

#include <vector>

#include <Eigen/Dense>

#include "tcreg/data_io.hpp"
#include "tcreg/hinge_basis.hpp"

namespace tcreg {

struct MonomialCoef {
  BasisTerm term;
  double coef = 0.0;
};

/// Weight of one hinge term. Concave models subtract the weighted hinge, convex models add it.
struct HingeWeight {
  BasisTerm term;
  double weight = 0.0;
};

struct SolverSummary {
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  bool converged = true;
};

/// A fitted member of a totally concave (or convex) class, on the unit-cube scale.
/// Only hinge terms with nonzero weight are stored.
struct FittedModel {
  ModelSpec spec;
  Index d = 0;
  UnitScaler scaler;
  double intercept = 0.0;
  std::vector<MonomialCoef> monomials;
  std::vector<HingeWeight> hinges;
  double training_sse = 0.0;
  SolverSummary solver;
  /// Sorted unique scaled training values per coordinate; empty for loaded models.
  std::vector<Eigen::VectorXd> lattice;

  double hinge_sign() const { return spec.shape == Shape::kConcave ? -1.0 : 1.0; }

  template <typename Derived>
  double evaluate_unit(const Eigen::MatrixBase<Derived>& x) const {
    double v = intercept;
    for (const auto& m : monomials) v += m.coef * eval_term(m.term, x);
    double h = 0.0;
    for (const auto& w : hinges) h += w.weight * eval_term(w.term, x);
    return v + hinge_sign() * h;
  }
};

/// Axially concave fit: values theta on the product of per-axis breakpoints,
/// multi-affine in between.
struct AcFittedModel {
  Index d = 0;
  UnitScaler scaler;
  Shape shape = Shape::kConcave;
  std::vector<Eigen::VectorXd> breakpoints;  ///< per axis, starting at 0 and ending at 1
  Eigen::VectorXd theta;                     ///< row-major over the grid, last axis fastest
  double training_sse = 0.0;
  bool converged = true;
};

}  // namespace tcreg
