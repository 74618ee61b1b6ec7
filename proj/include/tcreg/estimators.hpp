#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/data_io.hpp"
#include "tcreg/model.hpp"
#include "tcreg/shape_calculus.hpp"
#include "tcreg/solver.hpp"

namespace tcreg {

/// Least squares over the class in `spec` (variant TC, TC_L or TC_L_I).
/// Convex shapes are fitted as the concave fit of -y with negated sign-free coefficients.
/// Solver non-convergence is reported through model.solver.converged.
FittedModel fit(const Dataset& data, const ModelSpec& spec, const SolverOptions& options = {});

struct Prediction {
  Eigen::VectorXd values;
  Eigen::Array<bool, Eigen::Dynamic, 1> extrapolated;  ///< row left the unit cube after scaling
};

/// Hinges extend beyond the training box as written; such rows are flagged.
Prediction predict(const FittedModel& model, const Eigen::MatrixXd& X);

/// V(f): total hinge weight.
double complexity(const FittedModel& model);

struct CvOptions {
  int folds = 10;
  std::uint64_t seed = 0;
  SolverOptions solver;
};

struct CvResult {
  Eigen::VectorXd v_grid;
  Eigen::MatrixXd fold_mse;  ///< folds x V
  Eigen::VectorXd mean_mse;
  double selected_v = 0.0;
  std::uint64_t seed = 0;
};

/// Fold of each row: rows are shuffled with the seed, then dealt round-robin.
std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed);

/// Ten geometric points from 1e-3 V0 to V0, V0 the complexity of the unregularized fit.
Eigen::VectorXd auto_v_grid(const Dataset& data, const ModelSpec& spec, const SolverOptions& options = {});

/// Picks the cap with the smallest mean held-out MSE; ties go to the smaller cap.
CvResult cross_validate_V(const Dataset& data, const ModelSpec& spec, const Eigen::VectorXd& v_grid,
                          const CvOptions& options = {});

struct AxialOptions {
  Index grid_budget = 250000;  ///< maximum number of grid nodes
  Shape shape = Shape::kConcave;
  IneqLsOptions solver;
};

/// Least squares over axially concave functions, through grid values on
/// {0} u {data} u {1} per axis with nonincreasing slopes along every axis.
AcFittedModel fit_axially_concave(const Dataset& data, const AxialOptions& options = {});

/// Multi-affine interpolation of theta; rows outside the unit cube are clamped and flagged.
Prediction predict_axial(const AcFittedModel& model, const Eigen::MatrixXd& X);

/// Training values (scaled) evaluated on {0} u lattice u {1} per axis, or on an equally
/// spaced grid with `resolution` cells when given or when the model carries no lattice,
/// then certified for the model's shape and interaction order. The absolute tolerance
/// is tol * (1 + max |value|).
CertificateReport certify_fit(const FittedModel& model, std::optional<int> resolution = std::nullopt,
                              double tol = 1e-6);

/// Axial certificate on the fitted grid values.
CertificateReport certify_fit(const AcFittedModel& model, double tol = 1e-6);

/// Grid of model values used by certify_fit.
GridFunction<double> model_grid(const FittedModel& model, std::optional<int> resolution = std::nullopt);

}  // namespace tcreg
