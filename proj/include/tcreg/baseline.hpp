#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/data_io.hpp"

namespace tcreg {

/// Product of powers of original covariates, e.g. x1^2*x2 -> {(0, 2), (1, 1)}.
struct FeatureTerm {
  std::vector<std::pair<int, int>> powers;  ///< (zero-based column, exponent >= 1)

  double eval(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// A parametric regression described by its feature recipe; an intercept is always added.
struct BaselineSpec {
  std::string name;
  std::vector<FeatureTerm> recipe;

  void validate(Index d) const;
};

/// Parses "x1^2*x2" style terms. Columns are either x<k> (1-based) or header names.
FeatureTerm parse_feature_term(const std::string& text, const std::vector<std::string>& column_names = {});

struct OlsModel {
  BaselineSpec spec;
  Eigen::VectorXd coef;  ///< intercept first, then one entry per recipe term

  Eigen::MatrixXd features(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd predict(const Eigen::MatrixXd& X) const;
};

/// Normal equations on norm-scaled features with a 1e-12 ridge.
OlsModel fit_baseline(const Dataset& data, const BaselineSpec& spec);

}  // namespace tcreg
