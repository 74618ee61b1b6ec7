#pragma once

#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/errors.hpp"
#include "tcreg/types.hpp"

namespace tcreg {

/// Covariates in original units plus response.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  std::vector<std::string> column_names;  ///< empty or one label per column of X

  Index n() const { return X.rows(); }
  Index d() const { return X.cols(); }

  /// Throws DataError when shapes disagree, n or d is zero, or a value is non-finite.
  void validate() const;

  /// Rows selected by `rows`, in that order.
  Dataset subset(const std::vector<Index>& rows) const;
};

struct ColumnRange {
  double min = 0.0;
  double max = 0.0;
};

/// Per-column affine map onto [0, 1]. Constant columns map to 0.
struct UnitScaler {
  std::vector<ColumnRange> ranges;

  Index dim() const { return static_cast<Index>(ranges.size()); }
};

UnitScaler fit_scaler(const Eigen::MatrixXd& X);

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
scale_to_unit(const Eigen::MatrixBase<Derived>& X, const UnitScaler& scaler) {
  using Scalar = typename Derived::Scalar;
  if (X.cols() != scaler.dim()) {
    throw DataError("scale_to_unit: expected " + std::to_string(scaler.dim()) + " columns, got " +
                    std::to_string(X.cols()));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const auto [lo, hi] = scaler.ranges[static_cast<std::size_t>(j)];
    if (hi > lo) {
      out.col(j) = (X.col(j).array() - Scalar(lo)) / Scalar(hi - lo);
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
inverse_scale(const Eigen::MatrixBase<Derived>& X_unit, const UnitScaler& scaler) {
  using Scalar = typename Derived::Scalar;
  if (X_unit.cols() != scaler.dim()) {
    throw DataError("inverse_scale: expected " + std::to_string(scaler.dim()) + " columns, got " +
                    std::to_string(X_unit.cols()));
  }
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out(X_unit.rows(), X_unit.cols());
  for (Index j = 0; j < X_unit.cols(); ++j) {
    const auto [lo, hi] = scaler.ranges[static_cast<std::size_t>(j)];
    out.col(j) = X_unit.col(j).array() * Scalar(hi - lo) + Scalar(lo);
  }
  return out;
}

/// A numeric CSV: comma separated, '.' decimal point, no quoting.
struct CsvTable {
  std::vector<std::string> header;  ///< empty when the file has no header row
  Eigen::MatrixXd values;
};

/// Parse errors name the 1-based file line and column.
CsvTable read_csv_table(const std::filesystem::path& path, bool header);

/// Response column given by header name or zero-based position.
using ResponseColumn = std::variant<std::string, Index>;

/// Loads a CSV, extracting the response column; the rest become covariates in file order.
Dataset load_csv(const std::filesystem::path& path, const ResponseColumn& response, bool header);

/// Splits an already-parsed table; same rules as load_csv.
Dataset dataset_from_table(const CsvTable& table, const ResponseColumn& response);

}  // namespace tcreg
