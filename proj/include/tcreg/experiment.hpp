#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tcreg/baseline.hpp"
#include "tcreg/data_io.hpp"
#include "tcreg/estimators.hpp"
#include "tcreg/hinge_basis.hpp"

namespace tcreg {

/// A shape-constrained estimator in an experiment roster. When `cv_folds` is set the
/// hinge-weight cap is tuned on each training split (auto grid unless `v_grid` is given).
struct EstimatorEntry {
  std::string name;
  ModelSpec spec;
  std::optional<int> cv_folds;
  std::vector<double> v_grid;
};

using RosterEntry = std::variant<EstimatorEntry, BaselineSpec>;

const std::string& entry_name(const RosterEntry& entry);

struct ExperimentPlan {
  int repetitions = 1;
  double train_fraction = 0.9;
  std::uint64_t seed = 0;
  std::vector<RosterEntry> roster;

  void validate(Index d) const;
};

/// Reads a plan:
///   {"repetitions": 100, "train_fraction": 0.9, "seed": 1,
///    "models": [{"name": "Quadratic", "type": "baseline", "terms": ["x1", "x1^2"]},
///               {"name": "Ours", "type": "estimator", "variant": "tc-l-i", "s": 2, "p": 2, "q": 3,
///                "shape": "convex", "proxy": [50, 50], "cv_folds": 10}]}
ExperimentPlan plan_from_json(const nlohmann::json& j, const std::vector<std::string>& column_names = {});

struct ExperimentReport {
  std::vector<std::string> models;
  Eigen::MatrixXd mse;    ///< repetitions x models; NaN when the fit failed
  Eigen::MatrixXi ranks;  ///< 1 = best; 0 when missing
  std::vector<bool> tied;  ///< per repetition: an exact MSE tie was broken by roster order
  Eigen::MatrixXd rank_cdf;  ///< models x models: fraction of repetitions with rank <= r+1
};

/// Random train/test splits; every roster entry is scored by test MSE and ranked.
ExperimentReport run_experiment(const Dataset& data, const ExperimentPlan& plan);

void write_mse_table(const ExperimentReport& report, std::ostream& out);
void write_rank_cdf(const ExperimentReport& report, std::ostream& out);
void write_rank_table(const ExperimentReport& report, std::ostream& out);

/// Known regression functions for synthetic checks.
enum class SyntheticTruth {
  kNegSquare,     ///< -x^2 on [0, 1]
  kNegQuadratic2  ///< -x1^2 - x2^2 + x1 x2 on [0, 1]^2
};

SyntheticTruth parse_truth(const std::string& name);
int truth_dimension(SyntheticTruth truth);
double truth_value(SyntheticTruth truth, const Eigen::Ref<const Eigen::RowVectorXd>& x);

struct RateSanityResult {
  std::vector<Index> n;  ///< realised sample sizes (per-axis count to the power d)
  std::vector<double> mean_risk;
};

/// Mean squared lattice error of the TC (s = d) fit to f* + N(0, noise_sd^2) on the lattice
/// prod_k {0, 1/m, ..., (m-1)/m}, m = round(n^(1/d)), averaged over `reps`.
RateSanityResult rate_sanity(SyntheticTruth truth, const std::vector<Index>& n_list, double noise_sd, int reps,
                             std::uint64_t seed, const SolverOptions& options = {});

/// Fixed 17-significant-digit rendering used in every report file.
std::string format_double(double v);

}  // namespace tcreg
