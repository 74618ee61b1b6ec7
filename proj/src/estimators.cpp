#include "tcreg/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/SparseCore>

namespace tcreg {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

std::vector<VectorXd> unique_per_axis(const MatrixXd& xu) {
  std::vector<VectorXd> out;
  for (Index j = 0; j < xu.cols(); ++j) {
    std::vector<double> v(xu.col(j).data(), xu.col(j).data() + xu.rows());
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    out.emplace_back(Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size())));
  }
  return out;
}

// {0} u values u {1}, sorted and distinct.
VectorXd closed_axis(const VectorXd& values) {
  std::vector<double> v{0.0, 1.0};
  v.insert(v.end(), values.data(), values.data() + values.size());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return Eigen::Map<VectorXd>(v.data(), static_cast<Index>(v.size()));
}

Index position_of(const VectorXd& u, double x) {
  const double* it = std::lower_bound(u.data(), u.data() + u.size(), x);
  return static_cast<Index>(it - u.data());
}

void require_columns(const MatrixXd& X, Index d) {
  if (X.cols() != d) {
    throw DataError("expected " + std::to_string(d) + " covariate columns, got " + std::to_string(X.cols()));
  }
}

}  // namespace

FittedModel fit(const Dataset& data, const ModelSpec& spec, const SolverOptions& options) {
  data.validate();
  spec.validate(data.d());
  if (spec.variant == Variant::kAxial) throw SpecError("fit: use fit_axially_concave for the axial variant");

  FittedModel model;
  model.spec = spec;
  model.d = data.d();
  model.scaler = fit_scaler(data.X);
  const MatrixXd xu = scale_to_unit(data.X, model.scaler);
  model.lattice = unique_per_axis(xu);

  DesignMatrix design = assemble_design(xu, enumerate_terms(spec, xu));
  // Concave members are F b - H w. A convex fit is the concave fit of -y with b negated.
  const double flip = spec.shape == Shape::kConcave ? 1.0 : -1.0;
  MixedLsProblem problem{design.free_matrix(), -design.pos_matrix(), flip * data.y, spec.v_cap};
  const Solution sol = solve_mixed_nnls(problem, options);

  for (std::size_t k = 0; k < design.free_block.size(); ++k) {
    const BasisTerm& term = design.terms[static_cast<std::size_t>(design.free_block[k])];
    const double coef = flip * sol.beta_free(static_cast<Index>(k));
    if (term.is_intercept()) {
      model.intercept = coef;
    } else {
      model.monomials.push_back({term, coef});
    }
  }
  for (std::size_t k = 0; k < design.pos_block.size(); ++k) {
    const double w = sol.beta_pos(static_cast<Index>(k));
    if (w > 0.0) model.hinges.push_back({design.terms[static_cast<std::size_t>(design.pos_block[k])], w});
  }
  model.solver = {sol.objective, sol.kkt_residual, sol.iterations, sol.converged};

  double sse = 0.0;
  for (Index r = 0; r < xu.rows(); ++r) {
    const double e = data.y(r) - model.evaluate_unit(xu.row(r));
    sse += e * e;
  }
  model.training_sse = sse;
  return model;
}

Prediction predict(const FittedModel& model, const MatrixXd& X) {
  require_columns(X, model.d);
  const MatrixXd xu = scale_to_unit(X, model.scaler);
  Prediction out;
  out.values.resize(X.rows());
  out.extrapolated.resize(X.rows());
  for (Index r = 0; r < X.rows(); ++r) {
    out.values(r) = model.evaluate_unit(xu.row(r));
    out.extrapolated(r) = (xu.row(r).array() < 0.0).any() || (xu.row(r).array() > 1.0).any();
  }
  return out;
}

double complexity(const FittedModel& model) {
  double v = 0.0;
  for (const auto& h : model.hinges) v += h.weight;
  return v;
}

std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw SpecError("cross-validation needs at least 2 folds");
  if (n < folds) {
    throw DataError("cross-validation: " + std::to_string(n) + " rows cannot fill " + std::to_string(folds) +
                    " folds");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k) fold[static_cast<std::size_t>(order[k])] = static_cast<int>(k % folds);
  return fold;
}

VectorXd auto_v_grid(const Dataset& data, const ModelSpec& spec, const SolverOptions& options) {
  ModelSpec open = spec;
  open.v_cap.reset();
  const double v0 = complexity(fit(data, open, options));
  if (!(v0 > 0.0)) return VectorXd::Zero(1);
  VectorXd grid(10);
  for (Index k = 0; k < 10; ++k) grid(k) = v0 * std::pow(10.0, -3.0 + static_cast<double>(k) / 3.0);
  grid(9) = v0;
  return grid;
}

CvResult cross_validate_V(const Dataset& data, const ModelSpec& spec, const VectorXd& v_grid,
                          const CvOptions& options) {
  data.validate();
  if (v_grid.size() == 0) throw SpecError("cross-validation: empty V grid");
  if (!(v_grid.array() >= 0.0).all()) throw SpecError("cross-validation: V grid entries must be nonnegative");
  const std::vector<int> fold = assign_folds(data.n(), options.folds, options.seed);

  CvResult res;
  res.v_grid = v_grid;
  res.seed = options.seed;
  res.fold_mse.resize(options.folds, v_grid.size());
  for (int f = 0; f < options.folds; ++f) {
    std::vector<Index> train, test;
    for (Index r = 0; r < data.n(); ++r) (fold[static_cast<std::size_t>(r)] == f ? test : train).push_back(r);
    if (train.empty()) throw DataError("cross-validation: a fold has no training rows");
    const Dataset tr = data.subset(train), te = data.subset(test);
    for (Index v = 0; v < v_grid.size(); ++v) {
      ModelSpec capped = spec;
      capped.v_cap = v_grid(v);
      const FittedModel m = fit(tr, capped, options.solver);
      res.fold_mse(f, v) = (predict(m, te.X).values - te.y).squaredNorm() / static_cast<double>(te.n());
    }
  }
  res.mean_mse = res.fold_mse.colwise().mean().transpose();
  Index best = 0;
  for (Index v = 1; v < v_grid.size(); ++v) {
    const double a = res.mean_mse(v), b = res.mean_mse(best);
    if (a < b || (a == b && v_grid(v) < v_grid(best))) best = v;
  }
  res.selected_v = v_grid(best);
  return res;
}

AcFittedModel fit_axially_concave(const Dataset& data, const AxialOptions& options) {
  data.validate();
  AcFittedModel model;
  model.d = data.d();
  model.shape = options.shape;
  model.scaler = fit_scaler(data.X);
  const MatrixXd xu = scale_to_unit(data.X, model.scaler);

  double total = 1.0;
  for (const VectorXd& vals : unique_per_axis(xu)) {
    model.breakpoints.push_back(closed_axis(vals));
    total *= static_cast<double>(model.breakpoints.back().size());
  }
  if (total > static_cast<double>(options.grid_budget)) {
    throw DataError("axial grid has " + std::to_string(static_cast<long long>(total)) +
                    " nodes, over the budget of " + std::to_string(options.grid_budget));
  }
  const auto nodes = static_cast<Index>(total);
  const Index d = model.d;
  std::vector<Index> stride(static_cast<std::size_t>(d), 1);
  for (Index k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * model.breakpoints[k + 1].size();

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> mt;
  for (Index r = 0; r < data.n(); ++r) {
    Index flat = 0;
    for (Index k = 0; k < d; ++k) flat += position_of(model.breakpoints[k], xu(r, k)) * stride[k];
    mt.emplace_back(r, flat, 1.0);
  }
  Eigen::SparseMatrix<double> M(data.n(), nodes);
  M.setFromTriplets(mt.begin(), mt.end());

  // Slope after node i must not exceed slope before it along every axis.
  const double sign = options.shape == Shape::kConcave ? 1.0 : -1.0;
  std::vector<Trip> ct;
  Index row = 0;
  for (Index flat = 0; flat < nodes; ++flat) {
    Index rest = flat;
    for (Index k = 0; k < d; ++k) {
      const Index i = rest / stride[k];
      rest %= stride[k];
      const VectorXd& u = model.breakpoints[k];
      if (i == 0 || i == u.size() - 1) continue;
      const double hl = u(i) - u(i - 1), hr = u(i + 1) - u(i);
      ct.emplace_back(row, flat - stride[k], sign / hl);
      ct.emplace_back(row, flat, -sign * (1.0 / hl + 1.0 / hr));
      ct.emplace_back(row, flat + stride[k], sign / hr);
      ++row;
    }
  }
  Eigen::SparseMatrix<double> C(row, nodes);
  C.setFromTriplets(ct.begin(), ct.end());

  const IneqLsResult res = solve_ls_linear_ineq({M, data.y, C, 0.0}, options.solver);
  model.theta = res.theta;
  model.training_sse = (data.y - res.fitted).squaredNorm();
  model.converged = res.converged;
  return model;
}

Prediction predict_axial(const AcFittedModel& model, const MatrixXd& X) {
  require_columns(X, model.d);
  const MatrixXd xu = scale_to_unit(X, model.scaler);
  const Index d = model.d;
  std::vector<Index> stride(static_cast<std::size_t>(d), 1);
  for (Index k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * model.breakpoints[k + 1].size();

  Prediction out;
  out.values.resize(X.rows());
  out.extrapolated.resize(X.rows());
  std::vector<Index> cell(static_cast<std::size_t>(d));
  std::vector<double> frac(static_cast<std::size_t>(d));
  for (Index r = 0; r < X.rows(); ++r) {
    bool outside = false;
    for (Index k = 0; k < d; ++k) {
      double x = xu(r, k);
      if (x < 0.0 || x > 1.0) {
        outside = true;
        x = std::clamp(x, 0.0, 1.0);
      }
      const VectorXd& u = model.breakpoints[k];
      Index j = position_of(u, x);
      j = std::clamp<Index>(j - 1, 0, u.size() - 2);
      cell[k] = j;
      frac[k] = (x - u(j)) / (u(j + 1) - u(j));
    }
    double v = 0.0;
    for (Index corner = 0; corner < (Index{1} << d); ++corner) {
      double weight = 1.0;
      Index flat = 0;
      for (Index k = 0; k < d; ++k) {
        const bool up = (corner >> (d - 1 - k)) & 1;
        weight *= up ? frac[k] : 1.0 - frac[k];
        flat += (cell[k] + (up ? 1 : 0)) * stride[k];
      }
      if (weight != 0.0) v += weight * model.theta(flat);
    }
    out.values(r) = v;
    out.extrapolated(r) = outside;
  }
  return out;
}

GridFunction<double> model_grid(const FittedModel& model, std::optional<int> resolution) {
  std::vector<VectorXd> axes;
  const bool equal = resolution.has_value() || model.lattice.empty();
  const int cells = resolution.value_or(8);
  if (cells < 1) throw SpecError("grid resolution must be positive");
  for (Index k = 0; k < model.d; ++k) {
    if (equal) {
      axes.push_back(VectorXd::LinSpaced(cells + 1, 0.0, 1.0));
    } else {
      axes.push_back(closed_axis(model.lattice[static_cast<std::size_t>(k)]));
    }
  }
  return GridFunction<double>::sample(std::move(axes), [&](const VectorXd& x) { return model.evaluate_unit(x); });
}

CertificateReport certify_fit(const FittedModel& model, std::optional<int> resolution, double tol) {
  const GridFunction<double> g = model_grid(model, resolution);
  const double abs_tol = tol * (1.0 + g.values().cwiseAbs().maxCoeff());
  return certify_total_concavity(g, model.spec.s, model.spec.shape, abs_tol);
}

CertificateReport certify_fit(const AcFittedModel& model, double tol) {
  const GridFunction<double> g(model.breakpoints, model.theta);
  const double abs_tol = tol * (1.0 + g.values().cwiseAbs().maxCoeff());
  return certify_axial_concavity(g, abs_tol, model.shape);
}

}  // namespace tcreg
