// tcreg: command-line front end.
//
// Exit codes: 0 ok (check: passed), 1 usage error (check: failed),
// 2 data error, 3 solver did not converge.

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tcreg/baseline.hpp"
#include "tcreg/data_io.hpp"
#include "tcreg/estimators.hpp"
#include "tcreg/experiment.hpp"
#include "tcreg/model_io.hpp"
#include "tcreg/shape_calculus.hpp"

namespace {

using namespace tcreg;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNoConvergence = 3;

struct DataArgs {
  std::string path;
  std::string response;
  bool no_header = false;
};

struct SpecArgs {
  std::string variant = "tc";
  int s = 1;
  int p = 0;
  int q = -1;
  std::string shape = "concave";
  std::optional<double> v_cap;
  std::vector<int> proxy;
  double tol = 1e-8;
  int max_iter = 50000;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("data", a.path, "CSV file")->required();
  cmd->add_option("--response", a.response, "response column: header name or zero-based position (default: last)");
  cmd->add_flag("--no-header", a.no_header, "the first row holds data");
}

void add_spec_options(CLI::App* cmd, SpecArgs& a) {
  cmd->add_option("--variant", a.variant, "tc, tc-l, tc-l-i or axial")->capture_default_str();
  cmd->add_option("--s", a.s, "interaction order")->capture_default_str();
  cmd->add_option("--p", a.p, "number of shape-constrained covariates (tc-l, tc-l-i)");
  cmd->add_option("--q", a.q, "p plus the number of interacting linear covariates (tc-l-i; default p)");
  cmd->add_option("--shape", a.shape, "concave or convex")->capture_default_str();
  cmd->add_option("--v-cap", a.v_cap, "cap on the total hinge weight");
  cmd->add_option("--proxy", a.proxy, "proxy lattice sizes N1,N2,...")->delimiter(',');
  cmd->add_option("--tol", a.tol, "solver tolerance")->capture_default_str();
  cmd->add_option("--max-iter", a.max_iter, "solver iteration limit")->capture_default_str();
}

ModelSpec make_spec(const SpecArgs& a) {
  ModelSpec spec;
  spec.variant = parse_variant(a.variant);
  spec.shape = parse_shape(a.shape);
  spec.s = a.s;
  spec.p = a.p;
  spec.q = a.q < 0 ? a.p : a.q;
  spec.v_cap = a.v_cap;
  spec.proxy_counts = a.proxy;
  return spec;
}

SolverOptions make_solver(const SpecArgs& a) {
  SolverOptions o;
  o.tol = a.tol;
  o.max_iter = a.max_iter;
  return o;
}

Dataset load(const DataArgs& a) {
  const CsvTable table = read_csv_table(a.path, !a.no_header);
  ResponseColumn response = table.values.cols() - 1;
  if (!a.response.empty()) {
    const bool named = std::find(table.header.begin(), table.header.end(), a.response) != table.header.end();
    Index pos = 0;
    const auto [ptr, ec] = std::from_chars(a.response.data(), a.response.data() + a.response.size(), pos);
    if (!named && ec == std::errc() && ptr == a.response.data() + a.response.size()) {
      response = pos;
    } else {
      response = a.response;
    }
  }
  return dataset_from_table(table, response);
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

int run_fit(const DataArgs& da, const SpecArgs& sa, const std::string& out) {
  const Dataset data = load(da);
  const ModelSpec spec = make_spec(sa);
  if (spec.variant == Variant::kAxial) {
    AxialOptions opts;
    opts.shape = spec.shape;
    const AcFittedModel model = fit_axially_concave(data, opts);
    if (!out.empty()) save_model(model, out);
    std::cout << "variant=axial n=" << data.n() << " d=" << data.d() << " grid=" << model.theta.size()
              << " sse=" << format_double(model.training_sse) << " converged=" << model.converged << '\n';
    return model.converged ? kOk : kNoConvergence;
  }
  const FittedModel model = fit(data, spec, make_solver(sa));
  if (!out.empty()) save_model(model, out);
  std::cout << "variant=" << to_string(spec.variant) << " n=" << data.n() << " d=" << data.d()
            << " sse=" << format_double(model.training_sse) << " V=" << format_double(complexity(model))
            << " hinges=" << model.hinges.size() << " kkt=" << format_double(model.solver.kkt_residual)
            << " converged=" << model.solver.converged << '\n';
  return model.solver.converged ? kOk : kNoConvergence;
}

int run_predict(const std::string& model_path, const DataArgs& da, const std::string& out) {
  const AnyModel any = load_any_model(model_path);
  const Index d = std::visit([](const auto& m) { return m.d; }, any);
  const CsvTable table = read_csv_table(da.path, !da.no_header);
  Eigen::MatrixXd X = table.values;
  std::optional<Eigen::VectorXd> y;
  // One column beyond the model's covariates is the response (last, unless named).
  if (!da.response.empty() || X.cols() == d + 1) {
    DataArgs copy = da;
    const Dataset data = load(copy);
    X = data.X;
    y = data.y;
  }
  if (X.cols() != d) {
    throw DataError("model expects " + std::to_string(d) + " covariates, file has " + std::to_string(X.cols()));
  }
  const Prediction pred = std::holds_alternative<FittedModel>(any) ? predict(std::get<FittedModel>(any), X)
                                                                   : predict_axial(std::get<AcFittedModel>(any), X);
  std::ostream* sink = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file = open_out(out);
    sink = &file;
  }
  *sink << "prediction,extrapolated\n";
  for (Index r = 0; r < X.rows(); ++r) {
    *sink << format_double(pred.values(r)) << ',' << (pred.extrapolated(r) ? 1 : 0) << '\n';
  }
  if (y) {
    std::cerr << "mse=" << format_double((pred.values - *y).squaredNorm() / static_cast<double>(y->size())) << '\n';
  }
  return kOk;
}

// Long format: d coordinate columns then one value column; every grid node exactly once.
GridFunction<double> read_grid(const DataArgs& da) {
  const CsvTable table = read_csv_table(da.path, !da.no_header);
  const Index d = table.values.cols() - 1;
  if (d < 1) throw DataError("grid file needs coordinate columns and a value column");
  std::vector<Eigen::VectorXd> axes;
  for (Index k = 0; k < d; ++k) {
    std::vector<double> u(table.values.col(k).data(), table.values.col(k).data() + table.values.rows());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    axes.emplace_back(Eigen::Map<Eigen::VectorXd>(u.data(), static_cast<Index>(u.size())));
  }
  Index total = 1;
  for (const auto& u : axes) total *= u.size();
  if (total != table.values.rows()) {
    throw DataError("grid is incomplete or has repeated nodes: " + std::to_string(table.values.rows()) +
                    " rows for " + std::to_string(total) + " nodes");
  }
  Eigen::VectorXd values(total);
  std::vector<char> seen(static_cast<std::size_t>(total), 0);
  for (Index r = 0; r < table.values.rows(); ++r) {
    Index flat = 0;
    for (Index k = 0; k < d; ++k) {
      const auto& u = axes[static_cast<std::size_t>(k)];
      flat = flat * u.size() + (std::lower_bound(u.data(), u.data() + u.size(), table.values(r, k)) - u.data());
    }
    if (seen[static_cast<std::size_t>(flat)]) throw DataError("grid node repeated at data row " + std::to_string(r + 1));
    seen[static_cast<std::size_t>(flat)] = 1;
    values(flat) = table.values(r, d);
  }
  return GridFunction<double>(std::move(axes), std::move(values));
}

int run_check(const DataArgs& da, const SpecArgs& sa, bool from_model, std::optional<int> resolution,
              std::optional<double> tol) {
  CertificateReport report;
  if (from_model) {
    const AnyModel any = load_any_model(da.path);
    if (const auto* m = std::get_if<FittedModel>(&any)) {
      report = certify_fit(*m, resolution, tol.value_or(1e-6));
    } else {
      report = certify_fit(std::get<AcFittedModel>(any), tol.value_or(1e-6));
    }
  } else {
    const GridFunction<double> g = read_grid(da);
    const double t = tol.value_or(default_certificate_tolerance(g));
    const Shape shape = parse_shape(sa.shape);
    if (sa.variant == "axial") {
      report = certify_axial_concavity(g, t, shape);
    } else {
      report = certify_total_concavity(g, sa.s, shape, t);
    }
  }
  std::cout << report_to_json(report).dump(2) << '\n';
  return report.passed ? kOk : 1;
}

Eigen::VectorXd parse_grid_list(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double x = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
    if (ec != std::errc() || ptr != item.data() + item.size()) throw SpecError("cannot read V grid entry '" + item + "'");
    v.push_back(x);
  }
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Index>(v.size()));
}

int run_cv(const DataArgs& da, const SpecArgs& sa, const std::string& grid_text, int folds, std::uint64_t seed,
           const std::string& out) {
  const Dataset data = load(da);
  const ModelSpec spec = make_spec(sa);
  if (spec.variant == Variant::kAxial) throw SpecError("cv: the axial estimator has no cap to tune");
  CvOptions opts;
  opts.folds = folds;
  opts.seed = seed;
  opts.solver = make_solver(sa);
  const Eigen::VectorXd grid = grid_text == "auto" ? auto_v_grid(data, spec, opts.solver) : parse_grid_list(grid_text);
  const CvResult res = cross_validate_V(data, spec, grid, opts);
  if (!out.empty()) {
    std::ofstream file = open_out(out);
    file << "v,mean_mse";
    for (int f = 0; f < folds; ++f) file << ",fold" << f + 1;
    file << '\n';
    for (Index v = 0; v < grid.size(); ++v) {
      file << format_double(grid(v)) << ',' << format_double(res.mean_mse(v));
      for (int f = 0; f < folds; ++f) file << ',' << format_double(res.fold_mse(f, v));
      file << '\n';
    }
  }
  std::cout << "selected_v=" << format_double(res.selected_v) << " seed=" << res.seed << '\n';
  return kOk;
}

int run_experiment_cmd(const DataArgs& da, const std::string& plan_path, const std::string& out_dir,
                       std::optional<std::uint64_t> seed) {
  const Dataset data = load(da);
  std::ifstream in(plan_path);
  if (!in) throw DataError("cannot open " + plan_path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(plan_path + ": " + e.what());
  }
  ExperimentPlan plan = plan_from_json(j, data.column_names);
  if (seed) plan.seed = *seed;
  const ExperimentReport report = run_experiment(data, plan);
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f = open_out(dir / "mse_table.csv");
    write_mse_table(report, f);
  }
  {
    std::ofstream f = open_out(dir / "rank_cdf.csv");
    write_rank_cdf(report, f);
  }
  {
    std::ofstream f = open_out(dir / "ranks.csv");
    write_rank_table(report, f);
  }
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    const auto col = report.mse.col(static_cast<Index>(m));
    double sum = 0.0;
    int count = 0;
    for (Index r = 0; r < col.size(); ++r) {
      if (std::isfinite(col(r))) {
        sum += col(r);
        ++count;
      }
    }
    std::cout << report.models[m] << " mean_mse=" << (count ? format_double(sum / count) : "NA")
              << " fitted=" << count << '/' << col.size() << '\n';
  }
  return kOk;
}

int run_rate(const std::string& truth, const std::vector<Index>& n_list, double noise, int reps,
             std::uint64_t seed, const SpecArgs& sa, const std::string& out) {
  const RateSanityResult res = rate_sanity(parse_truth(truth), n_list, noise, reps, seed, make_solver(sa));
  std::ostream* sink = &std::cout;
  std::ofstream file;
  if (!out.empty()) {
    file = open_out(out);
    sink = &file;
  }
  *sink << "n,mean_risk\n";
  for (std::size_t k = 0; k < res.n.size(); ++k) *sink << res.n[k] << ',' << format_double(res.mean_risk[k]) << '\n';
  if (res.n.size() >= 2 && res.mean_risk.front() > 0.0 && res.mean_risk.back() > 0.0) {
    const double slope = std::log(res.mean_risk.back() / res.mean_risk.front()) /
                         std::log(static_cast<double>(res.n.back()) / static_cast<double>(res.n.front()));
    std::cerr << "log-log slope=" << format_double(slope) << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Totally concave and convex least-squares regression"};
  app.require_subcommand(1);

  DataArgs fit_data, pred_data, check_data, cv_data, exp_data;
  SpecArgs fit_spec, check_spec, cv_spec, rate_spec;
  std::string fit_out, pred_out, pred_model, cv_out, cv_grid = "auto", plan_path, exp_out = "report";
  int cv_folds = 10, reps = 20;
  std::uint64_t cv_seed = 0, rate_seed = 0;
  std::optional<std::uint64_t> exp_seed;
  bool check_model = false;
  std::optional<int> resolution;
  std::optional<double> check_tol;
  std::string truth = "neg_square";
  std::vector<Index> n_list{32, 128, 512};
  double noise = 0.2;

  auto* fit_cmd = app.add_subcommand("fit", "fit a model and write it as JSON");
  add_data_options(fit_cmd, fit_data);
  add_spec_options(fit_cmd, fit_spec);
  fit_cmd->add_option("-o,--output", fit_out, "model file");

  auto* pred_cmd = app.add_subcommand("predict", "evaluate a saved model on a covariate CSV");
  pred_cmd->add_option("model", pred_model, "model JSON")->required();
  add_data_options(pred_cmd, pred_data);
  pred_cmd->add_option("-o,--output", pred_out, "prediction CSV (default: stdout)");

  auto* check_cmd = app.add_subcommand("check", "certify a grid function (long CSV) or a saved model");
  check_cmd->add_option("data", check_data.path, "grid CSV, or model JSON with --model")->required();
  check_cmd->add_flag("--no-header", check_data.no_header, "the first row holds data");
  check_cmd->add_option("--s", check_spec.s, "interaction order")->capture_default_str();
  check_cmd->add_option("--shape", check_spec.shape, "concave or convex")->capture_default_str();
  check_cmd->add_option("--variant", check_spec.variant, "tc (total) or axial")->capture_default_str();
  check_cmd->add_flag("--model", check_model, "the input is a model file");
  check_cmd->add_option("--resolution", resolution, "equally spaced grid cells per axis for model checks");
  check_cmd->add_option("--tol", check_tol, "tolerance (grid: absolute; model: relative)");

  auto* cv_cmd = app.add_subcommand("cv", "choose the hinge-weight cap by cross-validation");
  add_data_options(cv_cmd, cv_data);
  add_spec_options(cv_cmd, cv_spec);
  cv_cmd->add_option("--v-grid", cv_grid, "'auto' or a comma-separated list")->capture_default_str();
  cv_cmd->add_option("--folds", cv_folds, "number of folds")->capture_default_str();
  cv_cmd->add_option("--seed", cv_seed, "fold assignment seed")->capture_default_str();
  cv_cmd->add_option("-o,--output", cv_out, "CV table CSV");

  auto* exp_cmd = app.add_subcommand("experiment", "repeated train/test splits over a model roster");
  add_data_options(exp_cmd, exp_data);
  exp_cmd->add_option("--plan", plan_path, "experiment plan JSON")->required();
  exp_cmd->add_option("--seed", exp_seed, "override the plan seed");
  exp_cmd->add_option("-o,--output", exp_out, "report directory")->capture_default_str();

  auto* rate_cmd = app.add_subcommand("rate-sanity", "risk of the fit on synthetic lattice data");
  rate_cmd->add_option("--truth", truth, "neg_square or neg_quad2")->capture_default_str();
  rate_cmd->add_option("--n", n_list, "sample sizes")->delimiter(',');
  rate_cmd->add_option("--noise", noise, "noise standard deviation")->capture_default_str();
  rate_cmd->add_option("--reps", reps, "repetitions per sample size")->capture_default_str();
  rate_cmd->add_option("--seed", rate_seed, "random seed")->capture_default_str();
  rate_cmd->add_option("--tol", rate_spec.tol, "solver tolerance")->capture_default_str();
  rate_cmd->add_option("--max-iter", rate_spec.max_iter, "solver iteration limit")->capture_default_str();
  std::string rate_out;
  rate_cmd->add_option("-o,--output", rate_out, "result CSV (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit_data, fit_spec, fit_out);
    if (pred_cmd->parsed()) return run_predict(pred_model, pred_data, pred_out);
    if (check_cmd->parsed()) return run_check(check_data, check_spec, check_model, resolution, check_tol);
    if (cv_cmd->parsed()) return run_cv(cv_data, cv_spec, cv_grid, cv_folds, cv_seed, cv_out);
    if (exp_cmd->parsed()) return run_experiment_cmd(exp_data, plan_path, exp_out, exp_seed);
    if (rate_cmd->parsed()) return run_rate(truth, n_list, noise, reps, rate_seed, rate_spec, rate_out);
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}
