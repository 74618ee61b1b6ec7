#include "tcreg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "tcreg/errors.hpp"

namespace tcreg {

using nlohmann::json;

const std::string& entry_name(const RosterEntry& entry) {
  return std::visit([](const auto& e) -> const std::string& { return e.name; }, entry);
}

void ExperimentPlan::validate(Index d) const {
  if (repetitions < 1) throw SpecError("experiment: repetitions must be at least 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw SpecError("experiment: need 0 < train_fraction < 1");
  if (roster.empty()) throw SpecError("experiment: the model roster is empty");
  std::set<std::string> names;
  for (const RosterEntry& entry : roster) {
    if (!names.insert(entry_name(entry)).second) throw SpecError("experiment: duplicate model name " + entry_name(entry));
    if (const auto* e = std::get_if<EstimatorEntry>(&entry)) {
      if (e->name.empty()) throw SpecError("experiment: estimator needs a name");
      e->spec.validate(d);
      if (e->cv_folds && *e->cv_folds < 2) throw SpecError("experiment: cv_folds must be at least 2");
      if (e->cv_folds && e->spec.variant == Variant::kAxial) {
        throw SpecError("experiment: the axial estimator has no cap to tune");
      }
    } else {
      std::get<BaselineSpec>(entry).validate(d);
    }
  }
}

ExperimentPlan plan_from_json(const json& j, const std::vector<std::string>& column_names) {
  try {
    ExperimentPlan plan;
    plan.repetitions = j.value("repetitions", 1);
    plan.train_fraction = j.value("train_fraction", 0.9);
    plan.seed = j.value("seed", std::uint64_t{0});
    for (const json& m : j.at("models")) {
      const std::string type = m.at("type").get<std::string>();
      const std::string name = m.at("name").get<std::string>();
      if (type == "baseline") {
        BaselineSpec spec{name, {}};
        for (const json& t : m.at("terms")) spec.recipe.push_back(parse_feature_term(t.get<std::string>(), column_names));
        plan.roster.emplace_back(std::move(spec));
      } else if (type == "estimator") {
        EstimatorEntry e;
        e.name = name;
        e.spec.variant = parse_variant(m.value("variant", std::string("tc")));
        e.spec.shape = parse_shape(m.value("shape", std::string("concave")));
        e.spec.s = m.value("s", 1);
        e.spec.p = m.value("p", 0);
        e.spec.q = m.value("q", e.spec.p);
        if (m.contains("v_cap")) e.spec.v_cap = m.at("v_cap").get<double>();
        if (m.contains("proxy")) e.spec.proxy_counts = m.at("proxy").get<std::vector<int>>();
        if (m.contains("cv_folds")) e.cv_folds = m.at("cv_folds").get<int>();
        if (m.contains("v_grid")) e.v_grid = m.at("v_grid").get<std::vector<double>>();
        plan.roster.emplace_back(std::move(e));
      } else {
        throw SpecError("experiment: unknown model type '" + type + "' (expected baseline or estimator)");
      }
    }
    return plan;
  } catch (const json::exception& e) {
    throw SpecError(std::string("experiment plan: ") + e.what());
  }
}

namespace {

double test_mse(const Dataset& train, const Dataset& test, const RosterEntry& entry, std::uint64_t cv_seed) {
  Eigen::VectorXd pred;
  if (const auto* b = std::get_if<BaselineSpec>(&entry)) {
    pred = fit_baseline(train, *b).predict(test.X);
  } else {
    const auto& e = std::get<EstimatorEntry>(entry);
    if (e.spec.variant == Variant::kAxial) {
      AxialOptions opts;
      opts.shape = e.spec.shape;
      pred = predict_axial(fit_axially_concave(train, opts), test.X).values;
    } else {
      ModelSpec spec = e.spec;
      if (e.cv_folds) {
        const Eigen::VectorXd grid =
            e.v_grid.empty() ? auto_v_grid(train, spec)
                             : Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(e.v_grid.data(),
                                                                                static_cast<Index>(e.v_grid.size())));
        CvOptions cv;
        cv.folds = *e.cv_folds;
        cv.seed = cv_seed;
        spec.v_cap = cross_validate_V(train, spec, grid, cv).selected_v;
      }
      pred = predict(fit(train, spec), test.X).values;
    }
  }
  return (pred - test.y).squaredNorm() / static_cast<double>(test.n());
}

}  // namespace

ExperimentReport run_experiment(const Dataset& data, const ExperimentPlan& plan) {
  data.validate();
  plan.validate(data.d());
  const Index n = data.n();
  if (n < 2) throw DataError("experiment: need at least two rows");
  const auto n_train =
      std::clamp<Index>(static_cast<Index>(std::llround(plan.train_fraction * static_cast<double>(n))), 1, n - 1);

  ExperimentReport report;
  const auto models = static_cast<Index>(plan.roster.size());
  for (const RosterEntry& e : plan.roster) report.models.push_back(entry_name(e));
  report.mse = Eigen::MatrixXd::Constant(plan.repetitions, models, std::numeric_limits<double>::quiet_NaN());
  report.ranks = Eigen::MatrixXi::Zero(plan.repetitions, models);
  report.tied.assign(static_cast<std::size_t>(plan.repetitions), false);

  std::mt19937_64 rng(plan.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (int rep = 0; rep < plan.repetitions; ++rep) {
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<Index> train(order.begin(), order.begin() + n_train), test(order.begin() + n_train, order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const Dataset tr = data.subset(train), te = data.subset(test);
    for (Index m = 0; m < models; ++m) {
      try {
        report.mse(rep, m) = test_mse(tr, te, plan.roster[static_cast<std::size_t>(m)],
                                      plan.seed + static_cast<std::uint64_t>(rep) + 1);
      } catch (const std::exception&) {
        // Left as NaN: the entry is reported missing for this repetition.
      }
    }

    std::vector<Index> present;
    for (Index m = 0; m < models; ++m) {
      if (std::isfinite(report.mse(rep, m))) present.push_back(m);
    }
    std::stable_sort(present.begin(), present.end(),
                     [&](Index a, Index b) { return report.mse(rep, a) < report.mse(rep, b); });
    for (std::size_t k = 0; k < present.size(); ++k) {
      report.ranks(rep, present[k]) = static_cast<int>(k) + 1;
      if (k > 0 && report.mse(rep, present[k]) == report.mse(rep, present[k - 1])) {
        report.tied[static_cast<std::size_t>(rep)] = true;
      }
    }
  }

  report.rank_cdf = Eigen::MatrixXd::Zero(models, models);
  for (Index m = 0; m < models; ++m) {
    for (Index r = 0; r < models; ++r) {
      int count = 0;
      for (int rep = 0; rep < plan.repetitions; ++rep) {
        const int rank = report.ranks(rep, m);
        if (rank >= 1 && rank <= r + 1) ++count;
      }
      report.rank_cdf(m, r) = static_cast<double>(count) / plan.repetitions;
    }
  }
  return report;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mse_table(const ExperimentReport& report, std::ostream& out) {
  out << "rep,model,mse\n";
  for (Index rep = 0; rep < report.mse.rows(); ++rep) {
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      out << rep + 1 << ',' << report.models[m] << ',' << format_double(report.mse(rep, static_cast<Index>(m)))
          << '\n';
    }
  }
}

void write_rank_cdf(const ExperimentReport& report, std::ostream& out) {
  out << "model,rank,cum_fraction\n";
  for (std::size_t m = 0; m < report.models.size(); ++m) {
    for (Index r = 0; r < report.rank_cdf.cols(); ++r) {
      out << report.models[m] << ',' << r + 1 << ',' << format_double(report.rank_cdf(static_cast<Index>(m), r))
          << '\n';
    }
  }
}

void write_rank_table(const ExperimentReport& report, std::ostream& out) {
  out << "rep,model,rank,tied\n";
  for (Index rep = 0; rep < report.ranks.rows(); ++rep) {
    for (std::size_t m = 0; m < report.models.size(); ++m) {
      const int rank = report.ranks(rep, static_cast<Index>(m));
      out << rep + 1 << ',' << report.models[m] << ',' << (rank > 0 ? std::to_string(rank) : "NA") << ','
          << (report.tied[static_cast<std::size_t>(rep)] ? 1 : 0) << '\n';
    }
  }
}

SyntheticTruth parse_truth(const std::string& name) {
  if (name == "neg_square") return SyntheticTruth::kNegSquare;
  if (name == "neg_quad2") return SyntheticTruth::kNegQuadratic2;
  throw SpecError("unknown truth '" + name + "' (expected neg_square or neg_quad2)");
}

int truth_dimension(SyntheticTruth truth) { return truth == SyntheticTruth::kNegSquare ? 1 : 2; }

double truth_value(SyntheticTruth truth, const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  if (truth == SyntheticTruth::kNegSquare) return -x(0) * x(0);
  return -x(0) * x(0) - x(1) * x(1) + x(0) * x(1);
}

RateSanityResult rate_sanity(SyntheticTruth truth, const std::vector<Index>& n_list, double noise_sd, int reps,
                             std::uint64_t seed, const SolverOptions& options) {
  if (reps < 1) throw SpecError("rate sanity: reps must be at least 1");
  if (!(noise_sd >= 0.0)) throw SpecError("rate sanity: noise_sd must be nonnegative");
  const int d = truth_dimension(truth);
  RateSanityResult out;
  for (std::size_t idx = 0; idx < n_list.size(); ++idx) {
    const auto m = std::max<Index>(2, std::llround(std::pow(static_cast<double>(n_list[idx]), 1.0 / d)));
    Index n = 1;
    for (int k = 0; k < d; ++k) n *= m;
    Dataset data;
    data.X.resize(n, d);
    for (Index r = 0; r < n; ++r) {
      Index rest = r;
      for (int k = d - 1; k >= 0; --k) {
        data.X(r, k) = static_cast<double>(rest % m) / static_cast<double>(m);
        rest /= m;
      }
    }
    Eigen::VectorXd truth_values(n);
    for (Index r = 0; r < n; ++r) truth_values(r) = truth_value(truth, data.X.row(r));

    ModelSpec spec;
    spec.variant = Variant::kTc;
    spec.s = d;
    std::mt19937_64 rng(seed + 1000003ULL * idx);
    std::normal_distribution<double> noise(0.0, 1.0);
    double total = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      data.y = truth_values;
      for (Index r = 0; r < n; ++r) data.y(r) += noise_sd * noise(rng);
      const FittedModel model = fit(data, spec, options);
      total += (predict(model, data.X).values - truth_values).squaredNorm() / static_cast<double>(n);
    }
    out.n.push_back(n);
    out.mean_risk.push_back(total / reps);
  }
  return out;
}

}  // namespace tcreg
