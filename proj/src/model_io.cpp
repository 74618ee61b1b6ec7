#include "tcreg/model_io.hpp"

#include <cmath>
#include <fstream>

#include "tcreg/errors.hpp"

namespace tcreg {

using nlohmann::json;

namespace {

json scaler_to_json(const UnitScaler& scaler) {
  json out = json::array();
  for (const auto& r : scaler.ranges) out.push_back({{"min", r.min}, {"max", r.max}});
  return out;
}

UnitScaler scaler_from_json(const json& j, Index d) {
  if (!j.is_array() || static_cast<Index>(j.size()) != d) {
    throw DataError("model file: scaler must list one {min, max} per covariate");
  }
  UnitScaler scaler;
  for (const auto& r : j) {
    ColumnRange range{r.at("min").get<double>(), r.at("max").get<double>()};
    if (!(range.max >= range.min)) throw DataError("model file: scaler max below min");
    scaler.ranges.push_back(range);
  }
  return scaler;
}

IndexSet index_set_from_json(const json& j, Index d) {
  IndexSet s = j.get<IndexSet>();
  for (std::size_t a = 0; a < s.size(); ++a) {
    if (s[a] < 0 || s[a] >= d) throw DataError("model file: coordinate index out of range");
    if (a > 0 && s[a] <= s[a - 1]) throw DataError("model file: index sets must be sorted and distinct");
  }
  return s;
}

void check_header(const json& j) {
  if (!j.is_object()) throw DataError("model file: expected a JSON object");
  if (!j.contains("schema_version")) throw DataError("model file: missing schema_version");
  const int version = j.at("schema_version").get<int>();
  if (version != kModelSchemaVersion) {
    throw DataError("model file: unsupported schema_version " + std::to_string(version) + " (expected " +
                    std::to_string(kModelSchemaVersion) + ")");
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// nlohmann::json throws its own exception types on missing keys or wrong types.
template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
}

}  // namespace

json model_to_json(const FittedModel& model) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["variant"] = to_string(model.spec.variant);
  j["shape"] = to_string(model.spec.shape);
  j["s"] = model.spec.s;
  j["p"] = model.spec.p;
  j["q"] = model.spec.q;
  j["d"] = model.d;
  if (model.spec.v_cap) j["v_cap"] = *model.spec.v_cap;
  if (!model.spec.proxy_counts.empty()) j["proxy"] = model.spec.proxy_counts;
  j["scaler"] = scaler_to_json(model.scaler);
  j["intercept"] = model.intercept;
  j["monomial_terms"] = json::array();
  for (const auto& m : model.monomials) {
    j["monomial_terms"].push_back({{"S", m.term.S}, {"T", m.term.T}, {"coef", m.coef}});
  }
  j["hinge_terms"] = json::array();
  for (const auto& h : model.hinges) {
    std::vector<double> knots(h.term.knots.data(), h.term.knots.data() + h.term.knots.size());
    j["hinge_terms"].push_back({{"S", h.term.S}, {"T", h.term.T}, {"knots", knots}, {"weight", h.weight}});
  }
  j["training_sse"] = model.training_sse;
  return j;
}

FittedModel model_from_json(const json& j) {
  check_header(j);
  return guarded([&] {
    FittedModel model;
    model.spec.variant = parse_variant(j.at("variant").get<std::string>());
    if (model.spec.variant == Variant::kAxial) throw DataError("model file: axial model where a hinge model was expected");
    model.spec.shape = parse_shape(j.at("shape").get<std::string>());
    model.spec.s = j.at("s").get<int>();
    model.spec.p = j.at("p").get<int>();
    model.spec.q = j.at("q").get<int>();
    if (j.contains("v_cap")) model.spec.v_cap = j.at("v_cap").get<double>();
    if (j.contains("proxy")) model.spec.proxy_counts = j.at("proxy").get<std::vector<int>>();
    model.d = j.at("d").get<Index>();
    try {
      model.spec.validate(model.d);
    } catch (const SpecError& e) {
      throw DataError(std::string("model file: ") + e.what());
    }
    model.scaler = scaler_from_json(j.at("scaler"), model.d);
    model.intercept = j.at("intercept").get<double>();
    for (const auto& m : j.at("monomial_terms")) {
      BasisTerm term{TermKind::kMonomial, index_set_from_json(m.at("S"), model.d),
                     index_set_from_json(m.at("T"), model.d), {}};
      model.monomials.push_back({std::move(term), m.at("coef").get<double>()});
    }
    for (const auto& h : j.at("hinge_terms")) {
      BasisTerm term{TermKind::kHinge, index_set_from_json(h.at("S"), model.d),
                     index_set_from_json(h.at("T"), model.d), {}};
      const auto knots = h.at("knots").get<std::vector<double>>();
      if (term.S.empty() || knots.size() != term.S.size()) {
        throw DataError("model file: hinge terms need a nonempty S and one knot per entry of S");
      }
      term.knots = Eigen::Map<const Eigen::VectorXd>(knots.data(), static_cast<Index>(knots.size()));
      const double weight = h.at("weight").get<double>();
      if (!(weight >= 0.0) || !std::isfinite(weight)) {
        throw DataError("model file: hinge weight must be finite and nonnegative, got " + std::to_string(weight));
      }
      model.hinges.push_back({std::move(term), weight});
    }
    if (j.contains("training_sse")) model.training_sse = j.at("training_sse").get<double>();
    return model;
  });
}

json model_to_json(const AcFittedModel& model) {
  json j;
  j["schema_version"] = kModelSchemaVersion;
  j["variant"] = to_string(Variant::kAxial);
  j["shape"] = to_string(model.shape);
  j["d"] = model.d;
  j["scaler"] = scaler_to_json(model.scaler);
  j["breakpoints"] = json::array();
  for (const auto& u : model.breakpoints) j["breakpoints"].push_back(std::vector<double>(u.data(), u.data() + u.size()));
  j["theta"] = std::vector<double>(model.theta.data(), model.theta.data() + model.theta.size());
  j["training_sse"] = model.training_sse;
  return j;
}

AcFittedModel axial_model_from_json(const json& j) {
  check_header(j);
  return guarded([&] {
    if (j.at("variant").get<std::string>() != "axial") throw DataError("model file: not an axial model");
    AcFittedModel model;
    model.shape = parse_shape(j.at("shape").get<std::string>());
    model.d = j.at("d").get<Index>();
    model.scaler = scaler_from_json(j.at("scaler"), model.d);
    Index total = 1;
    for (const auto& b : j.at("breakpoints")) {
      const auto u = b.get<std::vector<double>>();
      model.breakpoints.emplace_back(Eigen::Map<const Eigen::VectorXd>(u.data(), static_cast<Index>(u.size())));
      total *= static_cast<Index>(u.size());
    }
    if (static_cast<Index>(model.breakpoints.size()) != model.d) {
      throw DataError("model file: need one breakpoint list per covariate");
    }
    const auto theta = j.at("theta").get<std::vector<double>>();
    model.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Index>(theta.size()));
    // Validates monotone breakpoints and the value count.
    (void)GridFunction<double>(model.breakpoints, model.theta);
    if (model.theta.size() != total) throw DataError("model file: theta size does not match the grid");
    if (j.contains("training_sse")) model.training_sse = j.at("training_sse").get<double>();
    return model;
  });
}

void save_model(const FittedModel& model, const std::filesystem::path& path) { write_json(model_to_json(model), path); }

void save_model(const AcFittedModel& model, const std::filesystem::path& path) {
  write_json(model_to_json(model), path);
}

FittedModel load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

AnyModel load_any_model(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.is_object() && j.contains("variant") && j["variant"] == "axial") return axial_model_from_json(j);
  return model_from_json(j);
}

json report_to_json(const CertificateReport& report) {
  json j;
  j["passed"] = report.passed;
  j["tolerance"] = report.tolerance;
  j["vacuous_axes"] = report.vacuous_axes;
  j["families"] = json::object();
  for (const auto& [name, fam] : report.families) {
    json f;
    f["checked"] = fam.checked;
    if (fam.vacuous()) {
      f["worst_violation"] = nullptr;
    } else {
      f["worst_violation"] = fam.worst_violation;
      f["at_index"] = fam.at_index;
      f["order"] = fam.order;
    }
    j["families"][name] = f;
  }
  return j;
}

}  // namespace tcreg
