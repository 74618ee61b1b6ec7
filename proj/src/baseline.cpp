#include "tcreg/baseline.hpp"

#include <algorithm>
#include <charconv>
#include <map>

#include "tcreg/errors.hpp"

namespace tcreg {

double FeatureTerm::eval(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  double v = 1.0;
  for (const auto& [col, power] : powers) {
    for (int k = 0; k < power; ++k) v *= x(col);
  }
  return v;
}

void BaselineSpec::validate(Index d) const {
  if (name.empty()) throw SpecError("baseline needs a name");
  for (const FeatureTerm& term : recipe) {
    if (term.powers.empty()) throw SpecError("baseline " + name + ": empty feature term");
    for (const auto& [col, power] : term.powers) {
      if (col < 0 || col >= d) throw SpecError("baseline " + name + ": column out of range");
      if (power < 1) throw SpecError("baseline " + name + ": exponents must be positive");
    }
  }
}

namespace {

int parse_int(const std::string& text, const std::string& context) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw SpecError("cannot read '" + text + "' in feature term '" + context + "'");
  }
  return v;
}

int resolve_column(const std::string& name, const std::vector<std::string>& column_names,
                   const std::string& context) {
  const auto it = std::find(column_names.begin(), column_names.end(), name);
  if (it != column_names.end()) return static_cast<int>(it - column_names.begin());
  if (name.size() > 1 && name[0] == 'x') return parse_int(name.substr(1), context) - 1;
  throw SpecError("unknown column '" + name + "' in feature term '" + context + "'");
}

}  // namespace

FeatureTerm parse_feature_term(const std::string& text, const std::vector<std::string>& column_names) {
  std::map<int, int> powers;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t star = std::min(text.find('*', start), text.size());
    std::string factor = text.substr(start, star - start);
    factor.erase(std::remove(factor.begin(), factor.end(), ' '), factor.end());
    if (factor.empty()) throw SpecError("empty factor in feature term '" + text + "'");
    int power = 1;
    const std::size_t caret = factor.find('^');
    if (caret != std::string::npos) {
      power = parse_int(factor.substr(caret + 1), text);
      factor.resize(caret);
    }
    const int col = resolve_column(factor, column_names, text);
    if (col < 0) throw SpecError("column index must be at least 1 in '" + text + "'");
    if (power < 1) throw SpecError("exponents must be positive in '" + text + "'");
    powers[col] += power;
    start = star + 1;
  }
  FeatureTerm term;
  term.powers.assign(powers.begin(), powers.end());
  return term;
}

Eigen::MatrixXd OlsModel::features(const Eigen::MatrixXd& X) const {
  Eigen::MatrixXd F(X.rows(), static_cast<Index>(spec.recipe.size()) + 1);
  F.col(0).setOnes();
  for (Index r = 0; r < X.rows(); ++r) {
    for (std::size_t t = 0; t < spec.recipe.size(); ++t) F(r, static_cast<Index>(t) + 1) = spec.recipe[t].eval(X.row(r));
  }
  return F;
}

Eigen::VectorXd OlsModel::predict(const Eigen::MatrixXd& X) const { return features(X) * coef; }

OlsModel fit_baseline(const Dataset& data, const BaselineSpec& spec) {
  data.validate();
  spec.validate(data.d());
  OlsModel model{spec, {}};
  Eigen::MatrixXd F = model.features(data.X);
  Eigen::VectorXd scale(F.cols());
  for (Index j = 0; j < F.cols(); ++j) {
    const double s = F.col(j).norm();
    scale(j) = s > 0.0 ? s : 1.0;
  }
  F = F * scale.cwiseInverse().asDiagonal();
  Eigen::MatrixXd gram = F.transpose() * F;
  gram.diagonal().array() += 1e-12;
  const Eigen::VectorXd z = gram.ldlt().solve(F.transpose() * data.y);
  model.coef = scale.cwiseInverse().asDiagonal() * z;
  return model;
}

}  // namespace tcreg
