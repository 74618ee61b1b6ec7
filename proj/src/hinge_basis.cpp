#include "tcreg/hinge_basis.hpp"

#include <algorithm>
#include <map>

#include "tcreg/errors.hpp"

namespace tcreg {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kTc: return "tc";
    case Variant::kTcL: return "tc-l";
    case Variant::kTcLI: return "tc-l-i";
    case Variant::kAxial: return "axial";
  }
  return "?";
}

std::string to_string(Shape s) { return s == Shape::kConcave ? "concave" : "convex"; }

Variant parse_variant(const std::string& text) {
  if (text == "tc") return Variant::kTc;
  if (text == "tc-l") return Variant::kTcL;
  if (text == "tc-l-i") return Variant::kTcLI;
  if (text == "axial") return Variant::kAxial;
  throw SpecError("unknown variant '" + text + "' (expected tc, tc-l, tc-l-i or axial)");
}

Shape parse_shape(const std::string& text) {
  if (text == "concave") return Shape::kConcave;
  if (text == "convex") return Shape::kConvex;
  throw SpecError("unknown shape '" + text + "' (expected concave or convex)");
}

int ModelSpec::constrained_count(Index d) const {
  switch (variant) {
    case Variant::kTc:
    case Variant::kAxial: return static_cast<int>(d);
    case Variant::kTcL:
    case Variant::kTcLI: return p;
  }
  return 0;
}

void ModelSpec::validate(Index d) const {
  const int dd = static_cast<int>(d);
  if (dd < 1) throw SpecError("need at least one covariate");
  if (s < 1) throw SpecError("interaction order s must be at least 1");
  switch (variant) {
    case Variant::kTc:
      if (s > dd) throw SpecError("tc: need s <= d");
      break;
    case Variant::kTcL:
      if (p < 1 || p > dd) throw SpecError("tc-l: need 1 <= p <= d");
      if (s > p) throw SpecError("tc-l: need s <= p");
      break;
    case Variant::kTcLI:
      if (p < 1 || p > dd) throw SpecError("tc-l-i: need 1 <= p <= d");
      if (q < p || q > dd) throw SpecError("tc-l-i: need p <= q <= d");
      if (s > q) throw SpecError("tc-l-i: need s <= q");
      break;
    case Variant::kAxial:
      break;
  }
  if (v_cap && !(*v_cap >= 0.0)) throw SpecError("V cap must be nonnegative");
  if (!proxy_counts.empty()) {
    const auto given = static_cast<Index>(proxy_counts.size());
    if (given != d && given != constrained_count(d)) {
      throw SpecError("proxy counts need one entry per covariate or per shape-constrained covariate");
    }
    for (int c : proxy_counts) {
      if (c < 1) throw SpecError("proxy counts must be positive");
    }
  }
}

bool term_less(const BasisTerm& a, const BasisTerm& b) {
  if (a.order() != b.order()) return a.order() < b.order();
  if (a.S != b.S) return a.S < b.S;
  if (a.T != b.T) return a.T < b.T;
  if (a.kind != b.kind) return a.kind == TermKind::kMonomial;
  return std::lexicographical_compare(a.knots.data(), a.knots.data() + a.knots.size(), b.knots.data(),
                                      b.knots.data() + b.knots.size());
}

namespace {

std::vector<double> axis_knots(const Eigen::MatrixXd& x_unit, int j, std::span<const int> proxy_counts) {
  std::vector<double> vals{0.0};
  if (!proxy_counts.empty()) {
    const int N = proxy_counts[static_cast<std::size_t>(j)];
    for (int i = 1; i < N; ++i) vals.push_back(static_cast<double>(i) / N);
    return vals;
  }
  for (Index r = 0; r < x_unit.rows(); ++r) vals.push_back(x_unit(r, j));
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  return vals;
}

}  // namespace

KnotLattice build_lattice(const Eigen::MatrixXd& x_unit, const IndexSet& S, std::span<const int> proxy_counts) {
  if (S.empty()) throw SpecError("build_lattice: empty subset");
  for (std::size_t a = 0; a < S.size(); ++a) {
    if (S[a] < 0 || S[a] >= x_unit.cols()) throw SpecError("build_lattice: coordinate out of range");
    if (a > 0 && S[a] <= S[a - 1]) throw SpecError("build_lattice: subset must be sorted and distinct");
  }
  if (!proxy_counts.empty() && static_cast<Index>(proxy_counts.size()) != x_unit.cols()) {
    throw SpecError("build_lattice: proxy counts need one entry per coordinate");
  }

  std::vector<std::vector<double>> axes;
  for (int j : S) axes.push_back(axis_knots(x_unit, j, proxy_counts));

  KnotLattice lattice;
  lattice.subset = S;
  std::vector<std::size_t> pos(S.size(), 0);
  while (true) {
    bool zero = true;
    Eigen::VectorXd t(static_cast<Index>(S.size()));
    for (std::size_t a = 0; a < S.size(); ++a) {
      t(static_cast<Index>(a)) = axes[a][pos[a]];
      zero = zero && t(static_cast<Index>(a)) == 0.0;
    }
    if (!zero) lattice.knots.push_back(std::move(t));
    std::size_t a = S.size();
    while (a > 0) {
      --a;
      if (++pos[a] < axes[a].size()) break;
      pos[a] = 0;
      if (a == 0) return lattice;
    }
  }
}

std::vector<BasisTerm> enumerate_terms(const ModelSpec& spec, const Eigen::MatrixXd& x_unit) {
  const Index d = x_unit.cols();
  spec.validate(d);
  if (spec.variant == Variant::kAxial) throw SpecError("enumerate_terms: axial models have no hinge basis");

  std::vector<BasisTerm> terms;
  terms.push_back(BasisTerm{});  // intercept

  // Counts given only for the shape-constrained covariates are padded; the padding is never read.
  std::vector<int> proxy = spec.proxy_counts;
  if (!proxy.empty()) proxy.resize(static_cast<std::size_t>(d), 1);

  std::map<IndexSet, KnotLattice> lattices;
  auto add_family = [&](const IndexSet& S, const IndexSet& T) {
    terms.push_back(BasisTerm{TermKind::kMonomial, S, T, {}});
    if (S.empty()) return;
    auto it = lattices.find(S);
    if (it == lattices.end()) it = lattices.emplace(S, build_lattice(x_unit, S, proxy)).first;
    for (const Eigen::VectorXd& t : it->second.knots) terms.push_back(BasisTerm{TermKind::kHinge, S, T, t});
  };
  auto add_linear = [&](int first, int last_exclusive) {
    for (int j = first; j < last_exclusive; ++j) terms.push_back(BasisTerm{TermKind::kMonomial, {j}, {}, {}});
  };

  const int dd = static_cast<int>(d);
  switch (spec.variant) {
    case Variant::kTc:
      for (const IndexSet& S : subsets_of(iota_set(0, dd), 1, spec.s)) add_family(S, {});
      break;
    case Variant::kTcL:
      for (const IndexSet& S : subsets_of(iota_set(0, spec.p), 1, spec.s)) add_family(S, {});
      add_linear(spec.p, dd);
      break;
    case Variant::kTcLI:
      for (const IndexSet& S : subsets_of(iota_set(0, spec.p), 0, spec.s)) {
        for (const IndexSet& T : subsets_of(iota_set(spec.p, spec.q), 0, spec.s - static_cast<int>(S.size()))) {
          if (S.empty() && T.empty()) continue;
          add_family(S, T);
        }
      }
      add_linear(spec.q, dd);
      break;
    case Variant::kAxial:
      break;
  }
  std::stable_sort(terms.begin(), terms.end(), term_less);
  return terms;
}

DesignMatrix assemble_design(const Eigen::MatrixXd& x_unit, std::vector<BasisTerm> terms) {
  DesignMatrix design;
  const Index n = x_unit.rows();
  design.values.resize(n, static_cast<Index>(terms.size()));
  for (std::size_t c = 0; c < terms.size(); ++c) {
    const BasisTerm& term = terms[c];
    auto col = design.values.col(static_cast<Index>(c));
    for (Index r = 0; r < n; ++r) col(r) = eval_term(term, x_unit.row(r));
    (term.kind == TermKind::kHinge ? design.pos_block : design.free_block).push_back(static_cast<Index>(c));
  }
  design.terms = std::move(terms);
  return design;
}

}  // namespace tcreg
