#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/types.hpp"

namespace tcreg {

enum class Variant { kTc, kTcL, kTcLI, kAxial };
enum class Shape { kConcave, kConvex };

std::string to_string(Variant v);
std::string to_string(Shape s);
Variant parse_variant(const std::string& text);
Shape parse_shape(const std::string& text);

/// Which function class to fit. Coordinates are zero-based throughout; `p` and `q`
/// are counts, so the shape-constrained covariates are 0..p-1 and the
/// interaction-eligible linear covariates are p..q-1.
struct ModelSpec {
  Variant variant = Variant::kTc;
  int s = 1;
  int p = 0;
  int q = 0;
  Shape shape = Shape::kConcave;
  std::optional<double> v_cap;
  std::vector<int> proxy_counts;  ///< empty: exact lattice; else one count per coordinate
                                  ///< (or per shape-constrained coordinate)

  /// Throws SpecError on violated invariants for dimension d.
  void validate(Index d) const;

  /// Number of coordinates that carry hinge factors.
  int constrained_count(Index d) const;
};

/// Knots of one subset S: the product lattice minus the zero vector.
struct KnotLattice {
  IndexSet subset;
  std::vector<Eigen::VectorXd> knots;
};

enum class TermKind { kMonomial, kHinge };

/// One column of the reduced problem.
///   monomial: prod_{j in S u T} x_j  (the intercept has S = T = {})
///   hinge:    prod_{j in S} (x_j - t_j)_+ * prod_{k in T} x_k
struct BasisTerm {
  TermKind kind = TermKind::kMonomial;
  IndexSet S;
  IndexSet T;
  Eigen::VectorXd knots;  ///< |S| entries for hinges, empty for monomials

  bool is_intercept() const { return kind == TermKind::kMonomial && S.empty() && T.empty(); }
  int order() const { return static_cast<int>(S.size() + T.size()); }
};

/// Strict weak order used to sort terms: |S u T|, S, T, monomial before hinge, knots.
bool term_less(const BasisTerm& a, const BasisTerm& b);

struct DesignMatrix {
  std::vector<BasisTerm> terms;
  Eigen::MatrixXd values;         ///< n x terms.size()
  std::vector<Index> free_block;  ///< sign-free columns (intercept, monomials)
  std::vector<Index> pos_block;   ///< hinge columns

  Eigen::MatrixXd free_matrix() const { return values(Eigen::all, free_block); }
  Eigen::MatrixXd pos_matrix() const { return values(Eigen::all, pos_block); }
};

/// Exact mode (empty `proxy_counts`): product over S of {0} u {x_j^(i)}, minus zero.
/// Proxy mode: product over S of {0, 1/N_j, ..., (N_j - 1)/N_j}, minus zero.
KnotLattice build_lattice(const Eigen::MatrixXd& x_unit, const IndexSet& S,
                          std::span<const int> proxy_counts = {});

/// Terms of the class described by `spec`, with lattices from the scaled data.
std::vector<BasisTerm> enumerate_terms(const ModelSpec& spec, const Eigen::MatrixXd& x_unit);

template <typename Derived>
typename Derived::Scalar eval_term(const BasisTerm& term, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar v(1);
  if (term.kind == TermKind::kHinge) {
    for (std::size_t a = 0; a < term.S.size(); ++a) {
      const Scalar h = x(term.S[a]) - Scalar(term.knots(static_cast<Index>(a)));
      if (!(h > Scalar(0))) return Scalar(0);
      v *= h;
    }
  } else {
    for (int j : term.S) v *= x(j);
  }
  for (int k : term.T) v *= x(k);
  return v;
}

DesignMatrix assemble_design(const Eigen::MatrixXd& x_unit, std::vector<BasisTerm> terms);

}  // namespace tcreg
