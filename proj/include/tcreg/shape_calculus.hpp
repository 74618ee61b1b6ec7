#pragma once

// Tensor divided differences over rectangular grids, and the shape
// certificates and constructions built on them.
//
// A divided difference of order p = (p_1, ..., p_d) uses p_k + 1 points on
// axis k and is the tensor product of one-dimensional divided differences:
//
//   sum_{i_1} ... sum_{i_d}  f(x_{i_1}, ..., x_{i_d}) / prod_k prod_{j != i_k} (x_{i_k} - x_j)
//
// Certificates only look at windows of consecutive breakpoints. A divided
// difference over non-consecutive points is a positive combination of
// consecutive ones, so on a fixed grid the two check sets accept the same
// functions.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcreg/errors.hpp"
#include "tcreg/hinge_basis.hpp"
#include "tcreg/types.hpp"

namespace tcreg {

/// Per-axis difference orders.
using DiffOrder = std::vector<int>;

/// Values over a product grid. Flattening is row-major: the last axis varies fastest.
template <typename Scalar = double>
class GridFunction {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  GridFunction() = default;

  GridFunction(std::vector<Vector> breakpoints, Vector values)
      : breakpoints_(std::move(breakpoints)), values_(std::move(values)) {
    if (breakpoints_.empty()) throw DataError("GridFunction: need at least one axis");
    Index total = 1;
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
      const Vector& u = breakpoints_[k];
      if (u.size() < 1) throw DataError("GridFunction: axis " + std::to_string(k) + " is empty");
      for (Index i = 1; i < u.size(); ++i) {
        if (!(u(i) > u(i - 1))) {
          throw DataError("GridFunction: breakpoints of axis " + std::to_string(k) +
                          " are not strictly increasing");
        }
      }
      total *= u.size();
    }
    if (values_.size() != total) {
      throw DataError("GridFunction: expected " + std::to_string(total) + " values, got " +
                      std::to_string(values_.size()));
    }
    if (!values_.allFinite()) throw DataError("GridFunction: non-finite value");
    strides_.assign(breakpoints_.size(), 1);
    for (Index k = dim() - 2; k >= 0; --k) strides_[k] = strides_[k + 1] * axis_size(k + 1);
  }

  /// Evaluates `f(point)` at every node.
  template <typename F>
  static GridFunction sample(std::vector<Vector> breakpoints, F&& f) {
    Index total = 1;
    for (const auto& u : breakpoints) total *= u.size();
    Vector values(total);
    GridFunction shape_only;
    shape_only.breakpoints_ = breakpoints;
    shape_only.strides_.assign(breakpoints.size(), 1);
    for (Index k = static_cast<Index>(breakpoints.size()) - 2; k >= 0; --k) {
      shape_only.strides_[k] = shape_only.strides_[k + 1] * breakpoints[k + 1].size();
    }
    for (Index flat = 0; flat < total; ++flat) {
      values(flat) = f(shape_only.point(shape_only.unflatten(flat)));
    }
    return GridFunction(std::move(breakpoints), std::move(values));
  }

  Index dim() const { return static_cast<Index>(breakpoints_.size()); }
  Index axis_size(Index k) const { return breakpoints_[static_cast<std::size_t>(k)].size(); }
  Index size() const { return values_.size(); }
  const Vector& breakpoints(Index k) const { return breakpoints_[static_cast<std::size_t>(k)]; }
  const std::vector<Vector>& all_breakpoints() const { return breakpoints_; }
  const Vector& values() const { return values_; }

  Index flat_index(const MultiIndex& idx) const {
    Index flat = 0;
    for (std::size_t k = 0; k < idx.size(); ++k) flat += idx[k] * strides_[k];
    return flat;
  }

  MultiIndex unflatten(Index flat) const {
    MultiIndex idx(breakpoints_.size());
    for (std::size_t k = 0; k < idx.size(); ++k) {
      idx[k] = flat / strides_[k];
      flat %= strides_[k];
    }
    return idx;
  }

  Scalar operator()(const MultiIndex& idx) const { return values_(flat_index(idx)); }

  Vector point(const MultiIndex& idx) const {
    Vector x(dim());
    for (Index k = 0; k < dim(); ++k) x(k) = breakpoints_[k](idx[k]);
    return x;
  }

  /// True when axis k has constant spacing (relative tolerance 1e-9 of its span).
  bool equally_spaced(Index k) const {
    const Vector& u = breakpoints(k);
    if (u.size() < 3) return true;
    const Scalar h = u(1) - u(0);
    const Scalar slack = Scalar(1e-9) * (u(u.size() - 1) - u(0));
    for (Index i = 2; i < u.size(); ++i) {
      if (std::abs((u(i) - u(i - 1)) - h) > slack) return false;
    }
    return true;
  }

 private:
  std::vector<Vector> breakpoints_;
  Vector values_;
  std::vector<Index> strides_;
};

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dd_weights(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& u,
                                                    const std::vector<Index>& sel) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> w(static_cast<Index>(sel.size()));
  for (std::size_t a = 0; a < sel.size(); ++a) {
    Scalar denom(1);
    for (std::size_t b = 0; b < sel.size(); ++b) {
      if (a != b) denom *= u(sel[a]) - u(sel[b]);
    }
    w(static_cast<Index>(a)) = Scalar(1) / denom;
  }
  return w;
}

// Tensor divided difference over explicit per-axis index selections; no validation.
template <typename Scalar>
Scalar tensor_dd(const GridFunction<Scalar>& g, const std::vector<std::vector<Index>>& sel) {
  const std::size_t d = sel.size();
  std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> w(d);
  for (std::size_t k = 0; k < d; ++k) w[k] = dd_weights(g.breakpoints(static_cast<Index>(k)), sel[k]);
  std::vector<std::size_t> pos(d, 0);
  MultiIndex idx(d);
  Scalar sum(0);
  while (true) {
    Scalar coef(1);
    for (std::size_t k = 0; k < d; ++k) {
      idx[k] = sel[k][pos[k]];
      coef *= w[k](static_cast<Index>(pos[k]));
    }
    sum += coef * g(idx);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++pos[k] < sel[k].size()) break;
      pos[k] = 0;
      if (k == 0) return sum;
    }
    if (d == 0) return sum;
  }
}

template <typename Scalar>
Scalar window_dd(const GridFunction<Scalar>& g, const MultiIndex& start, const DiffOrder& order) {
  std::vector<std::vector<Index>> sel(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (int a = 0; a <= order[k]; ++a) sel[k].push_back(start[k] + a);
  }
  return tensor_dd(g, sel);
}

// Calls visit(start) for every window start of `order`. Axes with order 0 are
// anchored at index 0 unless `all_anchors`.
template <typename Scalar, typename Visit>
void for_each_window(const GridFunction<Scalar>& g, const DiffOrder& order, bool all_anchors,
                     Visit&& visit) {
  const std::size_t d = order.size();
  std::vector<Index> count(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Index n = g.axis_size(static_cast<Index>(k));
    count[k] = order[k] > 0 ? n - order[k] : (all_anchors ? n : 1);
    if (count[k] <= 0) return;
  }
  MultiIndex start(d, 0);
  while (true) {
    visit(start);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++start[k] < count[k]) break;
      start[k] = 0;
      if (k == 0) return;
    }
  }
}

// All orders in {0..max_entry}^d in lexicographic order (axis 0 most significant).
inline std::vector<DiffOrder> all_orders(std::size_t d, int max_entry) {
  std::vector<DiffOrder> out;
  DiffOrder p(d, 0);
  while (true) {
    out.push_back(p);
    std::size_t k = d;
    while (k > 0) {
      --k;
      if (++p[k] <= max_entry) break;
      p[k] = 0;
      if (k == 0) return out;
    }
    if (d == 0) return out;
  }
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace detail

/// Divided difference of `order` on the points selected per axis by `points`
/// (p_k + 1 strictly increasing grid indices on axis k).
template <typename Scalar>
Scalar divided_difference(const GridFunction<Scalar>& g, const std::vector<std::vector<Index>>& points,
                          const DiffOrder& order) {
  if (static_cast<Index>(points.size()) != g.dim() || static_cast<Index>(order.size()) != g.dim()) {
    throw DataError("divided_difference: point selection and order must have one entry per axis");
  }
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (order[k] < 0) throw DataError("divided_difference: negative order");
    if (points[k].size() != static_cast<std::size_t>(order[k] + 1)) {
      throw DataError("divided_difference: axis " + std::to_string(k) + " needs " +
                      std::to_string(order[k] + 1) + " points");
    }
    for (std::size_t a = 0; a < points[k].size(); ++a) {
      const Index i = points[k][a];
      if (i < 0 || i >= g.axis_size(static_cast<Index>(k))) {
        throw DataError("divided_difference: index out of range on axis " + std::to_string(k));
      }
      if (a > 0 && i <= points[k][a - 1]) {
        throw DataError("divided_difference: points on axis " + std::to_string(k) +
                        " must be strictly increasing (repeated point)");
      }
    }
  }
  return detail::tensor_dd(g, points);
}

/// Finite difference of order p ending at multi-index i on an equally spaced grid:
/// prod_k p_k! h_k^{p_k} times the divided difference on indices i_k - p_k .. i_k.
template <typename Scalar>
Scalar discrete_difference(const GridFunction<Scalar>& g, const DiffOrder& p, const MultiIndex& i) {
  if (static_cast<Index>(p.size()) != g.dim() || static_cast<Index>(i.size()) != g.dim()) {
    throw DataError("discrete_difference: order and index must have one entry per axis");
  }
  MultiIndex start(i.size());
  Scalar factor(1);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0) throw DataError("discrete_difference: negative order");
    if (i[k] < p[k]) {
      throw DataError("discrete_difference: index underflow on axis " + std::to_string(k));
    }
    if (i[k] >= g.axis_size(static_cast<Index>(k))) {
      throw DataError("discrete_difference: index out of range on axis " + std::to_string(k));
    }
    start[k] = i[k] - p[k];
    if (p[k] > 0) {
      if (!g.equally_spaced(static_cast<Index>(k))) {
        throw DataError("discrete_difference: axis " + std::to_string(k) + " is not equally spaced");
      }
      const auto& u = g.breakpoints(static_cast<Index>(k));
      const Scalar h = u(1) - u(0);
      factor *= Scalar(detail::factorial(p[k])) * std::pow(h, p[k]);
    }
  }
  return factor * detail::window_dd(g, start, p);
}

struct FamilyResult {
  double worst_violation = -std::numeric_limits<double>::infinity();  ///< signed; > tol fails
  MultiIndex at_index;  ///< first grid index of the worst window
  DiffOrder order;
  std::size_t checked = 0;

  bool vacuous() const { return checked == 0; }
};

struct CertificateReport {
  bool passed = true;
  std::map<std::string, FamilyResult> families;
  double tolerance = 0.0;
  std::vector<int> vacuous_axes;  ///< axes with fewer than three breakpoints (no order-2 probes)
};

/// 1e-8 * (1 + max |theta|).
template <typename Scalar>
double default_certificate_tolerance(const GridFunction<Scalar>& g) {
  return 1e-8 * (1.0 + static_cast<double>(g.values().cwiseAbs().maxCoeff()));
}

namespace detail {

template <typename Scalar, typename Violation>
void scan_family(const GridFunction<Scalar>& g, const DiffOrder& order, bool all_anchors,
                 Violation&& violation, FamilyResult& family) {
  for_each_window(g, order, all_anchors, [&](const MultiIndex& start) {
    const double v = static_cast<double>(violation(window_dd(g, start, order)));
    ++family.checked;
    if (v > family.worst_violation) {
      family.worst_violation = v;
      family.at_index = start;
      family.order = order;
    }
  });
}

inline void finalize(CertificateReport& report) {
  report.passed = true;
  for (const auto& [name, fam] : report.families) {
    if (!fam.vacuous() && fam.worst_violation > report.tolerance) report.passed = false;
  }
}

template <typename Scalar>
std::vector<int> short_axes(const GridFunction<Scalar>& g) {
  std::vector<int> out;
  for (Index k = 0; k < g.dim(); ++k) {
    if (g.axis_size(k) < 3) out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace detail

/// Checks total concavity (or convexity) with interaction order s:
///   "sign":        every order in {0,1,2}^d with max 2 has DD <= tol (>= -tol for convex);
///   "interaction": every order in {0,1}^d with more than s ones has |DD| <= tol.
/// Axes of order 0 are anchored at their first breakpoint; probed axes use every window.
template <typename Scalar>
CertificateReport certify_total_concavity(const GridFunction<Scalar>& g, int s, Shape shape, double tol) {
  CertificateReport report;
  report.tolerance = tol;
  report.vacuous_axes = detail::short_axes(g);
  const Scalar sign = shape == Shape::kConcave ? Scalar(1) : Scalar(-1);
  FamilyResult& sign_family = report.families["sign"];
  FamilyResult& interaction = report.families["interaction"];
  const auto d = static_cast<std::size_t>(g.dim());
  for (const DiffOrder& p : detail::all_orders(d, 2)) {
    if (*std::max_element(p.begin(), p.end()) != 2) continue;
    detail::scan_family(g, p, false, [&](Scalar dd) { return sign * dd; }, sign_family);
  }
  for (const DiffOrder& p : detail::all_orders(d, 1)) {
    int ones = 0;
    for (int v : p) ones += v;
    if (ones <= s) continue;
    detail::scan_family(g, p, false, [](Scalar dd) { return std::abs(dd); }, interaction);
  }
  detail::finalize(report);
  return report;
}

/// Checks concavity along each axis: order 2 on one axis, 0 elsewhere, every anchor.
template <typename Scalar>
CertificateReport certify_axial_concavity(const GridFunction<Scalar>& g, double tol,
                                          Shape shape = Shape::kConcave) {
  CertificateReport report;
  report.tolerance = tol;
  report.vacuous_axes = detail::short_axes(g);
  const Scalar sign = shape == Shape::kConcave ? Scalar(1) : Scalar(-1);
  FamilyResult& axial = report.families["axial"];
  for (Index l = 0; l < g.dim(); ++l) {
    DiffOrder p(static_cast<std::size_t>(g.dim()), 0);
    p[static_cast<std::size_t>(l)] = 2;
    detail::scan_family(g, p, true, [&](Scalar dd) { return sign * dd; }, axial);
  }
  detail::finalize(report);
  return report;
}

/// Checks that every DD with orders in {0,1}^d (not all zero) is >= -tol, over all windows.
template <typename Scalar>
CertificateReport certify_entire_monotonicity(const GridFunction<Scalar>& g, double tol) {
  CertificateReport report;
  report.tolerance = tol;
  FamilyResult& mono = report.families["monotone"];
  for (const DiffOrder& p : detail::all_orders(static_cast<std::size_t>(g.dim()), 1)) {
    if (*std::max_element(p.begin(), p.end()) == 0) continue;
    detail::scan_family(g, p, true, [](Scalar dd) { return -dd; }, mono);
  }
  detail::finalize(report);
  return report;
}

/// Upper bound on the smallest V(f) among class members matching g on the grid:
/// sum over nonempty S of the first-window order-1_S difference at the origin
/// minus the last-window one, with coordinates outside S at the first breakpoint.
template <typename Scalar>
Scalar vdesign_upper_bound(const GridFunction<Scalar>& g) {
  const auto d = static_cast<std::size_t>(g.dim());
  for (std::size_t k = 0; k < d; ++k) {
    if (g.axis_size(static_cast<Index>(k)) < 2) {
      throw DataError("vdesign_upper_bound: axis " + std::to_string(k) + " needs two breakpoints");
    }
    if (!g.equally_spaced(static_cast<Index>(k))) {
      throw DataError("vdesign_upper_bound: axis " + std::to_string(k) + " is not equally spaced");
    }
  }
  Scalar total(0);
  for (const DiffOrder& p : detail::all_orders(d, 1)) {
    if (*std::max_element(p.begin(), p.end()) == 0) continue;
    MultiIndex first(d, 0), last(d, 0);
    for (std::size_t k = 0; k < d; ++k) {
      if (p[k] == 1) last[k] = g.axis_size(static_cast<Index>(k)) - 2;
    }
    total += detail::window_dd(g, first, p) - detail::window_dd(g, last, p);
  }
  return total;
}

/// A totally concave (or convex) function in hinge form:
///   intercept + sum_S beta_S prod_{j in S} x_j  -/+  sum w prod_{j in S} (x_j - t_j)_+
template <typename Scalar = double>
struct PopoviciuModel {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  struct Monomial {
    IndexSet S;
    Scalar coef;
  };
  struct Hinge {
    IndexSet S;
    Vector knot;
    Scalar weight;
  };

  Shape shape = Shape::kConcave;
  Scalar intercept = Scalar(0);
  std::vector<Monomial> monomials;
  std::vector<Hinge> hinges;

  template <typename Derived>
  Scalar operator()(const Eigen::MatrixBase<Derived>& x) const {
    Scalar v = intercept;
    for (const auto& m : monomials) {
      Scalar prod(1);
      for (int j : m.S) prod *= x(j);
      v += m.coef * prod;
    }
    const Scalar sign = shape == Shape::kConcave ? Scalar(-1) : Scalar(1);
    for (const auto& h : hinges) {
      Scalar prod(1);
      for (std::size_t a = 0; a < h.S.size(); ++a) {
        const Scalar t = x(h.S[a]) - h.knot(static_cast<Index>(a));
        prod *= t > Scalar(0) ? t : Scalar(0);
      }
      v += sign * h.weight * prod;
    }
    return v;
  }

  Scalar total_weight() const {
    Scalar sum(0);
    for (const auto& h : hinges) sum += h.weight;
    return sum;
  }
};

/// Hinge-form function that reproduces g at every grid node. The grid must start
/// at 0 on every axis, lie in [0, 1], and pass certify_total_concavity(g, s, shape, tol).
///
/// With u_0 < ... < u_n the breakpoints of each axis:
///   intercept  = g(0, ..., 0)
///   beta_S     = DD over {u_0, u_1} on S (others at u_0)
///   weight(l)  = -prod_{k in S, l_k > 0} (u_{l_k+1} - u_{l_k-1}) * DD(l)
/// where DD(l) uses {u_0, u_1} on axes with l_k = 0 and {u_{l_k-1}, u_{l_k}, u_{l_k+1}}
/// otherwise, for l in prod_{k in S} {0..n_k-1} minus zero, knot t = (u_{l_k}).
/// Weights within tolerance of zero from below are clamped to zero.
template <typename Scalar>
PopoviciuModel<Scalar> popoviciu_interpolant(const GridFunction<Scalar>& g, int s,
                                             Shape shape = Shape::kConcave, double tol = -1.0) {
  const Index d = g.dim();
  for (Index k = 0; k < d; ++k) {
    const auto& u = g.breakpoints(k);
    if (u.size() < 2) throw DataError("popoviciu_interpolant: every axis needs two breakpoints");
    if (u(0) != Scalar(0) || u(u.size() - 1) > Scalar(1)) {
      throw DataError("popoviciu_interpolant: breakpoints must start at 0 and lie in [0, 1]");
    }
  }
  if (s < 1 || s > d) throw SpecError("popoviciu_interpolant: need 1 <= s <= d");
  if (tol < 0.0) tol = default_certificate_tolerance(g);

  // Convex input is handled as the concave interpolant of -g.
  const GridFunction<Scalar> work =
      shape == Shape::kConcave ? g : GridFunction<Scalar>(g.all_breakpoints(), -g.values());
  const CertificateReport cert = certify_total_concavity(work, s, Shape::kConcave, tol);
  if (!cert.passed) {
    throw DataError("popoviciu_interpolant: grid values are not totally " +
                    std::string(shape == Shape::kConcave ? "concave" : "convex") +
                    " with interaction order " + std::to_string(s));
  }

  PopoviciuModel<Scalar> model;
  model.shape = shape;
  model.intercept = work(MultiIndex(static_cast<std::size_t>(d), 0));
  for (const IndexSet& S : subsets_of(iota_set(0, static_cast<int>(d)), 1, s)) {
    DiffOrder first(static_cast<std::size_t>(d), 0);
    for (int k : S) first[static_cast<std::size_t>(k)] = 1;
    model.monomials.push_back({S, detail::window_dd(work, MultiIndex(static_cast<std::size_t>(d), 0), first)});

    // l runs over prod_{k in S} {0..n_k-1}, n_k = axis size - 1.
    std::vector<Index> l(S.size(), 0);
    while (true) {
      std::size_t a = S.size();
      bool done = false;
      while (true) {
        if (a == 0) {
          done = true;
          break;
        }
        --a;
        if (++l[a] < g.axis_size(S[a]) - 1) break;
        l[a] = 0;
      }
      if (done) break;

      DiffOrder order(static_cast<std::size_t>(d), 0);
      MultiIndex start(static_cast<std::size_t>(d), 0);
      typename PopoviciuModel<Scalar>::Vector knot(static_cast<Index>(S.size()));
      Scalar span(1);
      for (std::size_t b = 0; b < S.size(); ++b) {
        const auto k = static_cast<std::size_t>(S[b]);
        const auto& u = g.breakpoints(S[b]);
        knot(static_cast<Index>(b)) = u(l[b]);
        if (l[b] == 0) {
          order[k] = 1;
        } else {
          order[k] = 2;
          start[k] = l[b] - 1;
          span *= u(l[b] + 1) - u(l[b] - 1);
        }
      }
      Scalar w = -span * detail::window_dd(work, start, order);
      if (w < Scalar(0)) w = Scalar(0);
      model.hinges.push_back({S, knot, w});
    }
  }
  if (shape == Shape::kConvex) {
    model.intercept = -model.intercept;
    for (auto& m : model.monomials) m.coef = -m.coef;
  }
  return model;
}

}  // namespace tcreg
