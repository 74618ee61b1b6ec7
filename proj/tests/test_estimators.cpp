#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tcreg/estimators.hpp"

using namespace tcreg;
using tcreg::testing::Gen;

namespace {

Dataset line(std::initializer_list<double> xs, std::initializer_list<double> ys) {
  Dataset d;
  d.X.resize(static_cast<Index>(xs.size()), 1);
  d.y.resize(static_cast<Index>(ys.size()));
  Index i = 0;
  for (double x : xs) d.X(i++, 0) = x;
  i = 0;
  for (double y : ys) d.y(i++) = y;
  return d;
}

ModelSpec tc(int s, Shape shape = Shape::kConcave) {
  ModelSpec m;
  m.s = s;
  m.shape = shape;
  return m;
}

Eigen::VectorXd fitted(const FittedModel& m, const Dataset& d) { return predict(m, d.X).values; }

double sse(const FittedModel& m, const Dataset& d) { return (d.y - fitted(m, d)).squaredNorm(); }

Dataset noisy_concave(Gen& g, Index n, Index d, double noise = 0.3) {
  return tcreg::testing::concave_dataset(g, n, d, noise, 6);
}

}  // namespace

TEST_CASE("fit examples") {
  const Dataset in_class = line({0, 0.5, 1}, {0, 1, 1.2});
  const FittedModel a = fit(in_class, tc(1));
  CHECK(a.solver.converged);
  CHECK(a.training_sse <= 1e-20);
  CHECK((fitted(a, in_class) - in_class.y).cwiseAbs().maxCoeff() < 1e-12);

  const Dataset kink = line({0, 0.5, 1}, {0, 0, 1});
  const FittedModel b = fit(kink, tc(1));
  // Projection of y onto the halfspace (1,-2,1).theta <= 0.
  const Eigen::Vector3d c(1, -2, 1);
  const Eigen::Vector3d expect = kink.y - (c.dot(kink.y) / c.squaredNorm()) * c;
  CHECK((fitted(b, kink) - expect).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(expect(0) == doctest::Approx(-1.0 / 6.0));

  const FittedModel cv = fit(kink, tc(1, Shape::kConvex));
  CHECK(cv.training_sse <= 1e-20);
}

TEST_CASE("fit matches exhaustive enumeration on the reduced problem") {
  Gen g(31);
  for (int trial = 0; trial < 25; ++trial) {
    Dataset d;
    d.X = g.matrix(6, 1, 0.0, 1.0);
    d.y = g.vector(6);
    const FittedModel m = fit(d, tc(1));
    const Eigen::MatrixXd xu = scale_to_unit(d.X, fit_scaler(d.X));
    const DesignMatrix dm = assemble_design(xu, enumerate_terms(tc(1), xu));
    const auto oracle = tcreg::testing::brute_force_mixed_nnls(dm.free_matrix(), -dm.pos_matrix(), d.y);
    REQUIRE(oracle.certified >= 1);
    CHECK((fitted(m, d) - oracle.fitted).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("convex fit agrees with a direct sign-flipped solve") {
  Gen g(32);
  for (int trial = 0; trial < 10; ++trial) {
    const Index dim = trial % 2 + 1;
    Dataset d = noisy_concave(g, 10, dim);
    d.y = -d.y;
    const ModelSpec spec = tc(static_cast<int>(dim), Shape::kConvex);
    const FittedModel m = fit(d, spec);
    const Eigen::MatrixXd xu = scale_to_unit(d.X, fit_scaler(d.X));
    const DesignMatrix dm = assemble_design(xu, enumerate_terms(spec, xu));
    const MixedLsProblem pr{dm.free_matrix(), dm.pos_matrix(), d.y, std::nullopt};
    const Solution s = solve_mixed_nnls(pr);
    const Eigen::VectorXd direct = pr.a_free * s.beta_free + pr.a_pos * s.beta_pos;
    CHECK((fitted(m, d) - direct).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(certify_fit(m).passed);
  }
}

TEST_CASE("predict and complexity examples") {
  FittedModel m;
  m.d = 1;
  m.spec = tc(1);
  m.scaler.ranges = {{0.0, 1.0}};
  m.intercept = 0.0;
  MonomialCoef lin;
  lin.term.S = {0};
  lin.coef = 2.0;
  m.monomials.push_back(lin);
  HingeWeight h;
  h.term.kind = TermKind::kHinge;
  h.term.S = {0};
  h.term.knots = Eigen::VectorXd::Constant(1, 0.5);
  h.weight = 1.6;
  m.hinges.push_back(h);

  Eigen::MatrixXd x(3, 1);
  x << 1.0, 0.25, -0.5;
  const Prediction p = predict(m, x);
  CHECK(p.values(0) == doctest::Approx(1.2));
  CHECK(p.values(1) == doctest::Approx(0.5));
  CHECK(p.values(2) == doctest::Approx(-1.0));
  CHECK_FALSE(p.extrapolated(0));
  CHECK(p.extrapolated(2));
  CHECK(complexity(m) == doctest::Approx(1.6));
  CHECK_THROWS_AS(predict(m, Eigen::MatrixXd(1, 2)), DataError);

  m.hinges.clear();
  CHECK(complexity(m) == 0.0);
}

TEST_CASE("training rows reproduce the solver's fit") {
  Gen g(33);
  const Dataset d = noisy_concave(g, 15, 2);
  const FittedModel m = fit(d, tc(2));
  CHECK(sse(m, d) == doctest::Approx(m.training_sse).epsilon(1e-9).scale(1.0));
}

TEST_CASE("regularized fits respect the cap") {
  Gen g(34);
  for (int trial = 0; trial < 8; ++trial) {
    const Dataset d = noisy_concave(g, 12, trial % 3 + 1);
    ModelSpec spec = tc(static_cast<int>(d.d()));
    const FittedModel free = fit(d, spec);
    const double v0 = complexity(free);
    for (double frac : {0.0, 0.3, 1.0, 2.0}) {
      spec.v_cap = frac * v0;
      const FittedModel capped = fit(d, spec);
      CHECK(complexity(capped) <= *spec.v_cap + 1e-12);
      CHECK(capped.training_sse >= free.training_sse - 1e-9);
      if (frac >= 1.0) CHECK((fitted(capped, d) - fitted(free, d)).cwiseAbs().maxCoeff() <= 1e-6);
    }
  }
}

TEST_CASE("zero cap gives the monomial-only least squares") {
  Gen g(35);
  const Dataset d = noisy_concave(g, 14, 2);
  ModelSpec spec = tc(2);
  spec.v_cap = 0.0;
  const FittedModel m = fit(d, spec);
  const Eigen::MatrixXd xu = scale_to_unit(d.X, fit_scaler(d.X));
  Eigen::MatrixXd poly(d.n(), 4);
  poly << Eigen::VectorXd::Ones(d.n()), xu.col(0), xu.col(1), xu.col(0).cwiseProduct(xu.col(1));
  const Eigen::VectorXd ls = poly * poly.colPivHouseholderQr().solve(d.y);
  CHECK((fitted(m, d) - ls).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(complexity(m) == 0.0);
}

TEST_CASE("nestedness in the interaction order") {
  Gen g(36);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = noisy_concave(g, 14, 3);
    double prev = std::numeric_limits<double>::infinity();
    for (int s = 1; s <= 3; ++s) {
      const double cur = fit(d, tc(s)).training_sse;
      CHECK(cur <= prev * (1 + 1e-7) + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("every converged fit passes its certificate") {
  Gen g(37);
  for (int trial = 0; trial < 12; ++trial) {
    const Index dim = trial % 3 + 1;
    const Dataset d = noisy_concave(g, 12, dim);
    const int s = static_cast<int>(1 + trial % dim);
    const FittedModel m = fit(d, tc(s, trial % 2 ? Shape::kConvex : Shape::kConcave));
    REQUIRE(m.solver.converged);
    CHECK(certify_fit(m).passed);
    CHECK(certify_fit(m, 6).passed);
  }
}

TEST_CASE("certificate catches the wrong shape") {
  const Dataset d = line({0, 0.3, 0.6, 1}, {1, 0, 0.2, 1.5});
  const FittedModel convex = fit(d, tc(1, Shape::kConvex));
  REQUIRE(complexity(convex) > 0.1);
  const auto grid = model_grid(convex);
  CHECK_FALSE(certify_total_concavity(grid, 1, Shape::kConcave, 1e-6).passed);
  CHECK(certify_total_concavity(grid, 1, Shape::kConvex, 1e-6).passed);
}

TEST_CASE("partially linear fits certify") {
  Gen g(38);
  const Dataset d = noisy_concave(g, 12, 3);
  ModelSpec l;
  l.variant = Variant::kTcL;
  l.s = 1;
  l.p = 2;
  const FittedModel ml = fit(d, l);
  CHECK(certify_fit(ml).passed);
  ModelSpec li;
  li.variant = Variant::kTcLI;
  li.s = 2;
  li.p = 1;
  li.q = 3;
  const FittedModel mli = fit(d, li);
  CHECK(certify_fit(mli).passed);
  CHECK(mli.training_sse <= fit(d, [] {
                              ModelSpec m;
                              m.variant = Variant::kTcL;
                              m.s = 1;
                              m.p = 1;
                              return m;
                            }()).training_sse + 1e-9);
}

TEST_CASE("additive fits have vanishing mixed differences") {
  Gen g(39);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = noisy_concave(g, 15, 2);
    const FittedModel m = fit(d, tc(1));
    const GridFunction<double> grid = model_grid(m);
    const Index n0 = grid.axis_size(0), n1 = grid.axis_size(1);
    double worst = 0.0;
    for (Index i = 0; i + 1 < n0; ++i) {
      for (Index j = 0; j + 1 < n1; ++j) {
        const double mixed = grid({i + 1, j + 1}) - grid({i + 1, j}) - grid({i, j + 1}) + grid({i, j});
        worst = std::max(worst, std::abs(mixed));
      }
    }
    CHECK(worst <= 1e-8);
  }
}

TEST_CASE("affine rescaling of covariates does not change predictions") {
  Gen g(40);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = noisy_concave(g, 12, 2);
    Dataset e = d;
    e.X.col(0) = 3.0 * d.X.col(0).array() - 7.0;
    e.X.col(1) = 0.01 * d.X.col(1).array() + 100.0;
    const FittedModel a = fit(d, tc(2)), b = fit(e, tc(2));
    CHECK((fitted(a, d) - fitted(b, e)).cwiseAbs().maxCoeff() <= 1e-7);
  }
}

TEST_CASE("fold assignment and auto grid") {
  const std::vector<int> f = assign_folds(23, 5, 9);
  std::vector<int> counts(5, 0);
  for (int k : f) counts[static_cast<std::size_t>(k)]++;
  for (int c : counts) CHECK((c == 4 || c == 5));
  CHECK(assign_folds(23, 5, 9) == f);
  CHECK(assign_folds(23, 5, 10) != f);
  CHECK_THROWS(assign_folds(3, 5, 0));

  Gen g(41);
  const Dataset d = noisy_concave(g, 10, 1);
  const Eigen::VectorXd grid = auto_v_grid(d, tc(1));
  const double v0 = complexity(fit(d, tc(1)));
  REQUIRE(grid.size() == 10);
  CHECK(grid(9) == v0);
  CHECK(grid(0) == doctest::Approx(1e-3 * v0));
  for (Index k = 1; k < 10; ++k) CHECK(grid(k) / grid(k - 1) == doctest::Approx(std::pow(10.0, 1.0 / 3.0)));
}

TEST_CASE("cross validation") {
  Gen g(42);
  const Dataset d = noisy_concave(g, 20, 1);
  CvOptions o;
  o.folds = 4;
  o.seed = 5;
  const CvResult single = cross_validate_V(d, tc(1), Eigen::VectorXd::Constant(1, 0.7), o);
  CHECK(single.selected_v == 0.7);
  CHECK(single.fold_mse.rows() == 4);

  Eigen::VectorXd grid(3);
  grid << 0.0, 0.5, 5.0;
  const CvResult a = cross_validate_V(d, tc(1), grid, o), b = cross_validate_V(d, tc(1), grid, o);
  CHECK((a.fold_mse - b.fold_mse).norm() == 0.0);
  CHECK(a.selected_v == b.selected_v);
  Index best = 0;
  for (Index k = 1; k < 3; ++k) {
    if (a.mean_mse(k) < a.mean_mse(best)) best = k;
  }
  CHECK(a.selected_v == grid(best));
  CHECK(a.mean_mse == a.fold_mse.colwise().mean().transpose());

  // Equal scores go to the smaller cap.
  const CvResult tie = cross_validate_V(d, tc(1), Eigen::Vector2d(0.0, 0.0), o);
  CHECK(tie.selected_v == 0.0);

  CHECK_THROWS(cross_validate_V(d, tc(1), Eigen::VectorXd(0), o));
  CHECK_THROWS(cross_validate_V(d, tc(1), Eigen::VectorXd::Constant(1, -1.0), o));
  o.folds = 1;
  CHECK_THROWS(cross_validate_V(d, tc(1), grid, o));
}

TEST_CASE("noiseless data prefers the large cap") {
  Dataset d;
  d.X = Eigen::VectorXd::LinSpaced(30, 0.0, 1.0);
  d.y = -3.0 * d.X.col(0).array().square();
  CvOptions o;
  o.folds = 5;
  const CvResult r = cross_validate_V(d, tc(1), Eigen::Vector2d(0.1, 1e9), o);
  CHECK(r.mean_mse(1) <= r.mean_mse(0));
  CHECK(r.selected_v == 1e9);
}

TEST_CASE("axial fit examples") {
  Dataset corners;
  corners.X.resize(4, 2);
  corners.X << 0, 0, 0, 1, 1, 0, 1, 1;
  corners.y = Eigen::Vector4d(0.3, -1, 2, 5);
  const AcFittedModel c = fit_axially_concave(corners);
  CHECK(c.training_sse < 1e-12);
  CHECK((predict_axial(c, corners.X).values - corners.y).cwiseAbs().maxCoeff() < 1e-6);

  const Dataset kink = line({0, 0.5, 1}, {0, 0, 1});
  const AcFittedModel k = fit_axially_concave(kink);
  CHECK((predict_axial(k, kink.X).values - Eigen::Vector3d(-1.0 / 6, 1.0 / 3, 5.0 / 6)).cwiseAbs().maxCoeff() < 1e-8);

  AxialOptions small;
  small.grid_budget = 3;
  try {
    fit_axially_concave(corners, small);
    FAIL("expected the grid budget to be exceeded");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find('4') != std::string::npos);
  }
}

TEST_CASE("axial fits dominate totally concave fits") {
  Gen g(43);
  for (int trial = 0; trial < 5; ++trial) {
    const Dataset d = noisy_concave(g, 12, 2);
    const AcFittedModel ac = fit_axially_concave(d);
    const FittedModel t = fit(d, tc(2));
    CHECK(ac.training_sse <= t.training_sse + 1e-7);
    CHECK(certify_fit(ac).passed);
  }
}

TEST_CASE("axial prediction examples") {
  AcFittedModel m;
  m.d = 2;
  m.scaler.ranges = {{0.0, 1.0}, {0.0, 1.0}};
  m.breakpoints = {Eigen::Vector2d(0, 1), Eigen::Vector2d(0, 1)};
  m.theta = Eigen::Vector4d(0, 0, 0, 1);
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 0.5, 1, 1, 2, 1;
  const Prediction p = predict_axial(m, x);
  CHECK(p.values(0) == doctest::Approx(0.25));
  CHECK(p.values(1) == 1.0);
  CHECK(p.values(2) == 1.0);
  CHECK(p.extrapolated(2));
  CHECK_FALSE(p.extrapolated(0));

  AcFittedModel one;
  one.d = 1;
  one.scaler.ranges = {{0.0, 1.0}};
  one.breakpoints = {Eigen::Vector3d(0, 0.2, 1)};
  one.theta = Eigen::Vector3d(1, 3, 2);
  CHECK(predict_axial(one, Eigen::MatrixXd::Constant(1, 1, 0.1)).values(0) == doctest::Approx(2.0));
  CHECK(predict_axial(one, Eigen::MatrixXd::Constant(1, 1, 0.6)).values(0) == doctest::Approx(2.5));
}
