#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cate/error.hpp"
#include "cate/rng.hpp"
#include "cate/second_stage.hpp"

using namespace cate;

namespace {

PseudoOutcomes as_pseudo(const Eigen::VectorXd& v) {
  PseudoOutcomes po;
  po.values = v;
  po.rows.resize(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) po.rows[i] = i;
  return po;
}

void random_problem(int n, std::uint64_t seed, Eigen::VectorXd* x,
                    Eigen::VectorXd* y) {
  RngStream rng(seed, 0);
  x->resize(n);
  y->resize(n);
  for (int i = 0; i < n; ++i) {
    (*x)[i] = rng.uniform();
    (*y)[i] = 0.5 + (*x)[i] + rng.normal();
  }
}

BasisSpec linear_basis() {
  BasisSpec b;
  b.kind = BasisKind::Polynomial;
  b.degree = 1;
  return b;
}

}  // namespace

TEST_CASE("ordinary least squares satisfies its normal equations") {
  Eigen::VectorXd x, y;
  random_problem(100, 3, &x, &y);
  CateFit fit = fit_cate(as_pseudo(y), x, linear_basis());
  Eigen::MatrixXd design = build_design(x, fit.basis_spec);
  Eigen::VectorXd score = design.transpose() * (y - design * fit.beta);
  CHECK(score.lpNorm<Eigen::Infinity>() < 1e-8);
  CHECK(fit.n_used == 100);
  CHECK(fit.residuals.size() == 100);
}

TEST_CASE("sandwich covariance matches the textbook formula") {
  Eigen::VectorXd x, y;
  random_problem(60, 8, &x, &y);
  BasisSpec b;
  b.kind = BasisKind::Polynomial;
  b.degree = 2;
  CateFit fit = fit_cate(as_pseudo(y), x, b);
  Eigen::MatrixXd design = build_design(x, b);
  Eigen::VectorXd r = y - design * fit.beta;
  Eigen::MatrixXd bread = (design.transpose() * design).inverse();
  Eigen::MatrixXd meat =
      design.transpose() * r.array().square().matrix().asDiagonal() * design;
  Eigen::MatrixXd ref = bread * meat * bread;
  CHECK((fit.covariance - ref).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("grid evaluation propagates the covariance") {
  Eigen::VectorXd x, y;
  random_problem(80, 5, &x, &y);
  CateFit fit = fit_cate(as_pseudo(y), x, linear_basis());
  Eigen::VectorXd grid(3);
  grid << 0.1, 0.5, 0.9;
  GridEvaluation ge = evaluate_grid(fit, grid);
  REQUIRE(ge.estimate.size() == 3);
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd m = basis_row(grid[j], fit.basis_spec);
    CHECK(std::abs(ge.estimate[j] - m.dot(fit.beta)) < 1e-12);
    double var = m.dot(fit.covariance * m);
    CHECK(std::abs(ge.se[j] - std::sqrt(var)) < 1e-12);
  }

  Eigen::VectorXd bad(3);
  bad << 0.1, 0.1, 0.9;  // not strictly increasing
  CHECK_THROWS_AS(evaluate_grid(fit, bad), Error);
}

TEST_CASE("shifting the response shifts the curve, not its uncertainty") {
  Eigen::VectorXd x, y;
  random_problem(70, 12, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(11, 0.05, 0.95);
  CateFit f1 = fit_cate(as_pseudo(y), x, linear_basis());
  Eigen::VectorXd shifted = y.array() + 3.7;
  CateFit f2 = fit_cate(as_pseudo(shifted), x, linear_basis());
  GridEvaluation g1 = evaluate_grid(f1, grid);
  GridEvaluation g2 = evaluate_grid(f2, grid);
  CHECK(((g2.estimate - g1.estimate).array() - 3.7).abs().maxCoeff() < 1e-10);
  CHECK((g2.se - g1.se).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("integer weights act like row duplication") {
  Eigen::VectorXd x, y;
  random_problem(40, 19, &x, &y);
  Eigen::VectorXd w = Eigen::VectorXd::Ones(40);
  for (int i = 0; i < 40; i += 3) w[i] = 2.0;

  CateFit weighted = fit_cate(as_pseudo(y), x, linear_basis(), &w);

  long total = static_cast<long>(w.sum());
  Eigen::VectorXd xd(total), yd(total);
  long r = 0;
  for (int i = 0; i < 40; ++i)
    for (int c = 0; c < static_cast<int>(w[i]); ++c) {
      xd[r] = x[i];
      yd[r] = y[i];
      ++r;
    }
  CateFit dup = fit_cate(as_pseudo(yd), xd, linear_basis());
  CHECK((weighted.beta - dup.beta).lpNorm<Eigen::Infinity>() < 1e-10);
}

TEST_CASE("spline second stage reproduces what it can represent") {
  RngStream rng(4, 0);
  const int n = 500;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    x[i] = rng.uniform();
    y[i] = 1.0 + 2.0 * x[i];  // noiseless line
  }
  BasisSpec b = resolve_bspline(x, 3);
  CateFit fit = fit_cate(as_pseudo(y), x, b);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(9, x.minCoeff(), x.maxCoeff());
  GridEvaluation ge = evaluate_grid(fit, grid);
  for (int j = 0; j < 9; ++j)
    CHECK(std::abs(ge.estimate[j] - (1.0 + 2.0 * grid[j])) < 1e-8);
}

TEST_CASE("subgroup estimates equal per-level summary statistics") {
  Eigen::VectorXd g(7), v(7);
  g << 0, 0, 0, 1, 1, 1, 1;
  v << 1.0, 2.0, 3.0, 4.0, 6.0, 8.0, 2.0;
  std::vector<SubgroupEstimate> est = subgroup_cate(as_pseudo(v), g);
  REQUIRE(est.size() == 2);

  CHECK(est[0].level == 0.0);
  CHECK(est[0].n == 3);
  CHECK(std::abs(est[0].estimate - 2.0) < 1e-12);
  // sample sd of {1,2,3} is 1
  CHECK(std::abs(est[0].se - 1.0 / std::sqrt(3.0)) < 1e-12);

  CHECK(est[1].level == 1.0);
  CHECK(est[1].n == 4);
  CHECK(std::abs(est[1].estimate - 5.0) < 1e-12);
  double sd = std::sqrt(((4 - 5.) * (4 - 5.) + 1 + 9 + 9) / 3.0);
  CHECK(std::abs(est[1].se - sd / 2.0) < 1e-12);

  // a subgroup mean is exactly a dummy-coded regression coefficient
  Eigen::MatrixXd dummies(7, 2);
  for (int i = 0; i < 7; ++i) {
    dummies(i, 0) = g[i] == 0.0 ? 1.0 : 0.0;
    dummies(i, 1) = g[i] == 1.0 ? 1.0 : 0.0;
  }
  CateFit ols = fit_cate_design(dummies, v);
  CHECK(std::abs(ols.beta[0] - est[0].estimate) < 1e-12);
  CHECK(std::abs(ols.beta[1] - est[1].estimate) < 1e-12);
}

TEST_CASE("singleton subgroup levels are rejected") {
  Eigen::VectorXd g(3), v(3);
  g << 0, 0, 1;
  v << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(subgroup_cate(as_pseudo(v), g), Error);
}

TEST_CASE("mismatched sizes are rejected") {
  Eigen::VectorXd x(3), v(4);
  x.setZero();
  v.setZero();
  CHECK_THROWS_AS(fit_cate(as_pseudo(v), x, linear_basis()), Error);
}
