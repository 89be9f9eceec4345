#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cate/error.hpp"
#include "cate/inference.hpp"
#include "cate/rng.hpp"

using namespace cate;

namespace {

void linear_problem(int n, std::uint64_t seed, Eigen::VectorXd* x, Eigen::VectorXd* y) {
  RngStream rng(seed, 0);
  x->resize(n);
  y->resize(n);
  for (int i = 0; i < n; ++i) {
    (*x)[i] = rng.uniform();
    (*y)[i] = 0.2 * ((*x)[i] - 0.5) + rng.normal();
  }
}

PseudoOutcomes as_pseudo(const Eigen::VectorXd& v) {
  PseudoOutcomes po;
  po.values = v;
  po.rows.resize(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) po.rows[i] = i;
  return po;
}

BasisSpec linear_basis() {
  BasisSpec b;
  b.kind = BasisKind::Polynomial;
  b.degree = 1;
  return b;
}

}  // namespace

TEST_CASE("normal quantiles hit reference values") {
  CHECK(std::abs(normal_quantile(0.5)) < 1e-12);
  CHECK(std::abs(normal_quantile(0.975) - 1.959963984540054) < 1e-9);
  CHECK(std::abs(normal_quantile(0.995) - 2.5758293035489004) < 1e-9);
  CHECK(std::abs(normal_quantile(0.9999) - 3.719016485455709) < 1e-8);
  CHECK(std::abs(normal_quantile(0.025) + normal_quantile(0.975)) < 1e-12);
  CHECK_THROWS_AS(normal_quantile(0.0), Error);
  CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("pointwise intervals use the right critical value") {
  GridEvaluation ge;
  ge.grid = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);
  ge.estimate = Eigen::VectorXd::Constant(3, 0.2);
  ge.se = Eigen::VectorXd::Constant(3, 0.1);
  Eigen::VectorXd lo, hi;
  pointwise_interval(ge, 0.05, &lo, &hi);
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(lo[i] - (0.2 - 1.959963984540054 * 0.1)) < 1e-9);
    CHECK(std::abs(hi[i] - (0.2 + 1.959963984540054 * 0.1)) < 1e-9);
  }
}

TEST_CASE("empirical quantile is an order statistic") {
  std::vector<double> v = {5.0, 1.0, 4.0, 2.0, 3.0};
  // ceil(0.5*5) = 3rd smallest
  CHECK(empirical_quantile(v, 0.5) == 3.0);
  // ceil(0.95*5) = 5th smallest
  CHECK(empirical_quantile(v, 0.95) == 5.0);
  // ceil(0.2*5) = 1st smallest
  CHECK(empirical_quantile(v, 0.2) == 1.0);
  CHECK(empirical_quantile({7.0}, 0.99) == 7.0);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), Error);
}

TEST_CASE("unit multiplier weights collapse the band onto the curve") {
  Eigen::VectorXd x, y;
  linear_problem(300, 1, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(21, 0.05, 0.95);
  MultiplierOptions opts;
  opts.replicates = 150;
  opts.seed = 9;
  opts.force_unit_weights = true;
  UniformBand band = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  // identical weights reproduce the original fit up to solver roundoff
  CHECK(band.critical_value < 1e-9);
  CHECK((band.band_low - band.estimate).lpNorm<Eigen::Infinity>() < 1e-12);
  CHECK((band.band_high - band.estimate).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("uniform band is wider than the pointwise interval") {
  Eigen::VectorXd x, y;
  linear_problem(400, 2, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(50, 0.02, 0.98);
  MultiplierOptions opts;
  opts.replicates = 500;
  opts.seed = 11;
  UniformBand band = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  CHECK(band.critical_value > 1.959963984540054);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(band.band_low[i] <= band.pointwise_low[i]);
    CHECK(band.band_high[i] >= band.pointwise_high[i]);
    CHECK(std::abs(band.band_low[i] -
                   (band.estimate[i] - band.critical_value * band.se[i])) < 1e-12);
  }
  CHECK(band.redrawn == 0);
}

TEST_CASE("critical value grows as alpha shrinks") {
  Eigen::VectorXd x, y;
  linear_problem(300, 3, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(30, 0.05, 0.95);
  MultiplierOptions opts;
  opts.replicates = 400;
  opts.seed = 5;
  UniformBand b10 = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.10, opts);
  UniformBand b01 = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.01, opts);
  CHECK(b01.critical_value >= b10.critical_value);
}

TEST_CASE("band replicates are reproducible from the seed") {
  Eigen::VectorXd x, y;
  linear_problem(200, 4, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(15, 0.1, 0.9);
  MultiplierOptions opts;
  opts.replicates = 200;
  opts.seed = 77;
  UniformBand a = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  UniformBand b = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  CHECK(a.critical_value == b.critical_value);
  CHECK((a.band_low - b.band_low).lpNorm<Eigen::Infinity>() == 0.0);
  opts.seed = 78;
  UniformBand c = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  CHECK(a.critical_value != c.critical_value);
}

TEST_CASE("too few replicates are rejected") {
  Eigen::VectorXd x, y;
  linear_problem(100, 6, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(5, 0.1, 0.9);
  MultiplierOptions opts;
  opts.replicates = 50;
  CHECK_THROWS_AS(multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts),
                  Error);
}

TEST_CASE("standard-error overrides flow into every band limit") {
  Eigen::VectorXd x, y;
  linear_problem(250, 7, &x, &y);
  Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(10, 0.1, 0.9);
  Eigen::VectorXd se_override = Eigen::VectorXd::Constant(10, 0.25);
  MultiplierOptions opts;
  opts.replicates = 200;
  opts.seed = 1;
  opts.se_override = &se_override;
  UniformBand band = multiplier_band(as_pseudo(y), x, linear_basis(), grid, 0.05, opts);
  CHECK((band.se - se_override).lpNorm<Eigen::Infinity>() == 0.0);
  for (int i = 0; i < 10; ++i) {
    CHECK(std::abs(band.pointwise_low[i] -
                   (band.estimate[i] - 1.959963984540054 * 0.25)) < 1e-9);
    CHECK(std::abs(band.band_low[i] -
                   (band.estimate[i] - band.critical_value * 0.25)) < 1e-12);
  }
}

TEST_CASE("resampling standard errors track the analytic ones") {
  RngStream rng(15, 0);
  const int n = 400;
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = rng.normal();
  double mean = v.mean();
  double sd = std::sqrt((v.array() - mean).square().sum() / (n - 1));

  auto estimate_on = [&](const std::vector<Eigen::Index>& rows) {
    double m = 0.0;
    for (Eigen::Index r : rows) m += v[r];
    Eigen::VectorXd out(1);
    out[0] = m / rows.size();
    return out;
  };
  Eigen::VectorXd se = bootstrap_se(n, 1, estimate_on, 500, 3);
  REQUIRE(se.size() == 1);
  double analytic = sd / std::sqrt(static_cast<double>(n));
  CHECK(se[0] > 0.8 * analytic);
  CHECK(se[0] < 1.2 * analytic);

  Eigen::VectorXd se2 = bootstrap_se(n, 1, estimate_on, 500, 3);
  CHECK(se[0] == se2[0]);
}

TEST_CASE("generator streams behave as documented") {
  RngStream rng(123, 5);
  double usum = 0.0, esum = 0.0, nsum = 0.0, nsq = 0.0;
  long heads = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    usum += u;
    esum += rng.exponential();
    double z = rng.normal();
    nsum += z;
    nsq += z * z;
    if (rng.bernoulli(0.3)) ++heads;
    CHECK(rng.below(7) < 7);
  }
  CHECK(std::abs(usum / n - 0.5) < 0.01);
  CHECK(std::abs(esum / n - 1.0) < 0.03);
  CHECK(std::abs(nsum / n) < 0.03);
  CHECK(std::abs(nsq / n - 1.0) < 0.05);
  CHECK(std::abs(heads / static_cast<double>(n) - 0.3) < 0.01);

  // same (seed, stream) reproduces; different stream diverges
  RngStream a(9, 1), b(9, 1), c(9, 2);
  CHECK(a.uniform() == b.uniform());
  CHECK(b.uniform() != c.uniform());
}
