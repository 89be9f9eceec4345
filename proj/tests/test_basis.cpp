#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "cate/basis.hpp"
#include "cate/error.hpp"
#include "cate/rng.hpp"

using namespace cate;

namespace {

// straight-line recursive Cox-de Boor evaluation, independent of the
// iterative implementation under test
double cox_de_boor(int i, int k, double x, const std::vector<double>& t, double hi) {
  if (k == 1) {
    if (t[i] <= x && x < t[i + 1]) return 1.0;
    if (x == hi && t[i] < t[i + 1] && x <= t[i + 1]) return 1.0;
    return 0.0;
  }
  double left = 0.0, right = 0.0;
  if (t[i + k - 1] > t[i])
    left = (x - t[i]) / (t[i + k - 1] - t[i]) * cox_de_boor(i, k - 1, x, t, hi);
  if (t[i + k] > t[i + 1])
    right = (t[i + k] - x) / (t[i + k] - t[i + 1]) * cox_de_boor(i + 1, k - 1, x, t, hi);
  return left + right;
}

std::vector<double> clamped_knots(const BasisSpec& s) {
  std::vector<double> t;
  for (int i = 0; i < s.order; ++i) t.push_back(s.boundary_low);
  for (double k : s.interior_knots) t.push_back(k);
  for (int i = 0; i < s.order; ++i) t.push_back(s.boundary_high);
  return t;
}

}  // namespace

TEST_CASE("polynomial rows") {
  Eigen::VectorXd r = polynomial_row(2.0, 3);
  REQUIRE(r.size() == 4);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 2.0);
  CHECK(r[2] == 4.0);
  CHECK(r[3] == 8.0);

  r = polynomial_row(0.0, 5);
  CHECK(r[0] == 1.0);
  for (int j = 1; j <= 5; ++j) CHECK(r[j] == 0.0);

  r = polynomial_row(-1.0, 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == -1.0);
  CHECK(r[2] == 1.0);
}

TEST_CASE("order-1 bspline is a bin indicator") {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.order = 1;
  s.boundary_low = 0.0;
  s.boundary_high = 1.0;
  s.interior_knots = {0.5};
  Eigen::VectorXd r = bspline_row(0.25, s);
  REQUIRE(r.size() == 2);
  CHECK(r[0] == 1.0);
  CHECK(r[1] == 0.0);
  r = bspline_row(0.75, s);
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);
}

TEST_CASE("partition of unity and nonnegativity") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 50; ++rep) {
    BasisSpec s;
    s.kind = BasisKind::BSpline;
    s.order = 1 + static_cast<int>(rng.below(4));
    s.boundary_low = 0.0;
    s.boundary_high = 1.0;
    int nk = static_cast<int>(rng.below(3));
    double prev = 0.0;
    for (int i = 0; i < nk; ++i) {
      prev += (1.0 - prev) * (0.2 + 0.5 * rng.uniform());
      if (prev < 1.0) s.interior_knots.push_back(prev);
    }
    for (int j = 0; j < 20; ++j) {
      double x = rng.uniform();
      Eigen::VectorXd r = bspline_row(x, s);
      CHECK(std::abs(r.sum() - 1.0) < 1e-12);
      CHECK((r.array() >= 0.0).all());
    }
    // boundaries included
    CHECK(std::abs(bspline_row(0.0, s).sum() - 1.0) < 1e-12);
    CHECK(std::abs(bspline_row(1.0, s).sum() - 1.0) < 1e-12);
  }
}

TEST_CASE("matches independent recurrence oracle") {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.order = 3;
  s.boundary_low = 0.0;
  s.boundary_high = 1.0;
  s.interior_knots = {0.5};
  std::vector<double> t = clamped_knots(s);
  RngStream rng(7, 0);
  for (double x : {0.5, 0.0, 1.0, 0.1, 0.9, rng.uniform(), rng.uniform()}) {
    Eigen::VectorXd r = bspline_row(x, s);
    for (int i = 0; i < r.size(); ++i)
      CHECK(std::abs(r[i] - cox_de_boor(i, s.order, x, t, s.boundary_high)) < 1e-12);
  }
}

TEST_CASE("local support spans at most `order` knot intervals") {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.order = 3;
  s.boundary_low = 0.0;
  s.boundary_high = 1.0;
  s.interior_knots = {0.25, 0.5, 0.75};
  std::vector<double> t = clamped_knots(s);
  const int n_basis = s.width();
  for (int j = 0; j < n_basis; ++j) {
    int active_spans = 0;
    for (size_t k = 0; k + 1 < t.size(); ++k) {
      if (!(t[k] < t[k + 1])) continue;
      double mid = 0.5 * (t[k] + t[k + 1]);
      if (bspline_row(mid, s)[j] > 1e-14) ++active_spans;
    }
    CHECK(active_spans <= s.order);
  }
}

TEST_CASE("clamping outside boundaries") {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.order = 3;
  s.boundary_low = 0.0;
  s.boundary_high = 1.0;
  s.interior_knots = {0.5};
  long clamps = 0;
  Eigen::VectorXd lo = bspline_row(-0.5, s, &clamps);
  CHECK(clamps == 1);
  CHECK((lo - bspline_row(0.0, s)).lpNorm<Eigen::Infinity>() == 0.0);
  Eigen::VectorXd hi = bspline_row(2.0, s, &clamps);
  CHECK(clamps == 2);
  CHECK((hi - bspline_row(1.0, s)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("invalid specs are rejected") {
  BasisSpec s;
  s.kind = BasisKind::BSpline;
  s.order = 2;
  s.boundary_low = 0.0;
  s.boundary_high = 1.0;
  s.interior_knots = {0.7, 0.3};  // unsorted
  CHECK_THROWS_AS(bspline_row(0.5, s), Error);
  s.interior_knots = {1.5};  // outside boundary
  CHECK_THROWS_AS(bspline_row(0.5, s), Error);
  BasisSpec p;
  p.kind = BasisKind::Polynomial;
  p.degree = 0;
  CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("build_design") {
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  BasisSpec p;
  p.kind = BasisKind::Polynomial;
  p.degree = 1;
  Eigen::MatrixXd m = build_design(v, p);
  REQUIRE(m.rows() == 3);
  REQUIRE(m.cols() == 2);
  for (int i = 0; i < 3; ++i) {
    CHECK(m(i, 0) == 1.0);
    CHECK(m(i, 1) == v[i]);
  }
  CHECK_THROWS_AS(build_design(Eigen::VectorXd(), p), Error);

  // median knot placement
  BasisSpec s = resolve_bspline(v, 3);
  REQUIRE(s.interior_knots.size() == 1);
  CHECK(s.interior_knots[0] == 2.0);
  CHECK(s.boundary_low == 1.0);
  CHECK(s.boundary_high == 3.0);

  // constant input: identical rows
  Eigen::VectorXd c = Eigen::VectorXd::Constant(4, 2.0);
  Eigen::MatrixXd mc = build_design(c, s);
  for (int i = 1; i < 4; ++i)
    CHECK((mc.row(i) - mc.row(0)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("polynomial design on distinct points has full rank") {
  RngStream rng(3, 0);
  for (int d = 1; d <= 5; ++d) {
    Eigen::VectorXd v(d + 1);
    for (int i = 0; i <= d; ++i) v[i] = i + 0.3 * rng.uniform();
    BasisSpec p;
    p.kind = BasisKind::Polynomial;
    p.degree = d;
    Eigen::MatrixXd m = build_design(v, p);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m);
    CHECK(qr.rank() == d + 1);
  }
}

TEST_CASE("empirical median") {
  CHECK(empirical_median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(empirical_median({4.0, 1.0, 2.0, 3.0}) == 2.5);
  CHECK_THROWS_AS(empirical_median({}), Error);
}
