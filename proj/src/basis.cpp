#include "cate/basis.hpp"

#include <algorithm>
#include <cmath>

#include "cate/error.hpp"

namespace cate {

int BasisSpec::width() const {
  switch (kind) {
    case BasisKind::Polynomial: return degree + 1;
    case BasisKind::BSpline: return static_cast<int>(interior_knots.size()) + order;
    case BasisKind::Identity: return 1;
  }
  return 0;
}

void BasisSpec::validate() const {
  if (kind == BasisKind::Polynomial) {
    if (degree < 1) throw Error(ErrorKind::Config, "polynomial degree must be >= 1");
    return;
  }
  if (kind == BasisKind::BSpline) {
    if (order < 1) throw Error(ErrorKind::Config, "bspline order must be >= 1");
    if (!(boundary_low < boundary_high))
      throw Error(ErrorKind::Config, "bspline boundary knots must be ordered");
    double prev = boundary_low;
    for (double t : interior_knots) {
      if (!(t > prev))
        throw Error(ErrorKind::Config, "bspline interior knots must be sorted and strictly inside the boundary");
      prev = t;
    }
    if (!interior_knots.empty() && !(interior_knots.back() < boundary_high))
      throw Error(ErrorKind::Config, "bspline interior knots must lie strictly below the upper boundary");
  }
}

Eigen::VectorXd polynomial_row(double x, int degree) {
  Eigen::VectorXd row(degree + 1);
  row[0] = 1.0;
  for (int j = 1; j <= degree; ++j) row[j] = row[j - 1] * x;
  return row;
}

Eigen::VectorXd bspline_row(double x, const BasisSpec& spec, long* clamp_count) {
  spec.validate();
  const int order = spec.order;
  const int n_basis = static_cast<int>(spec.interior_knots.size()) + order;

  if (x < spec.boundary_low) {
    x = spec.boundary_low;
    if (clamp_count) ++*clamp_count;
  } else if (x > spec.boundary_high) {
    x = spec.boundary_high;
    if (clamp_count) ++*clamp_count;
  }

  // clamped knot vector: boundary knots repeated `order` times
  std::vector<double> t;
  t.reserve(n_basis + order);
  for (int i = 0; i < order; ++i) t.push_back(spec.boundary_low);
  for (double k : spec.interior_knots) t.push_back(k);
  for (int i = 0; i < order; ++i) t.push_back(spec.boundary_high);

  const int n_knots = static_cast<int>(t.size());
  std::vector<double> b(n_knots - 1, 0.0);
  for (int i = 0; i < n_knots - 1; ++i) {
    bool in = (t[i] <= x && x < t[i + 1]);
    // right edge: the last nonempty span is closed at the upper boundary
    if (x == spec.boundary_high && t[i] < t[i + 1] && x <= t[i + 1]) in = true;
    b[i] = in ? 1.0 : 0.0;
  }
  for (int k = 2; k <= order; ++k) {
    for (int i = 0; i + k < n_knots; ++i) {
      double left = 0.0, right = 0.0;
      double dl = t[i + k - 1] - t[i];
      double dr = t[i + k] - t[i + 1];
      if (dl > 0.0) left = (x - t[i]) / dl * b[i];
      if (dr > 0.0) right = (t[i + k] - x) / dr * b[i + 1];
      b[i] = left + right;
    }
  }

  Eigen::VectorXd row(n_basis);
  for (int i = 0; i < n_basis; ++i) row[i] = b[i];
  return row;
}

Eigen::VectorXd basis_row(double x, const BasisSpec& spec, long* clamp_count) {
  switch (spec.kind) {
    case BasisKind::Polynomial: return polynomial_row(x, spec.degree);
    case BasisKind::BSpline: return bspline_row(x, spec, clamp_count);
    case BasisKind::Identity: {
      Eigen::VectorXd row(1);
      row[0] = x;
      return row;
    }
  }
  throw Error(ErrorKind::Config, "unknown basis kind");
}

Eigen::MatrixXd build_design(const Eigen::VectorXd& values, const BasisSpec& spec,
                             long* clamp_count) {
  if (values.size() == 0) throw Error(ErrorKind::Data, "empty input to build_design");
  spec.validate();
  const int w = spec.width();
  Eigen::MatrixXd design(values.size(), w);
  for (Eigen::Index i = 0; i < values.size(); ++i)
    design.row(i) = basis_row(values[i], spec, clamp_count).transpose();
  return design;
}

double empirical_median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::Data, "median of empty vector");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BasisSpec resolve_bspline(const Eigen::VectorXd& values, int order, int n_interior) {
  if (values.size() < 2)
    throw Error(ErrorKind::Data, "need at least 2 values to place bspline knots");
  BasisSpec spec;
  spec.kind = BasisKind::BSpline;
  spec.order = order;
  spec.boundary_low = values.minCoeff();
  spec.boundary_high = values.maxCoeff();
  if (!(spec.boundary_low < spec.boundary_high))
    throw Error(ErrorKind::Data, "constant column: cannot place bspline boundary knots");
  std::vector<double> v(values.data(), values.data() + values.size());
  if (n_interior == 1) {
    double med = empirical_median(std::move(v));
    if (med > spec.boundary_low && med < spec.boundary_high)
      spec.interior_knots.push_back(med);
  } else {
    std::sort(v.begin(), v.end());
    for (int j = 1; j <= n_interior; ++j) {
      double q = static_cast<double>(j) / (n_interior + 1);
      double knot = v[static_cast<size_t>(q * (v.size() - 1))];
      if (knot > spec.boundary_low && knot < spec.boundary_high &&
          (spec.interior_knots.empty() || knot > spec.interior_knots.back()))
        spec.interior_knots.push_back(knot);
    }
  }
  return spec;
}

}  // namespace cate
