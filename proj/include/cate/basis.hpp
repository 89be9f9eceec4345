#ifndef CATE_BASIS_HPP
#define CATE_BASIS_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace cate {

enum class BasisKind { Polynomial, BSpline, Identity };

// Specification of a one-dimensional basis expansion. For B-splines,
// `order` follows the convention order = degree + 1 and boundary knots
// are repeated with multiplicity `order` (clamped spline), so the basis
// spans constants. Values outside the boundary knots are clamped; the
// caller can count clamps through the pointer passed to bspline_row.
struct BasisSpec {
  BasisKind kind = BasisKind::BSpline;
  int degree = 3;                      // polynomial
  int order = 3;                       // bspline
  std::vector<double> interior_knots;  // bspline, sorted
  double boundary_low = 0.0;
  double boundary_high = 1.0;

  int width() const;
  void validate() const;
};

Eigen::VectorXd polynomial_row(double x, int degree);

Eigen::VectorXd bspline_row(double x, const BasisSpec& spec,
                            long* clamp_count = nullptr);

Eigen::VectorXd basis_row(double x, const BasisSpec& spec,
                          long* clamp_count = nullptr);

// Row i is the basis expansion of values[i].
Eigen::MatrixXd build_design(const Eigen::VectorXd& values,
                             const BasisSpec& spec,
                             long* clamp_count = nullptr);

// Resolve data-dependent placement: boundary knots at min/max of the
// observed values, one interior knot at the empirical median (or the
// supplied interior knots rescaled if already set).
BasisSpec resolve_bspline(const Eigen::VectorXd& values, int order,
                          int n_interior = 1);

double empirical_median(std::vector<double> values);

}  // namespace cate

#endif
