#ifndef CATE_INFERENCE_HPP
#define CATE_INFERENCE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "cate/second_stage.hpp"

namespace cate {

// Pointwise normal intervals: estimate +/- z_{1-alpha/2} * se.
void pointwise_interval(const GridEvaluation& ge, double alpha,
                        Eigen::VectorXd* low, Eigen::VectorXd* high);

// Order-statistic quantile: the ceil(q*n)-th smallest value.
double empirical_quantile(std::vector<double> values, double q);

struct MultiplierOptions {
  long replicates = 200;
  std::uint64_t seed = 0;
  bool force_unit_weights = false;  // test hook: every weight is 1
  // bootstrap standard errors replacing the sandwich ones in every
  // t-statistic and band limit (null: use the fit's sandwich)
  const Eigen::VectorXd* se_override = nullptr;
};

struct UniformBand {
  Eigen::VectorXd grid;
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
  double alpha = 0.05;
  Eigen::VectorXd pointwise_low;
  Eigen::VectorXd pointwise_high;
  double critical_value = 0.0;
  Eigen::VectorXd band_low;
  Eigen::VectorXd band_high;
  long replicates = 0;
  std::uint64_t seed = 0;
  long redrawn = 0;  // replicates redrawn for a degenerate weighted design
};

// Multiplier (weighted) bootstrap sup-t band. Each replicate reweights
// the second-stage regression with independent Exp(1) draws; the
// critical value is the empirical 1-alpha quantile of the max absolute
// t-statistic over the grid, with t computed against the original
// fit's standard errors. Replicate b draws its weights from stream
// seed+b, so parallel and serial runs agree bitwise.
UniformBand multiplier_band_design(const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& response,
                                   const CateFit& fit, const Eigen::VectorXd& grid,
                                   const Eigen::MatrixXd& grid_design, double alpha,
                                   const MultiplierOptions& opts);

UniformBand multiplier_band(const PseudoOutcomes& pseudo,
                            const Eigen::VectorXd& modifier, const BasisSpec& spec,
                            const Eigen::VectorXd& grid, double alpha,
                            const MultiplierOptions& opts);

// Nonparametric bootstrap standard errors on a grid: resample rows with
// replacement, re-estimate via the supplied callback, take per-point
// standard deviations. The callback decides how much of the pipeline is
// refit (second stage only, or nuisances as well).
Eigen::VectorXd bootstrap_se(
    Eigen::Index n_rows, Eigen::Index grid_size,
    const std::function<Eigen::VectorXd(const std::vector<Eigen::Index>&)>& estimate_on,
    long replicates, std::uint64_t seed);

}  // namespace cate

#endif
