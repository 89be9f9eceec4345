#ifndef CATE_SECOND_STAGE_HPP
#define CATE_SECOND_STAGE_HPP

#include <Eigen/Dense>
#include <map>
#include <string>

#include "cate/basis.hpp"
#include "cate/pseudo.hpp"

namespace cate {

// Second-stage series fit: OLS of pseudo-outcomes on a basis of the
// effect modifier, with an HC0 sandwich covariance. Weighted fits exist
// for the multiplier bootstrap and carry the weighted sandwich.
struct CateFit {
  Eigen::VectorXd beta;
  BasisSpec basis_spec;
  Eigen::MatrixXd covariance;
  long n_used = 0;
  Eigen::VectorXd residuals;
  std::string stratum_label;
};

struct GridEvaluation {
  Eigen::VectorXd grid;
  Eigen::VectorXd estimate;
  Eigen::VectorXd se;
};

CateFit fit_cate(const PseudoOutcomes& pseudo, const Eigen::VectorXd& modifier,
                 const BasisSpec& spec, const Eigen::VectorXd* weights = nullptr);

// Core fit on a prebuilt design matrix; used directly by the bootstrap.
CateFit fit_cate_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                        const Eigen::VectorXd* weights = nullptr);

GridEvaluation evaluate_grid(const CateFit& fit, const Eigen::VectorXd& grid);

GridEvaluation evaluate_grid_design(const CateFit& fit, const Eigen::VectorXd& grid,
                                    const Eigen::MatrixXd& grid_design);

struct SubgroupEstimate {
  double level = 0.0;
  double estimate = 0.0;
  double se = 0.0;
  long n = 0;
};

// Nonparametric second stage for a discrete modifier: per-level mean of
// the pseudo-outcomes with sd/sqrt(n) standard errors.
std::vector<SubgroupEstimate> subgroup_cate(const PseudoOutcomes& pseudo,
                                            const Eigen::VectorXd& modifier);

}  // namespace cate

#endif
