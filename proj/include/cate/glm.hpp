#ifndef CATE_GLM_HPP
#define CATE_GLM_HPP

#include <Eigen/Dense>

namespace cate {

enum class GlmFamily { Logistic, Linear };

struct GlmFit {
  Eigen::VectorXd coefficients;
  GlmFamily family = GlmFamily::Logistic;
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;

  Eigen::VectorXd predict_linear(const Eigen::MatrixXd& design) const;
  // mean scale: expit of the linear predictor for logistic, identity for linear
  Eigen::VectorXd predict_mean(const Eigen::MatrixXd& design) const;
};

double expit(double eta);

// Logistic fits use IRLS started at zero with step-halving on a deviance
// increase; convergence means the score max-norm drops below 1e-8.
// Linear fits are ordinary (or weighted) least squares via QR.
// Rank-deficient designs and separated logistic data raise errors.
GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               GlmFamily family, const Eigen::VectorXd* weights = nullptr);

}  // namespace cate

#endif
