#include "cate/glm.hpp"

#include <cmath>

#include "cate/error.hpp"

namespace cate {

namespace {

constexpr int kMaxIter = 100;

double binomial_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu,
                         const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double m = std::min(std::max(mu[i], 1e-300), 1.0 - 1e-16);
    dev -= 2.0 * w[i] * (y[i] * std::log(m) + (1.0 - y[i]) * std::log(1.0 - m));
  }
  return dev;
}

void check_rank(const Eigen::MatrixXd& design) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < design.cols())
    throw Error(ErrorKind::Numeric, "rank-deficient design matrix");
}

}  // namespace

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

Eigen::VectorXd GlmFit::predict_linear(const Eigen::MatrixXd& design) const {
  if (design.cols() != coefficients.size())
    throw Error(ErrorKind::Numeric, "design width does not match coefficient length");
  return design * coefficients;
}

Eigen::VectorXd GlmFit::predict_mean(const Eigen::MatrixXd& design) const {
  Eigen::VectorXd eta = predict_linear(design);
  if (family == GlmFamily::Linear) return eta;
  return eta.unaryExpr([](double e) { return expit(e); });
}

GlmFit fit_glm(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
               GlmFamily family, const Eigen::VectorXd* weights) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n)
    throw Error(ErrorKind::Numeric, "response length does not match design rows");
  if (n < p) throw Error(ErrorKind::Numeric, "fewer rows than coefficients");

  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
  if (weights) {
    if (w.size() != n) throw Error(ErrorKind::Numeric, "weight length mismatch");
    if ((w.array() < 0.0).any()) throw Error(ErrorKind::Numeric, "negative weights");
  }
  check_rank(design);

  GlmFit fit;
  fit.family = family;

  if (family == GlmFamily::Linear) {
    Eigen::MatrixXd dw = design;
    Eigen::VectorXd rw = response;
    if (weights) {
      Eigen::VectorXd sw = w.array().sqrt();
      dw = sw.asDiagonal() * design;
      rw = sw.asDiagonal() * response;
    }
    fit.coefficients = dw.colPivHouseholderQr().solve(rw);
    Eigen::VectorXd resid = response - design * fit.coefficients;
    fit.deviance = (w.array() * resid.array().square()).sum();
    fit.converged = true;
    fit.iterations = 0;
    return fit;
  }

  for (Eigen::Index i = 0; i < n; ++i)
    if (response[i] != 0.0 && response[i] != 1.0)
      throw Error(ErrorKind::Numeric, "logistic response outside {0,1}");

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 0.5);
  double dev = binomial_deviance(response, mu, w);
  // score tolerance scales with the total weight so large samples are
  // not held to an absolute threshold below their roundoff floor
  const double grad_tol = 1e-9 * std::max(1.0, w.sum());
  bool converged = false;
  int iter = 0;

  for (; iter < kMaxIter; ++iter) {
    Eigen::VectorXd grad = design.transpose() * (w.array() * (response - mu).array()).matrix();
    if (grad.lpNorm<Eigen::Infinity>() <= grad_tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd irls_w = (w.array() * mu.array() * (1.0 - mu.array())).max(1e-10);
    Eigen::VectorXd sw = irls_w.array().sqrt();
    Eigen::MatrixXd dw = sw.asDiagonal() * design;
    // working response on the adjusted scale: X beta + (y - mu)/var
    Eigen::VectorXd z = design * beta +
        ((response - mu).array() * w.array() / irls_w.array()).matrix();
    Eigen::VectorXd beta_new = dw.colPivHouseholderQr().solve(sw.asDiagonal() * z);

    Eigen::VectorXd step = beta_new - beta;
    double new_dev = 0.0;
    Eigen::VectorXd mu_new(n);
    int halvings = 0;
    for (;; ++halvings) {
      Eigen::VectorXd cand = beta + step;
      Eigen::VectorXd eta = design * cand;
      for (Eigen::Index i = 0; i < n; ++i) mu_new[i] = expit(eta[i]);
      new_dev = binomial_deviance(response, mu_new, w);
      if (new_dev <= dev + 1e-10 * (1.0 + std::abs(dev)) || halvings >= 30) {
        beta = cand;
        break;
      }
      step *= 0.5;
    }
    mu = mu_new;
    dev = new_dev;
  }

  // separation: fitted probabilities pinned at 0/1 with diverging
  // coefficients. The score can shrink below tolerance in that regime,
  // so the check applies whether or not the loop "converged".
  bool pinned = true;
  for (Eigen::Index i = 0; i < n; ++i)
    if (w[i] > 0.0 && std::abs(response[i] - mu[i]) > 1e-4) pinned = false;
  if (pinned && beta.lpNorm<Eigen::Infinity>() > 10.0)
    throw Error(ErrorKind::Numeric,
                "detected separation: fitted probabilities at 0/1 and coefficients diverging");
  if (!converged)
    throw Error(ErrorKind::Numeric, "logistic regression did not converge in 100 iterations");

  fit.coefficients = beta;
  fit.converged = true;
  fit.iterations = iter;
  fit.deviance = dev;
  return fit;
}

}  // namespace cate
