#include "cate/second_stage.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cate/error.hpp"

namespace cate {

CateFit fit_cate_design(const Eigen::MatrixXd& design, const Eigen::VectorXd& response,
                        const Eigen::VectorXd* weights) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (response.size() != n)
    throw Error(ErrorKind::Data, "pseudo-outcome length does not match design rows");
  if (n < p) throw Error(ErrorKind::Numeric, "second stage: fewer rows than basis functions");

  Eigen::VectorXd w = weights ? *weights : Eigen::VectorXd::Ones(n);
  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd dw = sw.asDiagonal() * design;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(dw);
  qr.setThreshold(1e-10);
  if (qr.rank() < p)
    throw Error(ErrorKind::Numeric, "second stage: rank-deficient design");

  CateFit fit;
  fit.beta = qr.solve(sw.asDiagonal() * response);
  fit.n_used = n;
  fit.residuals = response - design * fit.beta;

  // HC0 sandwich: bread (X'WX)^-1, meat X' diag(w^2 r^2) X
  Eigen::MatrixXd xtx = design.transpose() * w.asDiagonal() * design;
  Eigen::MatrixXd bread = xtx.ldlt().solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::VectorXd wr2 = (w.array() * fit.residuals.array()).square();
  Eigen::MatrixXd meat = design.transpose() * wr2.asDiagonal() * design;
  fit.covariance = bread * meat * bread;
  // symmetrize against roundoff
  fit.covariance = 0.5 * (fit.covariance + fit.covariance.transpose()).eval();
  return fit;
}

CateFit fit_cate(const PseudoOutcomes& pseudo, const Eigen::VectorXd& modifier,
                 const BasisSpec& spec, const Eigen::VectorXd* weights) {
  if (modifier.size() != pseudo.values.size())
    throw Error(ErrorKind::Data, "modifier length does not match pseudo-outcome length");
  Eigen::MatrixXd design = build_design(modifier, spec);
  CateFit fit = fit_cate_design(design, pseudo.values, weights);
  fit.basis_spec = spec;
  return fit;
}

GridEvaluation evaluate_grid_design(const CateFit& fit, const Eigen::VectorXd& grid,
                                    const Eigen::MatrixXd& grid_design) {
  if (grid.size() == 0) throw Error(ErrorKind::Config, "empty evaluation grid");
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw Error(ErrorKind::Config, "evaluation grid must be strictly increasing");
  GridEvaluation ge;
  ge.grid = grid;
  ge.estimate = grid_design * fit.beta;
  ge.se.resize(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    double v = grid_design.row(i) * fit.covariance * grid_design.row(i).transpose();
    ge.se[i] = std::sqrt(std::max(v, 0.0));
  }
  return ge;
}

GridEvaluation evaluate_grid(const CateFit& fit, const Eigen::VectorXd& grid) {
  Eigen::MatrixXd gd = build_design(grid, fit.basis_spec);
  return evaluate_grid_design(fit, grid, gd);
}

std::vector<SubgroupEstimate> subgroup_cate(const PseudoOutcomes& pseudo,
                                            const Eigen::VectorXd& modifier) {
  if (modifier.size() != pseudo.values.size())
    throw Error(ErrorKind::Data, "modifier length does not match pseudo-outcome length");
  std::map<double, std::vector<double>> levels;
  for (Eigen::Index i = 0; i < modifier.size(); ++i)
    levels[modifier[i]].push_back(pseudo.values[i]);

  std::vector<SubgroupEstimate> out;
  for (const auto& [level, vals] : levels) {
    if (vals.size() < 2)
      throw Error(ErrorKind::Data, "subgroup with a single row at level " + std::to_string(level));
    SubgroupEstimate est;
    est.level = level;
    est.n = static_cast<long>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= vals.size();
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    est.estimate = mean;
    est.se = std::sqrt(ss / (vals.size() - 1)) / std::sqrt(static_cast<double>(vals.size()));
    out.push_back(est);
  }
  return out;
}

}  // namespace cate
