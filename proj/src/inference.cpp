#include "cate/inference.hpp"

#include <algorithm>
#include <cmath>

#include "cate/error.hpp"
#include "cate/rng.hpp"

namespace cate {

void pointwise_interval(const GridEvaluation& ge, double alpha,
                        Eigen::VectorXd* low, Eigen::VectorXd* high) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::Config, "alpha must be in (0,1)");
  double z = normal_quantile(1.0 - alpha / 2.0);
  *low = ge.estimate - z * ge.se;
  *high = ge.estimate + z * ge.se;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::Data, "quantile of empty vector");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::Config, "quantile level must be in (0,1)");
  size_t k = static_cast<size_t>(std::ceil(q * values.size()));
  if (k < 1) k = 1;
  if (k > values.size()) k = values.size();
  std::nth_element(values.begin(), values.begin() + (k - 1), values.end());
  return values[k - 1];
}

UniformBand multiplier_band_design(const Eigen::MatrixXd& design,
                                   const Eigen::VectorXd& response,
                                   const CateFit& fit, const Eigen::VectorXd& grid,
                                   const Eigen::MatrixXd& grid_design, double alpha,
                                   const MultiplierOptions& opts) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::Config, "alpha must be in (0,1)");
  if (opts.replicates < 100)
    throw Error(ErrorKind::Config, "multiplier bootstrap needs at least 100 replicates");

  const Eigen::Index n = design.rows();
  GridEvaluation ge = evaluate_grid_design(fit, grid, grid_design);
  if (opts.se_override) {
    if (opts.se_override->size() != grid.size())
      throw Error(ErrorKind::Numeric, "se override length does not match grid");
    ge.se = *opts.se_override;
  }
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    if (!(ge.se[i] > 0.0))
      throw Error(ErrorKind::Numeric, "zero standard error at a grid point: t-statistic degenerate");

  UniformBand band;
  band.grid = grid;
  band.estimate = ge.estimate;
  band.se = ge.se;
  band.alpha = alpha;
  band.replicates = opts.replicates;
  band.seed = opts.seed;
  pointwise_interval(ge, alpha, &band.pointwise_low, &band.pointwise_high);

  const Eigen::Index p = design.cols();
  std::vector<double> tmax(opts.replicates);
  long redrawn = 0;
  const long max_redraws = std::max<long>(1, opts.replicates / 100);

  for (long b = 0; b < opts.replicates; ++b) {
    Eigen::VectorXd beta_b;
    for (long attempt = 0;; ++attempt) {
      std::uint64_t stream = static_cast<std::uint64_t>(b + 1) +
                             static_cast<std::uint64_t>(attempt) * 0x100000000ULL;
      RngStream rng(opts.seed, stream);
      Eigen::VectorXd w(n);
      if (opts.force_unit_weights) {
        w.setOnes();
      } else {
        for (Eigen::Index i = 0; i < n; ++i) w[i] = rng.exponential();
      }
      Eigen::MatrixXd xtwx = design.transpose() * w.asDiagonal() * design;
      Eigen::VectorXd xtwy = design.transpose() * (w.array() * response.array()).matrix();
      beta_b = xtwx.ldlt().solve(xtwy);
      if (beta_b.allFinite()) break;
      if (++redrawn > max_redraws)
        throw Error(ErrorKind::Numeric,
                    "more than 1% of multiplier replicates had a degenerate weighted design");
    }
    Eigen::VectorXd delta_b = grid_design * beta_b;
    double t = 0.0;
    for (Eigen::Index i = 0; i < grid.size(); ++i)
      t = std::max(t, std::abs((delta_b[i] - ge.estimate[i]) / ge.se[i]));
    tmax[b] = t;
  }
  band.redrawn = redrawn;
  band.critical_value = empirical_quantile(tmax, 1.0 - alpha);
  band.band_low = band.estimate - band.critical_value * band.se;
  band.band_high = band.estimate + band.critical_value * band.se;
  (void)p;
  return band;
}

UniformBand multiplier_band(const PseudoOutcomes& pseudo,
                            const Eigen::VectorXd& modifier, const BasisSpec& spec,
                            const Eigen::VectorXd& grid, double alpha,
                            const MultiplierOptions& opts) {
  Eigen::MatrixXd design = build_design(modifier, spec);
  CateFit fit = fit_cate_design(design, pseudo.values);
  fit.basis_spec = spec;
  Eigen::MatrixXd grid_design = build_design(grid, spec);
  return multiplier_band_design(design, pseudo.values, fit, grid, grid_design, alpha, opts);
}

Eigen::VectorXd bootstrap_se(
    Eigen::Index n_rows, Eigen::Index grid_size,
    const std::function<Eigen::VectorXd(const std::vector<Eigen::Index>&)>& estimate_on,
    long replicates, std::uint64_t seed) {
  if (replicates < 2) throw Error(ErrorKind::Config, "bootstrap needs at least 2 replicates");
  Eigen::MatrixXd estimates(replicates, grid_size);
  std::vector<Eigen::Index> rows(n_rows);
  for (long b = 0; b < replicates; ++b) {
    RngStream rng(seed, static_cast<std::uint64_t>(b + 1) + (0xB007ULL << 32));
    for (Eigen::Index i = 0; i < n_rows; ++i)
      rows[i] = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n_rows)));
    Eigen::VectorXd est = estimate_on(rows);
    if (est.size() != grid_size)
      throw Error(ErrorKind::Numeric, "bootstrap callback returned wrong grid size");
    estimates.row(b) = est.transpose();
  }
  Eigen::VectorXd se(grid_size);
  for (Eigen::Index j = 0; j < grid_size; ++j) {
    double mean = estimates.col(j).mean();
    double ss = (estimates.col(j).array() - mean).square().sum();
    se[j] = std::sqrt(ss / (replicates - 1));
  }
  return se;
}

}  // namespace cate
