#include "cate/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "cate/error.hpp"
#include "cate/glm.hpp"
#include "cate/rng.hpp"

namespace cate {

namespace {
constexpr int kQuadNodes = 1024;
constexpr double kNormalTail = 8.0;  // integrate normals over mu +/- 8 sigma
}

int DgpSpec::covariate_index(const std::string& name) const {
  for (size_t j = 0; j < covariates.size(); ++j)
    if (covariates[j].name == name) return static_cast<int>(j);
  return -1;
}

void DgpSpec::validate() const {
  if (n < 1) throw Error(ErrorKind::Config, "dgp sample size must be >= 1");
  if (covariates.empty()) throw Error(ErrorKind::Config, "dgp needs at least one covariate");
  if (!(treat_prob > 0.0 && treat_prob < 1.0))
    throw Error(ErrorKind::Config, "trial treatment probability must be in (0,1)");
  std::set<std::string> names;
  for (const auto& c : covariates) {
    if (!names.insert(c.name).second)
      throw Error(ErrorKind::Config, "duplicated dgp covariate '" + c.name + "'");
    if (c.kind == CovariateLaw::Kind::Uniform && !(c.low < c.high))
      throw Error(ErrorKind::Config, "uniform law needs low < high");
    if (c.kind == CovariateLaw::Kind::Normal && !(c.sigma > 0.0))
      throw Error(ErrorKind::Config, "normal law needs sigma > 0");
    if (c.kind == CovariateLaw::Kind::Discrete) {
      if (c.values.empty() || c.values.size() != c.probs.size())
        throw Error(ErrorKind::Config, "discrete law needs matching values and probs");
      double sum = 0.0;
      for (double p : c.probs) {
        if (!(p > 0.0)) throw Error(ErrorKind::Config, "discrete law probs must be positive");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw Error(ErrorKind::Config, "discrete law probs must sum to 1");
    }
  }
  if (covariate_index(modifier) < 0)
    throw Error(ErrorKind::Config, "dgp modifier '" + modifier + "' is not a covariate");
  auto check_lp = [&](const LinearPredictor& lp, const char* what) {
    for (const auto& [name, _] : lp.coef)
      if (covariate_index(name) < 0)
        throw Error(ErrorKind::Config, std::string(what) + " references unknown covariate '" + name + "'");
    for (const auto& [name, _] : lp.quad)
      if (covariate_index(name) < 0)
        throw Error(ErrorKind::Config, std::string(what) + " references unknown covariate '" + name + "'");
  };
  check_lp(participation, "participation model");
  check_lp(arm1.mean, "arm-1 outcome model");
  check_lp(arm0.mean, "arm-0 outcome model");
}

double DgpSpec::predictor_eta(const LinearPredictor& lp, const Eigen::VectorXd& x) const {
  double eta = lp.intercept;
  for (const auto& [name, c] : lp.coef) eta += c * x[covariate_index(name)];
  for (const auto& [name, c] : lp.quad) {
    double v = x[covariate_index(name)];
    eta += c * v * v;
  }
  return eta;
}

double DgpSpec::participation_prob(const Eigen::VectorXd& x) const {
  return expit(predictor_eta(participation, x));
}

double DgpSpec::arm_mean(int arm, const Eigen::VectorXd& x) const {
  const ArmModel& m = arm == 1 ? arm1 : arm0;
  double eta = predictor_eta(m.mean, x);
  return m.link == Link::Expit ? expit(eta) : eta;
}

CohortDataset generate(const DgpSpec& spec) {
  spec.validate();
  const long n = spec.n;
  const int d = static_cast<int>(spec.covariates.size());
  const double nan = std::numeric_limits<double>::quiet_NaN();

  CohortDataset ds;
  for (const auto& c : spec.covariates) ds.columns.push_back(c.name);
  ds.effect_modifier_columns = {spec.modifier};
  ds.covariates.resize(n, d);
  ds.s.resize(n);
  ds.a.resize(n);
  ds.y.resize(n);
  ds.outcome_binary = spec.family == OutcomeFamily::Bernoulli;

  RngStream rng(spec.seed, /*stream_id=*/0xDA7A);
  Eigen::VectorXd x(d);
  for (long i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const CovariateLaw& law = spec.covariates[j];
      switch (law.kind) {
        case CovariateLaw::Kind::Uniform:
          x[j] = law.low + (law.high - law.low) * rng.uniform();
          break;
        case CovariateLaw::Kind::Normal:
          x[j] = law.mu + law.sigma * rng.normal();
          break;
        case CovariateLaw::Kind::Discrete: {
          double u = rng.uniform();
          size_t k = 0;
          double acc = law.probs[0];
          while (k + 1 < law.values.size() && u >= acc) acc += law.probs[++k];
          x[j] = law.values[k];
          break;
        }
      }
    }
    ds.covariates.row(i) = x.transpose();
    bool in_trial = rng.bernoulli(spec.participation_prob(x));
    ds.s[i] = in_trial ? 1.0 : 0.0;
    if (!in_trial) {
      ds.a[i] = nan;
      ds.y[i] = nan;
      continue;
    }
    int arm = rng.bernoulli(spec.treat_prob) ? 1 : 0;
    ds.a[i] = arm;
    double mu = spec.arm_mean(arm, x);
    if (spec.family == OutcomeFamily::Bernoulli) {
      if (!(mu > 0.0 && mu < 1.0))
        throw Error(ErrorKind::Numeric, "bernoulli outcome mean outside (0,1) at a drawn covariate value");
      ds.y[i] = rng.bernoulli(mu) ? 1.0 : 0.0;
    } else {
      ds.y[i] = mu + spec.noise_sigma * rng.normal();
    }
  }
  ds.validate();
  return ds;
}

namespace {

struct QuadDim {
  int index;                    // covariate index
  std::vector<double> nodes;
  std::vector<double> weights;  // masses, sum to 1 per dimension
};

QuadDim quad_dim(const DgpSpec& spec, int j) {
  const CovariateLaw& law = spec.covariates[j];
  QuadDim q;
  q.index = j;
  switch (law.kind) {
    case CovariateLaw::Kind::Discrete:
      q.nodes = law.values;
      q.weights = law.probs;
      break;
    case CovariateLaw::Kind::Uniform: {
      double h = (law.high - law.low) / kQuadNodes;
      for (int i = 0; i < kQuadNodes; ++i) {
        q.nodes.push_back(law.low + (i + 0.5) * h);
        q.weights.push_back(1.0 / kQuadNodes);
      }
      break;
    }
    case CovariateLaw::Kind::Normal: {
      double lo = law.mu - kNormalTail * law.sigma;
      double h = 2.0 * kNormalTail * law.sigma / kQuadNodes;
      double total = 0.0;
      for (int i = 0; i < kQuadNodes; ++i) {
        double v = lo + (i + 0.5) * h;
        double w = std::exp(-0.5 * std::pow((v - law.mu) / law.sigma, 2.0));
        q.nodes.push_back(v);
        q.weights.push_back(w);
        total += w;
      }
      for (double& w : q.weights) w /= total;
      break;
    }
  }
  return q;
}

// Conditional mean of mu1-mu0 given the modifier, optionally reweighted
// by the participation probability (trial covariate law).
Eigen::VectorXd conditional_cate(const DgpSpec& spec, const Eigen::VectorXd& grid,
                                 bool trial_weighted) {
  spec.validate();
  const int mod = spec.covariate_index(spec.modifier);
  const int d = static_cast<int>(spec.covariates.size());

  // covariates other than the modifier that enter the integrand
  std::set<int> relevant;
  auto add_lp = [&](const LinearPredictor& lp) {
    for (const auto& [name, c] : lp.coef)
      if (c != 0.0 && spec.covariate_index(name) != mod)
        relevant.insert(spec.covariate_index(name));
    for (const auto& [name, c] : lp.quad)
      if (c != 0.0 && spec.covariate_index(name) != mod)
        relevant.insert(spec.covariate_index(name));
  };
  add_lp(spec.arm1.mean);
  add_lp(spec.arm0.mean);
  if (trial_weighted) add_lp(spec.participation);
  if (relevant.size() > 2)
    throw Error(ErrorKind::Config,
                "true CATE quadrature supports at most 2 integrated covariates");

  std::vector<QuadDim> dims;
  for (int j : relevant) dims.push_back(quad_dim(spec, j));

  Eigen::VectorXd out(grid.size());
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    x[mod] = grid[g];
    double num = 0.0, den = 0.0;
    auto accumulate = [&](double mass) {
      double w = mass * (trial_weighted ? spec.participation_prob(x) : 1.0);
      num += w * (spec.arm_mean(1, x) - spec.arm_mean(0, x));
      den += w;
    };
    if (dims.empty()) {
      accumulate(1.0);
    } else if (dims.size() == 1) {
      for (size_t i = 0; i < dims[0].nodes.size(); ++i) {
        x[dims[0].index] = dims[0].nodes[i];
        accumulate(dims[0].weights[i]);
      }
    } else {
      for (size_t i = 0; i < dims[0].nodes.size(); ++i) {
        x[dims[0].index] = dims[0].nodes[i];
        for (size_t k = 0; k < dims[1].nodes.size(); ++k) {
          x[dims[1].index] = dims[1].nodes[k];
          accumulate(dims[0].weights[i] * dims[1].weights[k]);
        }
      }
    }
    out[g] = num / den;
  }
  return out;
}

}  // namespace

Eigen::VectorXd true_cate(const DgpSpec& spec, const Eigen::VectorXd& grid) {
  return conditional_cate(spec, grid, false);
}

Eigen::VectorXd true_trial_cate(const DgpSpec& spec, const Eigen::VectorXd& grid) {
  return conditional_cate(spec, grid, true);
}

}  // namespace cate
