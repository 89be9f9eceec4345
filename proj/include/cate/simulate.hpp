#ifndef CATE_SIMULATE_HPP
#define CATE_SIMULATE_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cate/dataset.hpp"

namespace cate {

struct CovariateLaw {
  enum class Kind { Uniform, Normal, Discrete };
  std::string name;
  Kind kind = Kind::Uniform;
  double low = 0.0, high = 1.0;   // uniform
  double mu = 0.0, sigma = 1.0;   // normal
  std::vector<double> values;     // discrete support
  std::vector<double> probs;      // discrete masses, sum to 1
};

// eta = intercept + sum coef[c]*x_c + sum quad[c]*x_c^2
struct LinearPredictor {
  double intercept = 0.0;
  std::map<std::string, double> coef;
  std::map<std::string, double> quad;
};

enum class Link { Identity, Expit };
enum class OutcomeFamily { Bernoulli, Gaussian };

struct ArmModel {
  LinearPredictor mean;
  Link link = Link::Identity;
};

// A nested-trial data-generating process with an analytically known
// target-population CATE; the verification oracle for the pipeline.
struct DgpSpec {
  long n = 0;
  std::uint64_t seed = 0;
  std::vector<CovariateLaw> covariates;
  LinearPredictor participation;  // logistic in X
  double treat_prob = 0.5;
  ArmModel arm1, arm0;
  OutcomeFamily family = OutcomeFamily::Gaussian;
  double noise_sigma = 1.0;  // gaussian outcome noise
  std::string modifier;

  void validate() const;
  int covariate_index(const std::string& name) const;
  double predictor_eta(const LinearPredictor& lp, const Eigen::VectorXd& x) const;
  double participation_prob(const Eigen::VectorXd& x) const;
  double arm_mean(int arm, const Eigen::VectorXd& x) const;
};

CohortDataset generate(const DgpSpec& spec);

// E[mu1(X) - mu0(X) | Xtilde = x], integrating the remaining covariate
// laws by midpoint quadrature (1024 nodes per dimension, at most two
// integrated dimensions) or exact summation for discrete laws.
Eigen::VectorXd true_cate(const DgpSpec& spec, const Eigen::VectorXd& grid);

// Same conditional mean under the trial covariate law, i.e. weighting
// the integrand by the participation probability.
Eigen::VectorXd true_trial_cate(const DgpSpec& spec, const Eigen::VectorXd& grid);

}  // namespace cate

#endif
