#ifndef CATE_NUISANCE_HPP
#define CATE_NUISANCE_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cate/basis.hpp"
#include "cate/dataset.hpp"
#include "cate/glm.hpp"

namespace cate {

// One covariate entering a nuisance model, optionally expanded in a
// basis. Raw means a single linear column.
struct TermSpec {
  enum class Expansion { Raw, BSpline, Polynomial };
  std::string column;
  Expansion expansion = Expansion::Raw;
  int order = 3;       // bspline order (degree + 1)
  int n_interior = 1;  // bspline interior knots at quantiles (median when 1)
  int degree = 2;      // polynomial degree
};

struct ModelSpec {
  std::vector<TermSpec> terms;  // intercept is always included
};

// A model spec with data-dependent knots pinned down, so training and
// prediction use identical columns.
class ResolvedModel {
public:
  ResolvedModel() = default;
  ResolvedModel(const ModelSpec& spec, const CohortDataset& ds);

  Eigen::MatrixXd design(const CohortDataset& ds,
                         const std::vector<Eigen::Index>& rows) const;
  Eigen::MatrixXd design_all(const CohortDataset& ds) const;
  int width() const { return width_; }

private:
  std::vector<TermSpec> terms_;
  std::vector<BasisSpec> resolved_;  // parallel to terms_, unused for Raw
  int width_ = 1;
};

struct FitDiag {
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
};

// Per-row predictions of the three nuisance functions. p_hat and e1_hat
// are truncated into [eps, 1-eps]; g_of_a is NaN on s=0 rows.
struct NuisancePredictions {
  Eigen::VectorXd p_hat;
  Eigen::VectorXd e1_hat;
  Eigen::VectorXd g1_hat;
  Eigen::VectorXd g0_hat;
  Eigen::VectorXd g_of_a;
  bool crossfit = false;
  long truncation_count = 0;
  FitDiag p_diag, e_diag, g1_diag, g0_diag;
};

constexpr double kProbTruncation = 1e-3;

NuisancePredictions fit_nuisances(const CohortDataset& ds,
                                  const ModelSpec& participation_spec,
                                  const ModelSpec& outcome_spec,
                                  const ModelSpec& treatment_spec);

NuisancePredictions fit_nuisances_crossfit(const CohortDataset& ds,
                                           const FoldAssignment& folds,
                                           const ModelSpec& participation_spec,
                                           const ModelSpec& outcome_spec,
                                           const ModelSpec& treatment_spec);

}  // namespace cate

#endif
