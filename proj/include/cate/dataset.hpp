#ifndef CATE_DATASET_HPP
#define CATE_DATASET_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cate {

// Column roles for loading a nested-trial cohort file. `covariate_cols`
// lists the columns used as adjustment covariates; effect modifiers
// must be among them.
struct Schema {
  std::string s_col;
  std::string a_col;
  std::string y_col;
  std::vector<std::string> modifier_cols;
  std::vector<std::string> covariate_cols;
};

// Observed data for a trial nested in a cohort: covariates on every
// row, treatment and outcome only on trial rows (s = 1). On s = 0 rows
// a and y hold NaN, never 0. Immutable after construction.
struct CohortDataset {
  Eigen::MatrixXd covariates;  // n x d
  std::vector<std::string> columns;
  std::vector<std::string> effect_modifier_columns;
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  Eigen::VectorXd y;
  bool outcome_binary = true;
  long dropped_missing = 0;

  Eigen::Index n_rows() const { return s.size(); }
  long n_trial() const;
  long n_trial_arm(int arm) const;
  int column_index(const std::string& name) const;  // -1 if absent
  Eigen::VectorXd column(const std::string& name) const;
  std::vector<Eigen::Index> trial_rows() const;
  void validate() const;
};

CohortDataset load_cohort(std::istream& in, const Schema& schema);
CohortDataset load_cohort_file(const std::string& path, const Schema& schema);
void write_cohort(std::ostream& out, const CohortDataset& ds);

CohortDataset subset(const CohortDataset& ds, const std::vector<Eigen::Index>& rows);

struct FoldAssignment {
  std::vector<int> fold_id;  // per row, in 1..k
  int k = 2;
  std::uint64_t seed = 0;
};

// Deterministic stratified split: rows are shuffled within (s, a) cells
// and dealt round-robin, so fold sizes within a cell differ by at most
// one and every fold keeps trial rows in both arms.
FoldAssignment assign_folds(const CohortDataset& ds, int k, std::uint64_t seed);

}  // namespace cate

#endif
