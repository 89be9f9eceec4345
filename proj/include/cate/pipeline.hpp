#ifndef CATE_PIPELINE_HPP
#define CATE_PIPELINE_HPP

#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "cate/dataset.hpp"
#include "cate/inference.hpp"
#include "cate/nuisance.hpp"
#include "cate/pseudo.hpp"
#include "cate/simulate.hpp"

namespace cate {

extern const char* const kVersion;

struct GridSpec {
  double min = 0.0;
  double max = 0.0;
  bool have_bounds = false;  // default: observed modifier range
  double step = 0.0;         // step > 0 wins over count
  long count = 100;

  Eigen::VectorXd make(double data_min, double data_max) const;
};

enum class SecondStageKind { BSpline, Polynomial, Subgroup };

struct SecondStageSpec {
  SecondStageKind kind = SecondStageKind::BSpline;
  int order = 3;       // bspline order, one interior knot at the median
  int n_interior = 1;
  int degree = 3;      // polynomial
};

enum class SeMode { Sandwich, BootstrapSecondStage, BootstrapFull };

struct AnalysisConfig {
  Schema schema;
  std::string stratify_by;  // optional discrete column, applied to both steps
  ModelSpec participation;
  ModelSpec outcome;
  ModelSpec treatment;
  SecondStageSpec second_stage;
  PseudoVariant variant = PseudoVariant::Aipw;
  bool crossfit = false;
  int folds = 2;
  GridSpec grid;
  double alpha = 0.05;
  long replicates = 200;  // multiplier bootstrap
  SeMode se_mode = SeMode::Sandwich;
  long se_bootstrap_replicates = 500;
  std::uint64_t seed = 1;
  bool dump_pseudo = false;

  void validate() const;
};

struct StratumResult {
  std::string label;
  UniformBand band;
  long n = 0, n_trial = 0, n_arm1 = 0, n_arm0 = 0;
  long truncation_count = 0;
  FitDiag p_diag, e_diag, g1_diag, g0_diag;
  long trial_below_grid = 0, trial_above_grid = 0;  // sparse-tail warning counts
  std::string pseudo_dump;  // populated when dump_pseudo is set
};

struct AnalysisResult {
  std::vector<StratumResult> strata;
};

AnalysisResult analyze(const CohortDataset& ds, const AnalysisConfig& config);

// JSON config surface (used by the CLI and the C API)
AnalysisConfig analysis_config_from_json(const nlohmann::json& j);
nlohmann::json analysis_config_to_json(const AnalysisConfig& c);
DgpSpec dgp_from_json(const nlohmann::json& j);
nlohmann::json dgp_to_json(const DgpSpec& d);

struct ValidationThresholds {
  double max_grid_mae = -1.0;          // negative: not checked
  double pointwise_coverage_min = -1.0;
  double pointwise_coverage_max = 2.0;
  double uniform_coverage_min = -1.0;
};

// File-level commands. Each writes its artifacts under out_dir and
// returns normally on success; failures raise Error. cmd_validate
// returns the number of configured thresholds that failed.
void cmd_analyze(const nlohmann::json& config, const std::string& out_dir);
void cmd_simulate(const nlohmann::json& config, const std::string& out_dir);
int cmd_validate(const nlohmann::json& config, const std::string& out_dir);

}  // namespace cate

#endif
