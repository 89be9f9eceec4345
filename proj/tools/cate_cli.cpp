// Command-line front end. All estimation happens behind the C API in
// libcate; this tool only assembles the run configuration (config file
// plus flag overrides, flags win) and reports errors.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cate/cate_capi.h"

using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config_path;
  std::string input;
  std::string out = ".";
  std::optional<long> seed;
  std::optional<double> alpha;
  std::optional<long> replicates;
  std::optional<double> grid_min, grid_max, grid_step;
  std::string variant;
  std::optional<bool> crossfit;
  std::string stratify_by;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration file");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "top-level random seed");
  cmd->add_option("--alpha", f.alpha, "confidence level alpha");
  cmd->add_option("--replicates", f.replicates, "multiplier bootstrap replicates");
  cmd->add_option("--grid-min", f.grid_min, "grid lower bound");
  cmd->add_option("--grid-max", f.grid_max, "grid upper bound");
  cmd->add_option("--grid-step", f.grid_step, "grid step size");
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) {
    fprintf(stderr, "error (config): cannot open '%s'\n", path.c_str());
    exit(1);
  }
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fprintf(stderr, "error (config): %s: %s\n", path.c_str(), e.what());
    exit(1);
  }
}

json merge_flags(const CommonFlags& f) {
  json cfg = load_config(f.config_path);
  if (!f.input.empty()) cfg["input"] = f.input;
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.alpha) cfg["alpha"] = *f.alpha;
  if (f.replicates) cfg["replicates"] = *f.replicates;
  if (f.grid_min) cfg["grid"]["min"] = *f.grid_min;
  if (f.grid_max) cfg["grid"]["max"] = *f.grid_max;
  if (f.grid_step) cfg["grid"]["step"] = *f.grid_step;
  if (!f.variant.empty()) cfg["variant"] = f.variant;
  if (f.crossfit) cfg["crossfit"] = *f.crossfit;
  if (!f.stratify_by.empty()) cfg["stratify_by"] = f.stratify_by;
  return cfg;
}

const char* category_of(cate_status st) {
  switch (st) {
    case CATE_ERR_CONFIG: return "config";
    case CATE_ERR_DATA: return "data";
    case CATE_ERR_NUMERIC: return "numeric";
    case CATE_ERR_IO: return "io";
    default: return "internal";
  }
}

int finish(cate_status st) {
  if (st == CATE_OK) return 0;
  fprintf(stderr, "error (%s): %s\n", category_of(st), cate_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-population CATE estimation from nested-trial data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cate_version());

  CommonFlags analyze_flags, simulate_flags, validate_flags;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "fit the two-step CATE estimator with pointwise intervals and a uniform band");
  add_common(analyze, analyze_flags);
  analyze->add_option("--input", analyze_flags.input, "cohort CSV file");
  analyze->add_option("--variant", analyze_flags.variant,
                      "pseudo-outcome variant: aipw|ipw|trial_only");
  analyze->add_flag("--crossfit,!--no-crossfit", analyze_flags.crossfit,
                    "cross-fit the nuisance models");
  analyze->add_option("--stratify-by", analyze_flags.stratify_by,
                      "discrete column to stratify both estimation steps");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "generate a dataset from a configured DGP plus its true CATE on the grid");
  add_common(simulate, simulate_flags);

  CLI::App* validate = app.add_subcommand(
      "validate", "Monte Carlo bias/coverage report over repeated simulate+analyze cycles");
  add_common(validate, validate_flags);

  CLI11_PARSE(app, argc, argv);

  if (analyze->parsed()) {
    json cfg = merge_flags(analyze_flags);
    return finish(cate_run_analyze(cfg.dump().c_str(), analyze_flags.out.c_str()));
  }
  if (simulate->parsed()) {
    json cfg = merge_flags(simulate_flags);
    return finish(cate_run_simulate(cfg.dump().c_str(), simulate_flags.out.c_str()));
  }
  json cfg = merge_flags(validate_flags);
  int n_failed = 0;
  cate_status st = cate_run_validate(cfg.dump().c_str(), validate_flags.out.c_str(), &n_failed);
  if (st != CATE_OK) return finish(st);
  if (n_failed > 0) {
    fprintf(stderr, "validation failed: %d threshold(s) violated\n", n_failed);
    return 2;
  }
  return 0;
}
