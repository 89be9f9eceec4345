#include "cate/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <thread>

#include "cate/error.hpp"
#include "cate/rng.hpp"

namespace cate {

const char* const kVersion = "0.1.0";

using nlohmann::json;

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t state = seed ^ (salt * 0x9E3779B97F4A7C15ULL);
  return detail::splitmix64(state);
}

std::string fmt(double v) {
  char buf[64];
  snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace

Eigen::VectorXd GridSpec::make(double data_min, double data_max) const {
  double lo = have_bounds ? min : data_min;
  double hi = have_bounds ? max : data_max;
  if (!(lo < hi)) throw Error(ErrorKind::Config, "grid bounds must satisfy min < max");
  std::vector<double> pts;
  if (step > 0.0) {
    for (double x = lo; x <= hi + 1e-9 * (hi - lo); x += step) pts.push_back(x);
  } else {
    if (count < 2) throw Error(ErrorKind::Config, "grid needs at least 2 points");
    for (long i = 0; i < count; ++i)
      pts.push_back(lo + (hi - lo) * static_cast<double>(i) / (count - 1));
  }
  Eigen::VectorXd g(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) g[i] = pts[i];
  return g;
}

void AnalysisConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorKind::Config, "alpha must be in (0,1)");
  if (schema.modifier_cols.size() != 1)
    throw Error(ErrorKind::Config, "exactly one effect modifier column is required");
  if (replicates < 100)
    throw Error(ErrorKind::Config, "multiplier bootstrap needs at least 100 replicates");
  if (crossfit && folds < 2)
    throw Error(ErrorKind::Config, "cross-fitting needs at least 2 folds");
  if (grid.have_bounds && !(grid.min < grid.max))
    throw Error(ErrorKind::Config, "grid bounds must satisfy min < max");
  if (second_stage.kind == SecondStageKind::Polynomial && second_stage.degree < 1)
    throw Error(ErrorKind::Config, "polynomial second stage needs degree >= 1");
}

namespace {

Eigen::VectorXd gather(const Eigen::VectorXd& col, const std::vector<Eigen::Index>& rows) {
  Eigen::VectorXd out(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) out[i] = col[rows[i]];
  return out;
}

StratumResult analyze_stratum(const CohortDataset& ds, const AnalysisConfig& config,
                              const std::string& label, std::uint64_t stratum_seed) {
  StratumResult res;
  res.label = label;
  res.n = ds.n_rows();
  res.n_trial = ds.n_trial();
  res.n_arm1 = ds.n_trial_arm(1);
  res.n_arm0 = ds.n_trial_arm(0);

  NuisancePredictions np;
  if (config.crossfit) {
    FoldAssignment folds = assign_folds(ds, config.folds, mix_seed(stratum_seed, 0xF01D));
    np = fit_nuisances_crossfit(ds, folds, config.participation, config.outcome,
                                config.treatment);
  } else {
    np = fit_nuisances(ds, config.participation, config.outcome, config.treatment);
  }
  res.truncation_count = np.truncation_count;
  res.p_diag = np.p_diag;
  res.e_diag = np.e_diag;
  res.g1_diag = np.g1_diag;
  res.g0_diag = np.g0_diag;

  PseudoOutcomes po = compute_pseudo(config.variant, ds, np);
  if (config.dump_pseudo) {
    std::ostringstream oss;
    dump_pseudo(oss, ds, po);
    res.pseudo_dump = oss.str();
  }

  const std::string& mod_name = config.schema.modifier_cols[0];
  Eigen::VectorXd mod_col = ds.column(mod_name);
  Eigen::VectorXd modifier = gather(mod_col, po.rows);

  MultiplierOptions opts;
  opts.replicates = config.replicates;
  opts.seed = mix_seed(stratum_seed, 0xBA9D);

  if (config.second_stage.kind == SecondStageKind::Subgroup) {
    std::set<double> level_set(modifier.data(), modifier.data() + modifier.size());
    std::vector<double> levels(level_set.begin(), level_set.end());
    Eigen::VectorXd grid(levels.size());
    for (size_t i = 0; i < levels.size(); ++i) grid[i] = levels[i];
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(modifier.size(), levels.size());
    for (Eigen::Index i = 0; i < modifier.size(); ++i) {
      auto it = std::lower_bound(levels.begin(), levels.end(), modifier[i]);
      design(i, it - levels.begin()) = 1.0;
    }
    CateFit fit = fit_cate_design(design, po.values);
    Eigen::MatrixXd grid_design =
        Eigen::MatrixXd::Identity(levels.size(), levels.size());
    res.band = multiplier_band_design(design, po.values, fit, grid, grid_design,
                                      config.alpha, opts);
    return res;
  }

  BasisSpec spec;
  if (config.second_stage.kind == SecondStageKind::BSpline) {
    spec = resolve_bspline(modifier, config.second_stage.order,
                           config.second_stage.n_interior);
  } else {
    spec.kind = BasisKind::Polynomial;
    spec.degree = config.second_stage.degree;
  }

  Eigen::VectorXd grid = config.grid.make(modifier.minCoeff(), modifier.maxCoeff());
  double glo = grid[0], ghi = grid[grid.size() - 1];
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) {
    if (ds.s[i] != 1.0) continue;
    if (mod_col[i] < glo) ++res.trial_below_grid;
    if (mod_col[i] > ghi) ++res.trial_above_grid;
  }

  Eigen::MatrixXd design = build_design(modifier, spec);
  CateFit fit = fit_cate_design(design, po.values);
  fit.basis_spec = spec;
  fit.stratum_label = label;
  Eigen::MatrixXd grid_design = build_design(grid, spec);

  if (config.se_mode != SeMode::Sandwich) {
    long B = config.se_bootstrap_replicates;
    std::uint64_t bs_seed = mix_seed(stratum_seed, 0x5EB0);
    Eigen::VectorXd se;
    if (config.se_mode == SeMode::BootstrapSecondStage) {
      se = bootstrap_se(
          modifier.size(), grid.size(),
          [&](const std::vector<Eigen::Index>& rows) {
            Eigen::MatrixXd d(rows.size(), design.cols());
            Eigen::VectorXd r(rows.size());
            for (size_t i = 0; i < rows.size(); ++i) {
              d.row(i) = design.row(rows[i]);
              r[i] = po.values[rows[i]];
            }
            CateFit f = fit_cate_design(d, r);
            return Eigen::VectorXd(grid_design * f.beta);
          },
          B, bs_seed);
    } else {
      se = bootstrap_se(
          ds.n_rows(), grid.size(),
          [&](const std::vector<Eigen::Index>& rows) {
            CohortDataset bs = subset(ds, rows);
            NuisancePredictions np_b = fit_nuisances(bs, config.participation,
                                                     config.outcome, config.treatment);
            PseudoOutcomes po_b = compute_pseudo(config.variant, bs, np_b);
            Eigen::VectorXd mod_b = gather(bs.column(mod_name), po_b.rows);
            CateFit f = fit_cate(po_b, mod_b, spec);
            return Eigen::VectorXd(grid_design * f.beta);
          },
          B, bs_seed);
    }
    opts.se_override = &se;
    res.band = multiplier_band_design(design, po.values, fit, grid, grid_design,
                                      config.alpha, opts);
  } else {
    res.band = multiplier_band_design(design, po.values, fit, grid, grid_design,
                                      config.alpha, opts);
  }
  return res;
}

}  // namespace

AnalysisResult analyze(const CohortDataset& ds, const AnalysisConfig& config) {
  config.validate();
  ds.validate();
  AnalysisResult result;

  if (config.stratify_by.empty()) {
    result.strata.push_back(
        analyze_stratum(ds, config, "all", mix_seed(config.seed, 1)));
    return result;
  }

  Eigen::VectorXd strat = ds.column(config.stratify_by);
  std::map<double, std::vector<Eigen::Index>> groups;
  for (Eigen::Index i = 0; i < ds.n_rows(); ++i) groups[strat[i]].push_back(i);
  if (groups.size() > 20)
    throw Error(ErrorKind::Config, "stratification column '" + config.stratify_by +
                                       "' has more than 20 levels; not discrete?");
  long idx = 0;
  for (const auto& [level, rows] : groups) {
    std::string label = config.stratify_by + "=" + fmt(level);
    CohortDataset sub = subset(ds, rows);
    result.strata.push_back(
        analyze_stratum(sub, config, label, mix_seed(config.seed, 1 + idx)));
    ++idx;
  }
  return result;
}

// ---------------------------------------------------------------------------
// JSON configuration

namespace {

TermSpec term_from_json(const json& j) {
  TermSpec t;
  if (j.is_string()) {
    t.column = j.get<std::string>();
    return t;
  }
  t.column = j.at("column").get<std::string>();
  std::string exp = j.value("expansion", "raw");
  if (exp == "raw") {
    t.expansion = TermSpec::Expansion::Raw;
  } else if (exp == "bspline") {
    t.expansion = TermSpec::Expansion::BSpline;
    t.order = j.value("order", 3);
    t.n_interior = j.value("interior", 1);
  } else if (exp == "polynomial") {
    t.expansion = TermSpec::Expansion::Polynomial;
    t.degree = j.value("degree", 2);
  } else {
    throw Error(ErrorKind::Config, "unknown term expansion '" + exp + "'");
  }
  return t;
}

json term_to_json(const TermSpec& t) {
  json j;
  j["column"] = t.column;
  switch (t.expansion) {
    case TermSpec::Expansion::Raw:
      j["expansion"] = "raw";
      break;
    case TermSpec::Expansion::BSpline:
      j["expansion"] = "bspline";
      j["order"] = t.order;
      j["interior"] = t.n_interior;
      break;
    case TermSpec::Expansion::Polynomial:
      j["expansion"] = "polynomial";
      j["degree"] = t.degree;
      break;
  }
  return j;
}

ModelSpec model_from_json(const json& j) {
  ModelSpec m;
  for (const auto& t : j.at("terms")) m.terms.push_back(term_from_json(t));
  return m;
}

json model_to_json(const ModelSpec& m) {
  json terms = json::array();
  for (const auto& t : m.terms) terms.push_back(term_to_json(t));
  return json{{"terms", terms}};
}

ModelSpec default_raw_model(const std::vector<std::string>& covariates) {
  ModelSpec m;
  for (const auto& c : covariates) {
    TermSpec t;
    t.column = c;
    m.terms.push_back(t);
  }
  return m;
}

LinearPredictor predictor_from_json(const json& j) {
  LinearPredictor lp;
  lp.intercept = j.value("intercept", 0.0);
  if (j.contains("coef"))
    for (auto it = j["coef"].begin(); it != j["coef"].end(); ++it)
      lp.coef[it.key()] = it.value().get<double>();
  if (j.contains("quad"))
    for (auto it = j["quad"].begin(); it != j["quad"].end(); ++it)
      lp.quad[it.key()] = it.value().get<double>();
  return lp;
}

json predictor_to_json(const LinearPredictor& lp) {
  json j;
  j["intercept"] = lp.intercept;
  j["coef"] = json::object();
  for (const auto& [k, v] : lp.coef) j["coef"][k] = v;
  j["quad"] = json::object();
  for (const auto& [k, v] : lp.quad) j["quad"][k] = v;
  return j;
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  if (j.contains("min") && j.contains("max")) {
    g.min = j["min"].get<double>();
    g.max = j["max"].get<double>();
    g.have_bounds = true;
  } else if (j.contains("min") != j.contains("max")) {
    throw Error(ErrorKind::Config, "grid needs both min and max (or neither)");
  }
  g.step = j.value("step", 0.0);
  g.count = j.value("count", 100L);
  return g;
}

}  // namespace

AnalysisConfig analysis_config_from_json(const json& j) {
  AnalysisConfig c;
  if (j.contains("schema")) {
    const json& s = j["schema"];
    c.schema.s_col = s.value("s", "s");
    c.schema.a_col = s.value("a", "a");
    c.schema.y_col = s.value("y", "y");
    if (s.contains("modifiers"))
      c.schema.modifier_cols = s["modifiers"].get<std::vector<std::string>>();
    if (s.contains("covariates"))
      c.schema.covariate_cols = s["covariates"].get<std::vector<std::string>>();
  }
  c.stratify_by = j.value("stratify_by", "");
  if (j.contains("nuisance")) {
    const json& nj = j["nuisance"];
    if (nj.contains("participation")) c.participation = model_from_json(nj["participation"]);
    if (nj.contains("outcome")) c.outcome = model_from_json(nj["outcome"]);
    if (nj.contains("treatment")) c.treatment = model_from_json(nj["treatment"]);
  }
  if (j.contains("second_stage")) {
    const json& sj = j["second_stage"];
    std::string kind = sj.value("kind", "bspline");
    if (kind == "bspline")
      c.second_stage.kind = SecondStageKind::BSpline;
    else if (kind == "polynomial")
      c.second_stage.kind = SecondStageKind::Polynomial;
    else if (kind == "subgroup")
      c.second_stage.kind = SecondStageKind::Subgroup;
    else
      throw Error(ErrorKind::Config, "unknown second-stage kind '" + kind + "'");
    c.second_stage.order = sj.value("order", 3);
    c.second_stage.n_interior = sj.value("interior", 1);
    c.second_stage.degree = sj.value("degree", 3);
  }
  std::string variant = j.value("variant", "aipw");
  if (variant == "aipw")
    c.variant = PseudoVariant::Aipw;
  else if (variant == "ipw")
    c.variant = PseudoVariant::Ipw;
  else if (variant == "trial_only")
    c.variant = PseudoVariant::TrialOnly;
  else
    throw Error(ErrorKind::Config, "unknown pseudo-outcome variant '" + variant + "'");
  c.crossfit = j.value("crossfit", false);
  c.folds = j.value("folds", 2);
  if (j.contains("grid")) c.grid = grid_from_json(j["grid"]);
  c.alpha = j.value("alpha", 0.05);
  c.replicates = j.value("replicates", 200L);
  std::string se_mode = j.value("se_mode", "sandwich");
  if (se_mode == "sandwich")
    c.se_mode = SeMode::Sandwich;
  else if (se_mode == "bootstrap")
    c.se_mode = SeMode::BootstrapSecondStage;
  else if (se_mode == "bootstrap_full")
    c.se_mode = SeMode::BootstrapFull;
  else
    throw Error(ErrorKind::Config, "unknown se_mode '" + se_mode + "'");
  c.se_bootstrap_replicates = j.value("se_bootstrap_replicates", 500L);
  c.seed = j.value("seed", 1UL);
  c.dump_pseudo = j.value("dump_pseudo", false);
  return c;
}

json analysis_config_to_json(const AnalysisConfig& c) {
  json j;
  j["schema"] = {{"s", c.schema.s_col},
                 {"a", c.schema.a_col},
                 {"y", c.schema.y_col},
                 {"modifiers", c.schema.modifier_cols},
                 {"covariates", c.schema.covariate_cols}};
  j["stratify_by"] = c.stratify_by;
  j["nuisance"] = {{"participation", model_to_json(c.participation)},
                   {"outcome", model_to_json(c.outcome)},
                   {"treatment", model_to_json(c.treatment)}};
  const char* kind = c.second_stage.kind == SecondStageKind::BSpline ? "bspline"
                     : c.second_stage.kind == SecondStageKind::Polynomial ? "polynomial"
                                                                          : "subgroup";
  j["second_stage"] = {{"kind", kind},
                       {"order", c.second_stage.order},
                       {"interior", c.second_stage.n_interior},
                       {"degree", c.second_stage.degree}};
  j["variant"] = pseudo_variant_name(c.variant);
  j["crossfit"] = c.crossfit;
  j["folds"] = c.folds;
  json g;
  if (c.grid.have_bounds) {
    g["min"] = c.grid.min;
    g["max"] = c.grid.max;
  }
  if (c.grid.step > 0.0) g["step"] = c.grid.step;
  g["count"] = c.grid.count;
  j["grid"] = g;
  j["alpha"] = c.alpha;
  j["replicates"] = c.replicates;
  j["se_mode"] = c.se_mode == SeMode::Sandwich ? "sandwich"
                 : c.se_mode == SeMode::BootstrapSecondStage ? "bootstrap"
                                                             : "bootstrap_full";
  j["se_bootstrap_replicates"] = c.se_bootstrap_replicates;
  j["seed"] = c.seed;
  j["dump_pseudo"] = c.dump_pseudo;
  return j;
}

DgpSpec dgp_from_json(const json& j) {
  DgpSpec d;
  d.n = j.at("n").get<long>();
  d.seed = j.value("seed", 1UL);
  for (const auto& cj : j.at("covariates")) {
    CovariateLaw law;
    law.name = cj.at("name").get<std::string>();
    std::string kind = cj.value("kind", "uniform");
    if (kind == "uniform") {
      law.kind = CovariateLaw::Kind::Uniform;
      law.low = cj.value("low", 0.0);
      law.high = cj.value("high", 1.0);
    } else if (kind == "normal") {
      law.kind = CovariateLaw::Kind::Normal;
      law.mu = cj.value("mu", 0.0);
      law.sigma = cj.value("sigma", 1.0);
    } else if (kind == "discrete") {
      law.kind = CovariateLaw::Kind::Discrete;
      law.values = cj.at("values").get<std::vector<double>>();
      law.probs = cj.at("probs").get<std::vector<double>>();
    } else {
      throw Error(ErrorKind::Config, "unknown covariate law '" + kind + "'");
    }
    d.covariates.push_back(law);
  }
  d.participation = predictor_from_json(j.at("participation"));
  d.treat_prob = j.value("treat_prob", 0.5);
  std::string family = j.value("family", "gaussian");
  if (family == "gaussian")
    d.family = OutcomeFamily::Gaussian;
  else if (family == "bernoulli")
    d.family = OutcomeFamily::Bernoulli;
  else
    throw Error(ErrorKind::Config, "unknown outcome family '" + family + "'");
  d.noise_sigma = j.value("noise_sigma", 1.0);
  const json& oj = j.at("outcome");
  d.arm1.mean = predictor_from_json(oj.at("arm1"));
  d.arm0.mean = predictor_from_json(oj.at("arm0"));
  std::string link = oj.value("link", d.family == OutcomeFamily::Bernoulli ? "expit" : "identity");
  Link l = link == "expit" ? Link::Expit : Link::Identity;
  d.arm1.link = d.arm0.link = l;
  d.modifier = j.at("modifier").get<std::string>();
  d.validate();
  return d;
}

json dgp_to_json(const DgpSpec& d) {
  json j;
  j["n"] = d.n;
  j["seed"] = d.seed;
  json covs = json::array();
  for (const auto& c : d.covariates) {
    json cj;
    cj["name"] = c.name;
    switch (c.kind) {
      case CovariateLaw::Kind::Uniform:
        cj["kind"] = "uniform";
        cj["low"] = c.low;
        cj["high"] = c.high;
        break;
      case CovariateLaw::Kind::Normal:
        cj["kind"] = "normal";
        cj["mu"] = c.mu;
        cj["sigma"] = c.sigma;
        break;
      case CovariateLaw::Kind::Discrete:
        cj["kind"] = "discrete";
        cj["values"] = c.values;
        cj["probs"] = c.probs;
        break;
    }
    covs.push_back(cj);
  }
  j["covariates"] = covs;
  j["participation"] = predictor_to_json(d.participation);
  j["treat_prob"] = d.treat_prob;
  j["family"] = d.family == OutcomeFamily::Gaussian ? "gaussian" : "bernoulli";
  j["noise_sigma"] = d.noise_sigma;
  j["outcome"] = {{"arm1", predictor_to_json(d.arm1.mean)},
                  {"arm0", predictor_to_json(d.arm0.mean)},
                  {"link", d.arm1.link == Link::Expit ? "expit" : "identity"}};
  j["modifier"] = d.modifier;
  return j;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::string band_csv(const UniformBand& b) {
  std::ostringstream out;
  out << "grid,estimate,se,pw_low,pw_high,band_low,band_high\n";
  for (Eigen::Index i = 0; i < b.grid.size(); ++i) {
    out << fmt(b.grid[i]) << ',' << fmt(b.estimate[i]) << ',' << fmt(b.se[i]) << ','
        << fmt(b.pointwise_low[i]) << ',' << fmt(b.pointwise_high[i]) << ','
        << fmt(b.band_low[i]) << ',' << fmt(b.band_high[i]) << '\n';
  }
  return out.str();
}

json diag_to_json(const FitDiag& d) {
  return json{{"converged", d.converged}, {"iterations", d.iterations}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out << content;
}

CohortDataset load_for_config(const json& config, const AnalysisConfig& cfg) {
  if (!config.contains("input"))
    throw Error(ErrorKind::Config, "analyze requires an 'input' path");
  return load_cohort_file(config["input"].get<std::string>(), cfg.schema);
}

}  // namespace

void cmd_analyze(const json& config, const std::string& out_dir) {
  AnalysisConfig cfg = analysis_config_from_json(config);
  cfg.validate();
  CohortDataset ds = load_for_config(config, cfg);
  AnalysisResult result = analyze(ds, cfg);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);

  json manifest;
  manifest["tool"] = "cate";
  manifest["version"] = kVersion;
  manifest["command"] = "analyze";
  manifest["config"] = analysis_config_to_json(cfg);
  manifest["input"] = config["input"].get<std::string>();
  manifest["dropped_missing"] = ds.dropped_missing;
  json strata = json::array();

  std::ostringstream summary;
  summary << "cate " << kVersion << " analyze\n";
  summary << "rows: " << ds.n_rows() << " (trial " << ds.n_trial() << ", dropped "
          << ds.dropped_missing << " incomplete)\n";

  for (const auto& st : result.strata) {
    std::string fname =
        result.strata.size() == 1 ? "band.csv" : "band_" + sanitize(st.label) + ".csv";
    write_file(dir / fname, band_csv(st.band));
    if (!st.pseudo_dump.empty())
      write_file(dir / ("pseudo_" + sanitize(st.label) + ".csv"), st.pseudo_dump);

    json sj;
    sj["label"] = st.label;
    sj["file"] = fname;
    sj["n"] = st.n;
    sj["n_trial"] = st.n_trial;
    sj["n_arm1"] = st.n_arm1;
    sj["n_arm0"] = st.n_arm0;
    sj["truncation_count"] = st.truncation_count;
    sj["critical_value"] = st.band.critical_value;
    sj["nuisance"] = {{"participation", diag_to_json(st.p_diag)},
                      {"treatment", diag_to_json(st.e_diag)},
                      {"outcome_arm1", diag_to_json(st.g1_diag)},
                      {"outcome_arm0", diag_to_json(st.g0_diag)}};
    sj["trial_below_grid"] = st.trial_below_grid;
    sj["trial_above_grid"] = st.trial_above_grid;
    sj["sparse_tail_warning"] =
        (st.trial_below_grid > 0 && st.trial_below_grid < 20) ||
        (st.trial_above_grid > 0 && st.trial_above_grid < 20);
    strata.push_back(sj);

    summary << "stratum " << st.label << ": n=" << st.n << " trial=" << st.n_trial
            << " C=" << fmt(st.band.critical_value) << " -> " << fname << "\n";
    if (sj["sparse_tail_warning"].get<bool>())
      summary << "  warning: fewer than 20 trial observations beyond a grid bound\n";
  }
  manifest["strata"] = strata;
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  write_file(dir / "summary.txt", summary.str());
}

void cmd_simulate(const json& config, const std::string& out_dir) {
  DgpSpec dgp = dgp_from_json(config.at("dgp"));
  CohortDataset ds = generate(dgp);

  GridSpec gs;
  if (config.contains("grid")) gs = grid_from_json(config["grid"]);
  Eigen::VectorXd mod = ds.column(dgp.modifier);
  Eigen::VectorXd grid = gs.make(mod.minCoeff(), mod.maxCoeff());
  Eigen::VectorXd truth = true_cate(dgp, grid);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  std::ostringstream dcsv;
  write_cohort(dcsv, ds);
  write_file(dir / "dataset.csv", dcsv.str());
  std::ostringstream tcsv;
  tcsv << "grid,true_cate\n";
  for (Eigen::Index i = 0; i < grid.size(); ++i)
    tcsv << fmt(grid[i]) << ',' << fmt(truth[i]) << '\n';
  write_file(dir / "truth.csv", tcsv.str());

  json manifest;
  manifest["tool"] = "cate";
  manifest["version"] = kVersion;
  manifest["command"] = "simulate";
  manifest["dgp"] = dgp_to_json(dgp);
  manifest["n_rows"] = ds.n_rows();
  manifest["n_trial"] = ds.n_trial();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

int cmd_validate(const json& config, const std::string& out_dir) {
  DgpSpec dgp = dgp_from_json(config.at("dgp"));
  json aj = config.value("analysis", json::object());
  AnalysisConfig cfg = analysis_config_from_json(aj);
  if (cfg.schema.covariate_cols.empty()) {
    for (const auto& c : dgp.covariates) cfg.schema.covariate_cols.push_back(c.name);
  }
  if (cfg.schema.modifier_cols.empty()) cfg.schema.modifier_cols = {dgp.modifier};
  if (cfg.participation.terms.empty())
    cfg.participation = default_raw_model(cfg.schema.covariate_cols);
  if (cfg.outcome.terms.empty()) cfg.outcome = default_raw_model(cfg.schema.covariate_cols);
  cfg.validate();
  if (!cfg.grid.have_bounds)
    throw Error(ErrorKind::Config, "validate requires explicit grid bounds");

  const long runs = config.value("runs", 100L);
  if (runs < 1) throw Error(ErrorKind::Config, "validate needs runs >= 1");
  std::uint64_t seed = config.value("seed", cfg.seed);

  Eigen::VectorXd grid = cfg.grid.make(0.0, 1.0);
  Eigen::VectorXd truth = true_cate(dgp, grid);
  if (config.contains("truth")) {
    // external truth file (grid,true_cate) must match the configured grid
    std::ifstream tin(config["truth"].get<std::string>());
    if (!tin) throw Error(ErrorKind::Io, "cannot open truth file");
    std::string line;
    std::getline(tin, line);  // header
    std::vector<double> tg, tv;
    while (std::getline(tin, line)) {
      if (line.empty()) continue;
      double a = 0.0, b = 0.0;
      if (sscanf(line.c_str(), "%lf,%lf", &a, &b) != 2)
        throw Error(ErrorKind::Data, "malformed truth file row");
      tg.push_back(a);
      tv.push_back(b);
    }
    if (static_cast<Eigen::Index>(tg.size()) != grid.size())
      throw Error(ErrorKind::Data, "truth file grid does not match the configured grid");
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      if (std::abs(tg[i] - grid[i]) > 1e-8 * (1.0 + std::abs(grid[i])))
        throw Error(ErrorKind::Data, "truth file grid does not match the configured grid");
      truth[i] = tv[i];
    }
  }
  const Eigen::Index g = grid.size();

  Eigen::MatrixXd estimates(runs, g);
  Eigen::MatrixXd pw_cover(runs, g);
  Eigen::VectorXd uni_cover(runs);

  auto run_one = [&](long r) {
    DgpSpec d = dgp;
    d.seed = mix_seed(seed, 0xD6F0000ULL + static_cast<std::uint64_t>(r));
    AnalysisConfig c = cfg;
    c.seed = mix_seed(seed, 0xA7A0000ULL + static_cast<std::uint64_t>(r));
    CohortDataset ds = generate(d);
    AnalysisResult res = analyze(ds, c);
    const UniformBand& b = res.strata.at(0).band;
    double uni = 1.0;
    for (Eigen::Index i = 0; i < g; ++i) {
      estimates(r, i) = b.estimate[i];
      pw_cover(r, i) =
          (truth[i] >= b.pointwise_low[i] && truth[i] <= b.pointwise_high[i]) ? 1.0 : 0.0;
      if (truth[i] < b.band_low[i] || truth[i] > b.band_high[i]) uni = 0.0;
    }
    uni_cover[r] = uni;
  };

  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers > 16) workers = 16;
  std::vector<std::future<void>> futures;
  std::atomic<long> next{0};
  for (unsigned wkr = 0; wkr < workers; ++wkr) {
    futures.push_back(std::async(std::launch::async, [&]() {
      for (;;) {
        long r = next.fetch_add(1);
        if (r >= runs) return;
        run_one(r);
      }
    }));
  }
  for (auto& f : futures) f.get();

  Eigen::VectorXd bias(g), rmse(g), pw_rate(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    double mean = estimates.col(i).mean();
    bias[i] = mean - truth[i];
    rmse[i] = std::sqrt((estimates.col(i).array() - truth[i]).square().mean());
    pw_rate[i] = pw_cover.col(i).mean();
  }
  double grid_mae = bias.array().abs().mean();
  double uniform_coverage = uni_cover.mean();
  // pointwise coverage checked at three interior points (quartile indices)
  Eigen::Index q1 = g / 4, q2 = g / 2, q3 = (3 * g) / 4;
  if (q3 >= g) q3 = g - 1;

  ValidationThresholds th;
  if (config.contains("thresholds")) {
    const json& tj = config["thresholds"];
    th.max_grid_mae = tj.value("max_grid_mae", -1.0);
    th.pointwise_coverage_min = tj.value("pointwise_coverage_min", -1.0);
    th.pointwise_coverage_max = tj.value("pointwise_coverage_max", 2.0);
    th.uniform_coverage_min = tj.value("uniform_coverage_min", -1.0);
  }

  int failed = 0;
  json checks = json::array();
  auto check = [&](const std::string& name, double value, bool pass, bool enabled) {
    if (!enabled) return;
    if (!pass) ++failed;
    checks.push_back(json{{"name", name}, {"value", value}, {"pass", pass}});
  };
  check("max_grid_mae", grid_mae, grid_mae <= th.max_grid_mae, th.max_grid_mae >= 0.0);
  for (Eigen::Index q : {q1, q2, q3}) {
    check("pointwise_coverage@" + fmt(grid[q]), pw_rate[q],
          pw_rate[q] >= th.pointwise_coverage_min && pw_rate[q] <= th.pointwise_coverage_max,
          th.pointwise_coverage_min >= 0.0);
  }
  check("uniform_coverage", uniform_coverage,
        uniform_coverage >= th.uniform_coverage_min, th.uniform_coverage_min >= 0.0);

  std::filesystem::create_directories(out_dir);
  std::filesystem::path dir(out_dir);
  std::ostringstream vcsv;
  vcsv << "grid,truth,mean_estimate,bias,rmse,pointwise_coverage\n";
  for (Eigen::Index i = 0; i < g; ++i) {
    vcsv << fmt(grid[i]) << ',' << fmt(truth[i]) << ',' << fmt(truth[i] + bias[i]) << ','
         << fmt(bias[i]) << ',' << fmt(rmse[i]) << ',' << fmt(pw_rate[i]) << '\n';
  }
  write_file(dir / "validation.csv", vcsv.str());

  json report;
  report["tool"] = "cate";
  report["version"] = kVersion;
  report["command"] = "validate";
  report["runs"] = runs;
  report["seed"] = seed;
  report["dgp"] = dgp_to_json(dgp);
  report["config"] = analysis_config_to_json(cfg);
  report["grid_mae"] = grid_mae;
  report["uniform_coverage"] = uniform_coverage;
  report["checks"] = checks;
  report["failed"] = failed;
  write_file(dir / "report.json", report.dump(2) + "\n");
  return failed;
}

}  // namespace cate
