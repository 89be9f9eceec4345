#include "cate/cate_capi.h"

#include <cstring>
#include <nlohmann/json.hpp>
#include <string>

#include "cate/error.hpp"
#include "cate/pipeline.hpp"

using nlohmann::json;

namespace {

thread_local std::string g_last_error;

cate_status status_of(const cate::Error& e) {
  switch (e.kind()) {
    case cate::ErrorKind::Config: return CATE_ERR_CONFIG;
    case cate::ErrorKind::Data: return CATE_ERR_DATA;
    case cate::ErrorKind::Numeric: return CATE_ERR_NUMERIC;
    case cate::ErrorKind::Io: return CATE_ERR_IO;
  }
  return CATE_ERR_INVALID_ARGUMENT;
}

template <typename Fn>
cate_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const cate::Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const json::exception& e) {
    g_last_error = std::string("invalid JSON: ") + e.what();
    return CATE_ERR_CONFIG;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CATE_ERR_NUMERIC;
  }
}

json parse_config(const char* config_json) {
  try {
    return json::parse(config_json);
  } catch (const json::exception& e) {
    throw cate::Error(cate::ErrorKind::Config, std::string("invalid JSON: ") + e.what());
  }
}

}  // namespace

struct cate_dataset {
  cate::CohortDataset ds;
};

struct cate_result {
  cate::AnalysisResult res;
};

extern "C" {

const char* cate_version(void) { return cate::kVersion; }

const char* cate_last_error(void) { return g_last_error.c_str(); }

cate_status cate_dataset_load(const char* csv_path, const char* schema_json,
                              cate_dataset** out) {
  if (!csv_path || !schema_json || !out) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() {
    json sj = parse_config(schema_json);
    json wrapped = {{"schema", sj}};
    cate::AnalysisConfig cfg = cate::analysis_config_from_json(wrapped);
    auto* handle = new cate_dataset{cate::load_cohort_file(csv_path, cfg.schema)};
    *out = handle;
    return CATE_OK;
  });
}

cate_status cate_dataset_info(const cate_dataset* ds, long* n_rows, long* n_trial,
                              long* n_dropped) {
  if (!ds) {
    g_last_error = "null dataset";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  if (n_rows) *n_rows = static_cast<long>(ds->ds.n_rows());
  if (n_trial) *n_trial = ds->ds.n_trial();
  if (n_dropped) *n_dropped = ds->ds.dropped_missing;
  return CATE_OK;
}

void cate_dataset_free(cate_dataset* ds) { delete ds; }

cate_status cate_analyze(const cate_dataset* ds, const char* config_json,
                         cate_result** out) {
  if (!ds || !config_json || !out) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  *out = nullptr;
  return guarded([&]() {
    cate::AnalysisConfig cfg = cate::analysis_config_from_json(parse_config(config_json));
    if (cfg.schema.modifier_cols.empty())
      cfg.schema.modifier_cols = ds->ds.effect_modifier_columns;
    auto* handle = new cate_result{cate::analyze(ds->ds, cfg)};
    *out = handle;
    return CATE_OK;
  });
}

cate_status cate_result_num_strata(const cate_result* res, long* out) {
  if (!res || !out) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  *out = static_cast<long>(res->res.strata.size());
  return CATE_OK;
}

static const cate::StratumResult* stratum_at(const cate_result* res, long stratum) {
  if (!res || stratum < 0 || stratum >= static_cast<long>(res->res.strata.size())) {
    g_last_error = "stratum index out of range";
    return nullptr;
  }
  return &res->res.strata[stratum];
}

cate_status cate_result_stratum_label(const cate_result* res, long stratum,
                                      const char** out) {
  const cate::StratumResult* st = stratum_at(res, stratum);
  if (!st || !out) return CATE_ERR_INVALID_ARGUMENT;
  *out = st->label.c_str();
  return CATE_OK;
}

cate_status cate_result_num_points(const cate_result* res, long stratum, long* out) {
  const cate::StratumResult* st = stratum_at(res, stratum);
  if (!st || !out) return CATE_ERR_INVALID_ARGUMENT;
  *out = static_cast<long>(st->band.grid.size());
  return CATE_OK;
}

cate_status cate_result_band(const cate_result* res, long stratum,
                             cate_band_column column, double* buf, size_t buf_len) {
  const cate::StratumResult* st = stratum_at(res, stratum);
  if (!st || !buf) return CATE_ERR_INVALID_ARGUMENT;
  const cate::UniformBand& b = st->band;
  const Eigen::VectorXd* col = nullptr;
  switch (column) {
    case CATE_COL_GRID: col = &b.grid; break;
    case CATE_COL_ESTIMATE: col = &b.estimate; break;
    case CATE_COL_SE: col = &b.se; break;
    case CATE_COL_PW_LOW: col = &b.pointwise_low; break;
    case CATE_COL_PW_HIGH: col = &b.pointwise_high; break;
    case CATE_COL_BAND_LOW: col = &b.band_low; break;
    case CATE_COL_BAND_HIGH: col = &b.band_high; break;
  }
  if (!col) {
    g_last_error = "unknown band column";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  if (buf_len < static_cast<size_t>(col->size())) {
    g_last_error = "buffer too small";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(buf, col->data(), sizeof(double) * col->size());
  return CATE_OK;
}

cate_status cate_result_critical_value(const cate_result* res, long stratum,
                                       double* out) {
  const cate::StratumResult* st = stratum_at(res, stratum);
  if (!st || !out) return CATE_ERR_INVALID_ARGUMENT;
  *out = st->band.critical_value;
  return CATE_OK;
}

void cate_result_free(cate_result* res) { delete res; }

cate_status cate_run_analyze(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    cate::cmd_analyze(parse_config(config_json), out_dir);
    return CATE_OK;
  });
}

cate_status cate_run_simulate(const char* config_json, const char* out_dir) {
  if (!config_json || !out_dir) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    cate::cmd_simulate(parse_config(config_json), out_dir);
    return CATE_OK;
  });
}

cate_status cate_run_validate(const char* config_json, const char* out_dir,
                              int* n_failed) {
  if (!config_json || !out_dir) {
    g_last_error = "null argument";
    return CATE_ERR_INVALID_ARGUMENT;
  }
  return guarded([&]() {
    int failed = cate::cmd_validate(parse_config(config_json), out_dir);
    if (n_failed) *n_failed = failed;
    return CATE_OK;
  });
}

}  // extern "C"
