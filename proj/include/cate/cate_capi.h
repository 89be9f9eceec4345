/* C interface to the CATE estimation library.
 *
 * All functions return a cate_status; on failure the thread-local
 * message from cate_last_error() describes the problem. Objects are
 * opaque handles owned by the caller and released with the matching
 * _free function. Configuration crosses the boundary as JSON text; the
 * accepted documents are described in the project README.
 */

#ifndef CATE_CAPI_H
#define CATE_CAPI_H

#include <stddef.h>

#ifdef _WIN32
#define CATE_API __declspec(dllexport)
#else
#define CATE_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  CATE_OK = 0,
  CATE_ERR_CONFIG = 1,
  CATE_ERR_DATA = 2,
  CATE_ERR_NUMERIC = 3,
  CATE_ERR_IO = 4,
  CATE_ERR_INVALID_ARGUMENT = 5
} cate_status;

CATE_API const char* cate_version(void);

/* Message for the most recent failure on this thread. */
CATE_API const char* cate_last_error(void);

/* ---- datasets ---- */

typedef struct cate_dataset cate_dataset;

/* schema_json: {"s":..,"a":..,"y":..,"modifiers":[..],"covariates":[..]} */
CATE_API cate_status cate_dataset_load(const char* csv_path, const char* schema_json,
                                       cate_dataset** out);
CATE_API cate_status cate_dataset_info(const cate_dataset* ds, long* n_rows,
                                       long* n_trial, long* n_dropped);
CATE_API void cate_dataset_free(cate_dataset* ds);

/* ---- in-memory analysis ---- */

typedef struct cate_result cate_result;

/* Columns of a fitted band, in file order. */
typedef enum {
  CATE_COL_GRID = 0,
  CATE_COL_ESTIMATE = 1,
  CATE_COL_SE = 2,
  CATE_COL_PW_LOW = 3,
  CATE_COL_PW_HIGH = 4,
  CATE_COL_BAND_LOW = 5,
  CATE_COL_BAND_HIGH = 6
} cate_band_column;

CATE_API cate_status cate_analyze(const cate_dataset* ds, const char* config_json,
                                  cate_result** out);
CATE_API cate_status cate_result_num_strata(const cate_result* res, long* out);
CATE_API cate_status cate_result_stratum_label(const cate_result* res, long stratum,
                                               const char** out);
CATE_API cate_status cate_result_num_points(const cate_result* res, long stratum,
                                            long* out);
/* Copies one band column into buf (length >= the point count). */
CATE_API cate_status cate_result_band(const cate_result* res, long stratum,
                                      cate_band_column column, double* buf,
                                      size_t buf_len);
CATE_API cate_status cate_result_critical_value(const cate_result* res, long stratum,
                                                double* out);
CATE_API void cate_result_free(cate_result* res);

/* ---- file-level commands (what the CLI drives) ---- */

CATE_API cate_status cate_run_analyze(const char* config_json, const char* out_dir);
CATE_API cate_status cate_run_simulate(const char* config_json, const char* out_dir);
/* n_failed receives the number of validation thresholds that failed. */
CATE_API cate_status cate_run_validate(const char* config_json, const char* out_dir,
                                       int* n_failed);

#ifdef __cplusplus
}
#endif

#endif /* CATE_CAPI_H */
