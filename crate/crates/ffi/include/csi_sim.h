#ifndef CSI_SIM_H
#define CSI_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Outcome of a call.
 */
typedef enum CsiStatus {
  CSI_STATUS_OK = 0,
  CSI_STATUS_NULL_POINTER = 1,
  CSI_STATUS_INVALID_UTF8 = 2,
  CSI_STATUS_USAGE = 3,
  CSI_STATUS_INPUT = 4,
  CSI_STATUS_INVALID_CONFIG = 5,
  CSI_STATUS_INVALID_ARGUMENT = 6,
  CSI_STATUS_INSUFFICIENT_DATA = 7,
  CSI_STATUS_DEGENERATE = 8,
  CSI_STATUS_OUT_OF_RANGE = 9,
  CSI_STATUS_PANIC = 10,
} CsiStatus;

/**
 * Run configuration: the same keys as the command-line configuration file.
 */
typedef struct CsiConfig CsiConfig;

/**
 * Behavioral profile of one user.
 */
typedef struct CsiProfile CsiProfile;

/**
 * In-memory simulation results.
 */
typedef struct CsiResults CsiResults;

/**
 * Per-run metrics. Undefined values are NaN.
 */
typedef struct CsiResultRow {
  uint64_t scenario_id;
  double sender_similarity;
  double delivery_ratio;
  double avg_delay_s;
  uint64_t tx_overhead;
  uint64_t storage_overhead;
  uint64_t profile_exchanges;
  uint64_t delivered;
  uint64_t intended;
  double norm_delivery_ratio;
  double norm_avg_delay;
  double norm_tx_overhead;
  double norm_storage_overhead;
} CsiResultRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call on the same thread.
 */
const char *csi_last_error(void);

/**
 * Library version as a static string.
 */
const char *csi_version(void);

/**
 * A configuration with default values.
 */
struct CsiConfig *csi_config_new(void);

/**
 * # Safety
 * `cfg` must come from [`csi_config_new`] and not be used afterwards.
 */
void csi_config_free(struct CsiConfig *cfg);

/**
 * Sets one configuration key, e.g. `("th_sim", "0.8")`.
 *
 * # Safety
 * `cfg` must be a live handle; `key` and `value` nul-terminated strings.
 */
enum CsiStatus csi_config_set(struct CsiConfig *cfg, const char *key, const char *value);

/**
 * Applies a `key = value` configuration file.
 *
 * # Safety
 * `cfg` must be a live handle; `path` a nul-terminated string.
 */
enum CsiStatus csi_config_load(struct CsiConfig *cfg, const char *path);

/**
 * Writes `trace.csv` to the configured output directory.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CsiStatus csi_generate(const struct CsiConfig *cfg);

/**
 * Writes `stability.csv` and `encounter_stats.csv` to the configured output
 * directory.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CsiStatus csi_analyze(const struct CsiConfig *cfg);

/**
 * Writes `results.csv` to the configured output directory.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum CsiStatus csi_simulate(const struct CsiConfig *cfg);

/**
 * Self-similarity (`pair_correlation == false`) or pair-correlation
 * stability of the configured trace for history `d` and gap `t_gap` days.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a writable `double`.
 */
enum CsiStatus csi_stability(const struct CsiConfig *cfg,
                             uint32_t d,
                             uint32_t t_gap,
                             bool pair_correlation,
                             double *out);

/**
 * Runs the configured simulation without writing files.
 *
 * # Safety
 * `cfg` must be a live handle; `out` a writable pointer.
 */
enum CsiStatus csi_simulate_results(const struct CsiConfig *cfg, struct CsiResults **out);

/**
 * # Safety
 * `results` must come from [`csi_simulate_results`] and not be used
 * afterwards.
 */
void csi_results_free(struct CsiResults *results);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
size_t csi_results_len(const struct CsiResults *results);

/**
 * Copies row `index` into `out`.
 *
 * # Safety
 * `results` must be a live handle; `out` a writable row.
 */
enum CsiStatus csi_results_get(const struct CsiResults *results,
                               size_t index,
                               struct CsiResultRow *out);

/**
 * Protocol label of row `index`, owned by the handle; null when out of
 * range.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
const char *csi_results_protocol(const struct CsiResults *results, size_t index);

/**
 * Scenario kind (`csit` or `csid`) of row `index`, owned by the handle;
 * null when out of range.
 *
 * # Safety
 * `results` must be null or a live handle.
 */
const char *csi_results_kind(const struct CsiResults *results, size_t index);

/**
 * Profile of a row-major `rows × cols` association matrix whose rows are
 * daily location fractions. Profiles built with the same column count share
 * a location space and can be compared.
 *
 * # Safety
 * `data` must point to `rows * cols` doubles; `out` a writable pointer.
 */
enum CsiStatus csi_profile_compute(const double *data,
                                   size_t rows,
                                   size_t cols,
                                   double power_threshold,
                                   struct CsiProfile **out);

/**
 * # Safety
 * `profile` must come from [`csi_profile_compute`] and not be used
 * afterwards.
 */
void csi_profile_free(struct CsiProfile *profile);

/**
 * Number of eigen-behavior vectors kept; 0 for a null handle.
 *
 * # Safety
 * `profile` must be null or a live handle.
 */
size_t csi_profile_rank(const struct CsiProfile *profile);

/**
 * Copies up to `len` weights into `out` and returns how many were copied.
 *
 * # Safety
 * `profile` must be null or a live handle; `out` must hold `len` doubles.
 */
size_t csi_profile_weights(const struct CsiProfile *profile, double *out, size_t len);

/**
 * Similarity of two profiles in `[0, 1]`.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` a writable `double`.
 */
enum CsiStatus csi_profile_similarity(const struct CsiProfile *a,
                                      const struct CsiProfile *b,
                                      double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CSI_SIM_H */
