#ifndef GRASPGUARD_H
#define GRASPGUARD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of a C-ABI call.
 */
typedef enum GgStatus {
  GgOk = 0,
  GgNullPointer = 1,
  GgUtf8 = 2,
  GgIo = 3,
  GgParse = 4,
  GgInvalid = 5,
  GgRuntime = 6,
} GgStatus;

/**
 * Safety filter selector.
 */
typedef enum GgFilter {
  GgFilterCbf = 0,
  GgFilterRacbf = 1,
  GgFilterRcbf = 2,
  GgFilterDobcbf = 3,
} GgFilter;

/**
 * Opaque scenario handle.
 */
typedef struct GgScenario GgScenario;

/**
 * Opaque trace handle.
 */
typedef struct GgTrace GgTrace;

/**
 * One outer control step of a trace; `flags` is a bitmask
 * (1 = QP infeasible, 2 = adaptation gain condition, 4 = singular Jacobian).
 */
typedef struct GgTraceRow {
  double t;
  double p;
  double p_dot;
  double f_c;
  double f_c_est;
  double u_nom;
  double u_safe;
  double h1;
  double h2;
  double h3;
  double h_max;
  double d;
  double d_hat;
  double m_d;
  double theta_hat_k;
  double theta_hat_b;
  uint32_t flags;
} GgTraceRow;

/**
 * Per-filter summary of one run.
 */
typedef struct GgMetrics {
  double min_h1;
  double min_h2;
  double min_h3;
  double min_h_max;
  double mean_input_deviation;
  /**
   * 1 when any sampled barrier dipped below -1e-6.
   */
  uint8_t violation;
} GgMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *gg_last_error(void);

/**
 * Library version as a static string.
 */
const char *gg_version(void);

/**
 * Load a scenario from a TOML file; returns NULL on failure (see
 * [`gg_last_error`]).
 *
 * # Safety
 * `path` must be a valid NUL-terminated string.
 */
struct GgScenario *gg_scenario_load(const char *path);

/**
 * Parse a scenario from TOML text; returns NULL on failure.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string.
 */
struct GgScenario *gg_scenario_from_toml(const char *text);

/**
 * Check every scenario invariant without running.
 *
 * # Safety
 * `scenario` must be a live handle from `gg_scenario_load`/`gg_scenario_from_toml`.
 */
enum GgStatus gg_scenario_validate(const struct GgScenario *scenario);

/**
 * Release a scenario handle.
 *
 * # Safety
 * `scenario` must come from this library and not be freed twice.
 */
void gg_scenario_free(struct GgScenario *scenario);

/**
 * Run one filter over a scenario. A non-negative `seed_override` replaces
 * the scenario seed. Returns NULL on failure.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
struct GgTrace *gg_run(const struct GgScenario *scenario,
                       enum GgFilter filter,
                       int64_t seed_override);

/**
 * Number of records in a trace (zero for a null handle).
 *
 * # Safety
 * `trace` must be a live handle or NULL.
 */
size_t gg_trace_len(const struct GgTrace *trace);

/**
 * Copy record `index` into `out`.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum GgStatus gg_trace_row(const struct GgTrace *trace, size_t index, struct GgTraceRow *out);

/**
 * Summarize a trace into `out`.
 *
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum GgStatus gg_trace_metrics(const struct GgTrace *trace, struct GgMetrics *out);

/**
 * Write a trace as CSV (same format as the CLI).
 *
 * # Safety
 * `trace` must be a live handle and `path` a valid NUL-terminated string.
 */
enum GgStatus gg_trace_write_csv(const struct GgTrace *trace, const char *path);

/**
 * Release a trace handle.
 *
 * # Safety
 * `trace` must come from this library and not be freed twice.
 */
void gg_trace_free(struct GgTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRASPGUARD_H */
