#ifndef VSL_FFI_H
#define VSL_FFI_H

/* Generated by cbindgen from crates/ffi/src; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum VslBasin {
  VSL_BASIN_ANY = 0,
  VSL_BASIN_AT_MOST_K1 = 1,
  VSL_BASIN_ABOVE_K1 = 2,
} VslBasin;

typedef enum VslRegime {
  VSL_REGIME_UNCONGESTED = 0,
  VSL_REGIME_CONGESTED = 1,
} VslRegime;

typedef enum VslStatus {
  VSL_STATUS_OK = 0,
  VSL_STATUS_NULL_POINTER = 1,
  /**
   * Argument outside the domain of the function, or a broken precondition.
   */
  VSL_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Invalid model or scenario configuration (including malformed JSON).
   */
  VSL_STATUS_CONFIG = 3,
  /**
   * A conservation or bounds invariant failed during a run.
   */
  VSL_STATUS_INVARIANT = 4,
  /**
   * Index past the end, or an output buffer too small.
   */
  VSL_STATUS_OUT_OF_RANGE = 5,
  VSL_STATUS_IO = 6,
  VSL_STATUS_PANIC = 7,
} VslStatus;

/**
 * Fundamental diagram plus bottleneck.
 */
typedef struct VslModel VslModel;

/**
 * A validated scenario configuration.
 */
typedef struct VslScenario VslScenario;

/**
 * The records and summary of a completed run.
 */
typedef struct VslTrace VslTrace;

typedef struct VslConstants {
  double k_c;
  double k_1;
  double k_2;
  double k_3;
  double v_1;
  double v_2;
} VslConstants;

typedef struct VslEquilibrium {
  double k_star;
  double u_star;
  double g_star;
  enum VslRegime regime;
  enum VslBasin basin;
} VslEquilibrium;

typedef struct VslStepRecord {
  double t;
  double k_obs;
  double u;
  double f;
  double g;
  double lambda;
  double d_minus;
  double r;
  /**
   * Number of cell densities available through [`vsl_trace_field`].
   */
  size_t n_cells;
} VslStepRecord;

typedef struct VslSummary {
  size_t steps;
  /**
   * NaN when no vehicle departed.
   */
  double avg_travel_time;
  double total_arrivals;
  double total_departures;
  double late_mean_discharge;
  double late_min_discharge;
  double late_max_discharge;
  double late_mean_k_obs;
  size_t capacity_drop_steps;
  size_t late_capacity_drop_steps;
  double max_step_conservation_error;
  double max_cumulative_conservation_error;
} VslSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message; see [`VslStatus`].
 * Returns the message length (excluding the terminator) regardless of
 * whether it fit.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t vsl_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vsl_version(void);

/**
 * # Safety
 * `out` must be a valid pointer; the handle written there is owned by the caller.
 */
enum VslStatus vsl_model_new(double v_f,
                             double w,
                             double k_j,
                             double capacity,
                             double delta,
                             struct VslModel **out);

/**
 * The reference parameter set (v_f 30, w 35/8, k_j 2/7, C 6/11, delta 0.2).
 *
 * # Safety
 * As [`vsl_model_new`].
 */
enum VslStatus vsl_model_reference(struct VslModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void vsl_model_free(struct VslModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_model_constants(const struct VslModel *model, struct VslConstants *out);

/**
 * Bottleneck discharge at density `k`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_model_discharge(const struct VslModel *model, double k, double *out);

/**
 * Speed-limited in-flux for demand `d_minus`, limit `u` and downstream density `k`.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_model_inflow(const struct VslModel *model,
                                double d_minus,
                                double u,
                                double k,
                                double *out);

/**
 * Equilibria under a constant speed limit. At most two exist; pass `cap >= 2`
 * to be safe. `count_out` receives the number found even when `cap` is too small.
 *
 * # Safety
 * `out` must point to `cap` writable elements; `count_out` must be valid.
 */
enum VslStatus vsl_model_open_loop_equilibria(const struct VslModel *model,
                                              double d_minus,
                                              double u_star,
                                              struct VslEquilibrium *out,
                                              size_t cap,
                                              size_t *count_out);

/**
 * Parses and validates a scenario from NUL-terminated UTF-8 JSON.
 *
 * # Safety
 * `json` must be a valid C string and `out` a valid pointer.
 */
enum VslStatus vsl_scenario_from_json(const char *json, struct VslScenario **out);

/**
 * # Safety
 * `scenario` must be null or a live handle.
 */
void vsl_scenario_free(struct VslScenario *scenario);

/**
 * # Safety
 * `scenario` must be a live handle.
 */
enum VslStatus vsl_scenario_set_seed(struct VslScenario *scenario, uint64_t seed);

/**
 * Runs the scenario to its horizon, keeping the full trace.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_scenario_run(const struct VslScenario *scenario, struct VslTrace **out);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
void vsl_trace_free(struct VslTrace *trace);

/**
 * Number of step records (0 for a null handle).
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t vsl_trace_len(const struct VslTrace *trace);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_trace_record(const struct VslTrace *trace,
                                size_t index,
                                struct VslStepRecord *out);

/**
 * Copies the cell densities of record `index` into `out` (capacity `cap`).
 *
 * # Safety
 * `trace` must be a live handle and `out` must point to `cap` writable doubles.
 */
enum VslStatus vsl_trace_field(const struct VslTrace *trace, size_t index, double *out, size_t cap);

/**
 * # Safety
 * `trace` must be a live handle and `out` a valid pointer.
 */
enum VslStatus vsl_trace_summary(const struct VslTrace *trace, struct VslSummary *out);

/**
 * Full summary as JSON; see [`copy_str`] semantics for `buf`, `cap`, `len_out`.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must be null or point to `cap`
 * writable bytes; `len_out` must be null or valid.
 */
enum VslStatus vsl_trace_summary_json(const struct VslTrace *trace,
                                      char *buf,
                                      size_t cap,
                                      size_t *len_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VSL_FFI_H */
