#ifndef SUSY_SIGMA_H
#define SUSY_SIGMA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SsStatus {
  SS_STATUS_OK = 0,
  SS_STATUS_NULL_POINTER = 1,
  SS_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed graph or tower JSON.
   */
  SS_STATUS_FIXTURE = 3,
  /**
   * Argument outside the domain of the operation (lengths, signs, ...).
   */
  SS_STATUS_DOMAIN = 4,
  /**
   * Invalid sampler or check configuration.
   */
  SS_STATUS_CONFIG = 5,
  SS_STATUS_UNKNOWN_CHECK = 6,
  /**
   * The check ran but did not pass; the report is still returned.
   */
  SS_STATUS_CHECK_FAILED = 7,
  SS_STATUS_INTERNAL = 8,
  SS_STATUS_PANIC = 9,
} SsStatus;

/**
 * Opaque graph handle.
 */
typedef struct SsGraph SsGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread (empty if none).  The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *ss_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ss_version(void);

/**
 * Parse a graph from its JSON description
 * (`{"vertices": [...], "pinned": "...", "edges": [{"i", "j", "w"}]}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SsStatus ss_graph_from_json(const char *json, struct SsGraph **out);

/**
 * Release a graph handle.  Passing null is a no-op.
 *
 * # Safety
 * `g` must come from [`ss_graph_from_json`] and not be used afterwards.
 */
void ss_graph_free(struct SsGraph *g);

/**
 * Number of free (non-pinned) vertices.
 *
 * # Safety
 * `g` must be a live handle and `out` a valid pointer.
 */
enum SsStatus ss_graph_n_free(const struct SsGraph *g, size_t *out);

/**
 * Closed-form Laplace transform for per-vertex parameters `a[i] > 0`, `b[i]`
 * over the `n` free vertices (in JSON order).
 *
 * # Safety
 * `a`, `b` must point to `n` doubles; `out` must be valid.
 */
enum SsStatus ss_laplace(const struct SsGraph *g,
                         const double *a,
                         const double *b,
                         size_t n,
                         double *out);

/**
 * `log ρ^W(u, s)` for fields on the `n` free vertices.
 *
 * # Safety
 * `u`, `s` must point to `n` doubles; `out` must be valid.
 */
enum SsStatus ss_log_rho(const struct SsGraph *g,
                         const double *u,
                         const double *s,
                         size_t n,
                         double *out);

/**
 * Run a registered check and return its JSON report in `*out_json`.
 *
 * `graph` may be null to use the bundled fixtures.  Returns
 * [`SsStatus::CheckFailed`] (with the report still set) when the verdict
 * is a failure.
 *
 * # Safety
 * `id` must be a NUL-terminated string, `graph` null or a live handle and
 * `out_json` a valid pointer.  Release the report with [`ss_string_free`].
 */
enum SsStatus ss_run_check(const char *id,
                           const struct SsGraph *graph,
                           size_t n_samples,
                           uint64_t seed,
                           char **out_json);

/**
 * Release a string returned by the library.  Passing null is a no-op.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ss_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUSY_SIGMA_H */
