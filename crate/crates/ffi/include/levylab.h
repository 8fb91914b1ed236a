#ifndef LEVYLAB_H
#define LEVYLAB_H

/* This file is generated by cbindgen from levylab-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the numeric values 0..=3 match the CLI exit codes.
 */
typedef enum LevylabStatus {
  /**
   * Success; for experiment runs, every asserted suite passed.
   */
  LEVYLAB_OK = 0,
  /**
   * The run completed but at least one asserted suite failed.
   */
  LEVYLAB_SUITE_FAILURE = 1,
  /**
   * Invalid configuration, spec, grid or argument.
   */
  LEVYLAB_CONFIG_ERROR = 2,
  /**
   * Numerical breakdown (no density, truncation, degenerate weights).
   */
  LEVYLAB_NUMERICAL_ERROR = 3,
  /**
   * A required pointer argument was null.
   */
  LEVYLAB_NULL_POINTER = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  LEVYLAB_INVALID_UTF8 = 5,
  /**
   * An output buffer did not have the required length.
   */
  LEVYLAB_BUFFER_TOO_SMALL = 6,
} LevylabStatus;

/**
 * Opaque process-spec handle.
 */
typedef struct LevylabSpec LevylabSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library; static storage, do not free.
 */
const char *levylab_version(void);

/**
 * Copy of the last error message on this thread, or null when the last call
 * succeeded. Free with [`levylab_string_free`].
 */
char *levylab_last_error(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be null or a pointer previously returned by a levylab function
 * that documents this deallocator, not yet freed.
 */
void levylab_string_free(char *s);

/**
 * Parse a process spec from its JSON form
 * `{"drift":, "gaussian_var":, "jumps": {...}}`. Returns null on error.
 *
 * # Safety
 * `json` must be null or a valid nul-terminated C string.
 */
struct LevylabSpec *levylab_spec_parse(const char *json);

/**
 * Serialize a spec handle back to JSON. Free with [`levylab_string_free`].
 *
 * # Safety
 * `spec` must be null or a live handle from this library.
 */
char *levylab_spec_to_json(const struct LevylabSpec *spec);

/**
 * Release a spec handle.
 *
 * # Safety
 * `spec` must be null or a live handle from this library, not yet freed.
 */
void levylab_spec_free(struct LevylabSpec *spec);

/**
 * Centered copy of the spec (mean rate exactly zero). Returns a new handle.
 *
 * # Safety
 * `spec` must be null or a live handle from this library.
 */
struct LevylabSpec *levylab_spec_center(const struct LevylabSpec *spec);

/**
 * Mean rate `E[ξ_1]` of the spec.
 *
 * # Safety
 * `spec` must be null or a live handle; `out` null or writable.
 */
enum LevylabStatus levylab_spec_mean_rate(const struct LevylabSpec *spec, double *out);

/**
 * Variance rate `Var[ξ_1]` of the spec.
 *
 * # Safety
 * `spec` must be null or a live handle; `out` null or writable.
 */
enum LevylabStatus levylab_spec_variance_rate(const struct LevylabSpec *spec, double *out);

/**
 * Lévy exponent `Φ(λ)` with `E[e^{iλξ_u}] = e^{-uΦ(λ)}`, split into real
 * and imaginary parts.
 *
 * # Safety
 * `spec` must be null or a live handle; `out_re`/`out_im` null or writable.
 */
enum LevylabStatus levylab_spec_char_exponent(const struct LevylabSpec *spec,
                                              double lambda,
                                              double *out_re,
                                              double *out_im);

/**
 * Sample one path on the equispaced grid `[t0, horizon]` with `steps`
 * steps, writing `steps + 1` node values into `out_values`. The draw is the
 * counter-based stream for `(seed, path_index)`: identical inputs give
 * identical paths on any machine and thread layout.
 *
 * # Safety
 * `spec` must be null or a live handle; `out_values` must be null or point
 * to at least `out_len` writable doubles.
 */
enum LevylabStatus levylab_sample_path(const struct LevylabSpec *spec,
                                       double t0,
                                       double horizon,
                                       uintptr_t steps,
                                       double start,
                                       uint64_t seed,
                                       uint64_t path_index,
                                       double *out_values,
                                       uintptr_t out_len);

/**
 * Run a full experiment from its JSON config (same format as the CLI; see
 * the shipped schema). On success and on suite failure, `*out_report_json`
 * receives the report JSON (free with [`levylab_string_free`]); on config
 * or numerical errors it is set to null and the message is available from
 * [`levylab_last_error`].
 *
 * # Safety
 * `config_json` must be null or a valid nul-terminated C string;
 * `out_report_json` must be null or writable.
 */
enum LevylabStatus levylab_run_config(const char *config_json, char **out_report_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEVYLAB_H */
