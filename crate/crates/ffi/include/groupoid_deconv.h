#ifndef GROUPOID_DECONV_H
#define GROUPOID_DECONV_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Status codes.
 */
typedef enum GdStatus {
  GD_STATUS_OK = 0,
  /*
   Malformed input: bad JSON, invalid parameters, non-UTF-8 strings.
   */
  GD_STATUS_INVALID_ARGUMENT = 1,
  /*
   A required pointer was null.
   */
  GD_STATUS_NULL_POINTER = 2,
  /*
   The computation ran but a numerical precondition or guard failed.
   */
  GD_STATUS_NUMERICAL = 3,
  /*
   Reading or writing files failed.
   */
  GD_STATUS_IO = 4,
  /*
   An index was past the end.
   */
  GD_STATUS_OUT_OF_RANGE = 5,
  /*
   The caller's buffer is shorter than the data.
   */
  GD_STATUS_BUFFER_TOO_SMALL = 6,
  /*
   Internal panic; the library state is unaffected but the call failed.
   */
  GD_STATUS_PANIC = 7,
} GdStatus;

/*
 Which grid function of a factorization to fetch.
 */
typedef enum GdFactor {
  /*
   Convolution kernel `f_i`.
   */
  GD_FACTOR_KERNEL = 0,
  /*
   Second factor `psi_i`.
   */
  GD_FACTOR_PSI = 1,
  /*
   `phi - sum f_i * psi_i`; the index is ignored.
   */
  GD_FACTOR_RESIDUAL = 2,
} GdFactor;

/*
 The result of a factorization.
 */
typedef struct GdFactorization GdFactorization;

/*
 A sampled function on a one- or two-dimensional grid.
 */
typedef struct GdGridFn GdGridFn;

/*
 A groupoid instance with its sampling grids.
 */
typedef struct GdInstance GdInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the last failed call on this thread, or null. The pointer stays
 valid until the next call into the library from the same thread.
 */
const char *gd_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *gd_version(void);

/*
 Releases a string returned by the library. Null is ignored.

 # Safety
 `s` must come from this library and not have been freed.
 */
void gd_string_free(char *s);

/*
 Builds an instance from its JSON descriptor.

 # Safety
 `json` must be a NUL-terminated string; `out` must be writable.
 */
enum GdStatus gd_instance_from_json(const char *json, struct GdInstance **out_instance);

/*
 # Safety
 `instance` must come from [`gd_instance_from_json`] and not have been freed.
 */
void gd_instance_free(struct GdInstance *instance);

/*
 Factorizes a function on an instance. `config_json` holds the
 factorization configuration: the function spec, the factorization
 parameters and the tolerances.

 # Safety
 `instance` must be a live handle, `config_json` a NUL-terminated string and
 `out_result` writable.
 */
enum GdStatus gd_factorize(const struct GdInstance *instance,
                           const char *config_json,
                           struct GdFactorization **out_result);

/*
 # Safety
 `result` must come from [`gd_factorize`] and not have been freed.
 */
void gd_factorization_free(struct GdFactorization *result);

/*
 Number of pairs, sup-norm residual and whether the support certificates hold.

 # Safety
 `result` must be a live handle; each out pointer may be null to skip it.
 */
enum GdStatus gd_factorization_summary(const struct GdFactorization *result,
                                       size_t *out_pairs,
                                       double *out_residual_sup,
                                       bool *out_certificates_hold);

/*
 Copies one factor, or the residual, into a new grid function handle.

 # Safety
 `result` must be a live handle and `out_fn` writable.
 */
enum GdStatus gd_factorization_get(const struct GdFactorization *result,
                                   enum GdFactor which,
                                   size_t index,
                                   struct GdGridFn **out_fn);

/*
 Manifest of the factorization as a JSON string, judged against
 `residual_ceiling`. Release it with [`gd_string_free`].

 # Safety
 `result` must be a live handle and `out_json` writable.
 */
enum GdStatus gd_factorization_manifest_json(const struct GdFactorization *result,
                                             double residual_ceiling,
                                             char **out_json);

/*
 # Safety
 `f` must come from this library and not have been freed.
 */
void gd_gridfn_free(struct GdGridFn *f);

/*
 Dimension (1 or 2) and the number of nodes along each axis. For a
 one-dimensional function `n1` is 1. Samples are row-major with axis 0 outer.

 # Safety
 `f` must be a live handle; out pointers must be writable.
 */
enum GdStatus gd_gridfn_shape(const struct GdGridFn *f,
                              size_t *out_ndim,
                              size_t *out_n0,
                              size_t *out_n1);

/*
 First node and spacing of one axis.

 # Safety
 `f` must be a live handle; out pointers must be writable.
 */
enum GdStatus gd_gridfn_axis(const struct GdGridFn *f, size_t axis, double *out_x0, double *out_dx);

/*
 Copies the samples into `buf`, which must hold at least `n0 * n1` values.

 # Safety
 `f` must be a live handle and `buf` valid for `len` writes.
 */
enum GdStatus gd_gridfn_copy_samples(const struct GdGridFn *f, double *buf, size_t len);

/*
 Largest weak delta residual of the finite-smoothness splitting of order
 `k` with its step rising on `[cut_lo, cut_hi]`, over the fixed test set
 sampled at spacing `dx`.

 # Safety
 `out_residual` must be writable.
 */
enum GdStatus gd_ck_weak_residual(uint32_t k,
                                  double cut_lo,
                                  double cut_hi,
                                  double dx,
                                  double *out_residual);

/*
 Largest weak delta residuals of the exponential-sum splitting with `j`
 rates (growth 2) supported in `(-eps, eps)`: the exact finite form and the
 compactly supported form, over the fixed test set at spacing `dx`.

 # Safety
 Out pointers must be writable.
 */
enum GdStatus gd_dm_weak_residual(size_t j,
                                  double eps,
                                  double dx,
                                  double *out_exact,
                                  double *out_cutoff);

/*
 Runs a command configuration (the JSON accepted by the command line
 `run --config`) and writes its outputs to the configured directory.
 `out_pass` receives the command's own acceptance verdict.

 # Safety
 `config_json` must be a NUL-terminated string; `out_pass` may be null.
 */
enum GdStatus gd_run_config_json(const char *config_json, bool *out_pass);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GROUPOID_DECONV_H */
