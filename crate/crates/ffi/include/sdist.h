#ifndef SDIST_H
#define SDIST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SdistStatus {
  SDIST_STATUS_OK = 0,
  SDIST_STATUS_NULL_POINTER = 1,
  SDIST_STATUS_INVALID_PARAMS = 2,
  SDIST_STATUS_DOMAIN = 3,
  SDIST_STATUS_UNSATISFIABLE = 4,
  SDIST_STATUS_NO_CONVERGENCE = 5,
  SDIST_STATUS_INSUFFICIENT_DATA = 6,
  SDIST_STATUS_PANIC = 7,
} SdistStatus;

/**
 * Opaque distribution handle.
 */
typedef struct SdistDistribution SdistDistribution;

/**
 * Opaque sampler handle; use one per thread.
 */
typedef struct SdistSampler SdistSampler;

/**
 * `S[f0, x0, alpha, g, h]`.
 */
typedef struct SdistParams {
  double f0;
  double x0;
  double alpha;
  double g;
  double h;
} SdistParams;

typedef struct SdistFitResult {
  struct SdistParams params;
  double stage1_residual_ss;
  double stage2_residual_ss;
  /**
   * Residual of the joint refinement, NaN when it was not adopted.
   */
  double refined_residual_ss;
  size_t bins;
} SdistFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a distribution; `*out` receives the handle.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum SdistStatus sdist_new(const struct SdistParams *params, struct SdistDistribution **out);

/**
 * # Safety
 * `d` must be null or a handle from [`sdist_new`] not yet freed.
 */
void sdist_free(struct SdistDistribution *d);

/**
 * `X(F)`; `±inf` at the ends of infinite tails.
 *
 * # Safety
 * `d` must be a live handle and `out` valid for writes.
 */
enum SdistStatus sdist_quantile(const struct SdistDistribution *d, double f, double *out);

/**
 * # Safety
 * `d` must be a live handle and `out` valid for writes.
 */
enum SdistStatus sdist_cdf(const struct SdistDistribution *d, double x, double *out);

/**
 * # Safety
 * `d` must be a live handle and `out` valid for writes.
 */
enum SdistStatus sdist_pdf(const struct SdistDistribution *d, double x, double *out);

/**
 * Density as a function of the cumulative level.
 *
 * # Safety
 * `d` must be a live handle and `out` valid for writes.
 */
enum SdistStatus sdist_pdf_at_f(const struct SdistDistribution *d, double f, double *out);

/**
 * `X(0)`, or `-inf` when the left tail is infinite.
 *
 * # Safety
 * `d` must be a live handle and `out` valid for writes.
 */
enum SdistStatus sdist_left_endpoint(const struct SdistDistribution *d, double *out);

/**
 * Case number 1..6 (I..VI) and degeneracy index (`-1` when generic).
 *
 * # Safety
 * `case_out` and `index_out` must be valid for writes.
 */
enum SdistStatus sdist_classify(double g,
                                double h,
                                double deg_tol,
                                uint32_t *case_out,
                                int64_t *index_out);

/**
 * `Φ(z, 1, v)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SdistStatus sdist_lerch_phi(double z, double v, double tol, double *out);

/**
 * `X0` such that `X(f_star) = x_star`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SdistStatus sdist_solve_x0(double f_star,
                                double x_star,
                                double f0,
                                double alpha,
                                double g,
                                double h,
                                double *out);

/**
 * `alpha` such that `X(f_star) = x_star`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum SdistStatus sdist_solve_alpha(double f_star,
                                   double x_star,
                                   double f0,
                                   double x0,
                                   double g,
                                   double h,
                                   double *out);

/**
 * Sampler on stream `stream` of `seed`.
 *
 * # Safety
 * `params` and `out` must be valid pointers.
 */
enum SdistStatus sdist_sampler_new(const struct SdistParams *params,
                                   uint64_t seed,
                                   uint64_t stream,
                                   struct SdistSampler **out);

/**
 * Writes `len` draws to `buf`.
 *
 * # Safety
 * `s` must be a live sampler and `buf` valid for `len` writes.
 */
enum SdistStatus sdist_sampler_fill(struct SdistSampler *s, double *buf, size_t len);

/**
 * # Safety
 * `s` must be null or a handle from [`sdist_sampler_new`] not yet freed.
 */
void sdist_sampler_free(struct SdistSampler *s);

/**
 * Fits `len` observations; `refine = false` stops after the two-step fit.
 *
 * # Safety
 * `data` must be valid for `len` reads and `out` valid for writes.
 */
enum SdistStatus sdist_fit(const double *data, size_t len, bool refine, struct SdistFitResult *out);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the buffer size the full
 * message needs, including the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `len` writes.
 */
size_t sdist_last_error(char *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDIST_H */
