#ifndef SVARLAB_H
#define SVARLAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SvlStatus {
  SVL_STATUS_OK = 0,
  SVL_STATUS_NULL_POINTER = 1,
  SVL_STATUS_INVALID_ARGUMENT = 2,
  SVL_STATUS_IO = 3,
  SVL_STATUS_PARSE = 4,
  SVL_STATUS_DIMENSION = 5,
  SVL_STATUS_NUMERICAL = 6,
  SVL_STATUS_INFEASIBLE = 7,
  SVL_STATUS_IDENTIFICATION = 8,
  SVL_STATUS_MISSING = 9,
  SVL_STATUS_BUFFER_TOO_SMALL = 10,
  SVL_STATUS_PANIC = 11,
} SvlStatus;

/**
 * Quarterly dataset.
 */
typedef struct SvlDataset SvlDataset;

/**
 * Accepted structural rotations.
 */
typedef struct SvlDrawSet SvlDrawSet;

/**
 * Reduced-form posterior draws.
 */
typedef struct SvlPosterior SvlPosterior;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *svl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *svl_version(void);

/**
 * Loads a dataset CSV (`date` column followed by one column per variable).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SvlStatus svl_dataset_load(const char *path, struct SvlDataset **out);

/**
 * Builds a fully observed dataset from a row-major `t x n` buffer whose
 * first row is dated `start_year`Q`start_quarter`. Variables are named
 * `v0`, `v1`, ...
 *
 * # Safety
 * `values` must hold `t * n` doubles; `out` must be writable.
 */
enum SvlStatus svl_dataset_from_values(const double *values,
                                       size_t t,
                                       size_t n,
                                       int32_t start_year,
                                       uint8_t start_quarter,
                                       struct SvlDataset **out);

/**
 * Simulates `t` quarters from the built-in five-variable ground-truth SVAR.
 * `shocks_out` (optional, may be NULL) receives the true structural shocks.
 *
 * # Safety
 * `out` must be writable; `shocks_out` must be NULL or writable.
 */
enum SvlStatus svl_simulate_paper_like(size_t t,
                                       uint64_t seed,
                                       struct SvlDataset **out,
                                       struct SvlDataset **shocks_out);

/**
 * Writes the dataset as CSV.
 *
 * # Safety
 * `data` must be a live handle and `path` a NUL-terminated string.
 */
enum SvlStatus svl_dataset_save(const struct SvlDataset *data, const char *path);

/**
 * Number of dated rows, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t svl_dataset_rows(const struct SvlDataset *data);

/**
 * Number of variables, or 0 for NULL.
 *
 * # Safety
 * `data` must be NULL or a live handle.
 */
size_t svl_dataset_cols(const struct SvlDataset *data);

/**
 * Reads one observation; `SVL_STATUS_MISSING` if it is absent.
 *
 * # Safety
 * `data` must be a live handle and `value` writable.
 */
enum SvlStatus svl_dataset_get(const struct SvlDataset *data,
                               size_t row,
                               size_t col,
                               double *value);

/**
 * # Safety
 * `data` must be NULL or a handle not freed before.
 */
void svl_dataset_free(struct SvlDataset *data);

/**
 * Log marginal likelihood of a Minnesota BVAR with intercept, own-lag prior
 * mean 0 and tightness `lambda`.
 *
 * # Safety
 * `data` must be a live handle and `out` writable.
 */
enum SvlStatus svl_log_marginal_likelihood(const struct SvlDataset *data,
                                           size_t lags,
                                           double lambda,
                                           double *out);

/**
 * Samples `draws` posterior draws. With `optimize_lambda` non-zero the
 * tightness is chosen by maximizing the marginal likelihood over
 * [0.01, 2] and `lambda` is ignored.
 *
 * # Safety
 * `data` must be a live handle and `out` writable.
 */
enum SvlStatus svl_posterior_sample(const struct SvlDataset *data,
                                    size_t lags,
                                    double lambda,
                                    bool optimize_lambda,
                                    size_t draws,
                                    uint64_t seed,
                                    struct SvlPosterior **out);

/**
 * Number of draws, or 0 for NULL.
 *
 * # Safety
 * `post` must be NULL or a live handle.
 */
size_t svl_posterior_len(const struct SvlPosterior *post);

/**
 * Tightness the posterior was sampled with, or NaN for NULL.
 *
 * # Safety
 * `post` must be NULL or a live handle.
 */
double svl_posterior_lambda(const struct SvlPosterior *post);

/**
 * Log marginal likelihood at the sampled tightness, or NaN for NULL.
 *
 * # Safety
 * `post` must be NULL or a live handle.
 */
double svl_posterior_log_ml(const struct SvlPosterior *post);

/**
 * Copies draw `index`'s residual covariance (row-major `n x n`).
 *
 * # Safety
 * `post` must be a live handle and `sigma` hold `len` doubles.
 */
enum SvlStatus svl_posterior_sigma(const struct SvlPosterior *post,
                                   size_t index,
                                   double *sigma,
                                   size_t len);

/**
 * # Safety
 * `post` must be NULL or a handle not freed before.
 */
void svl_posterior_free(struct SvlPosterior *post);

/**
 * Rotates posterior draws until `accepted` satisfy the built-in
 * five-variable sign and zero restrictions, with up to `max_tries`
 * rotations per draw. Requires a five-variable posterior.
 *
 * # Safety
 * `post` must be a live handle and `out` writable.
 */
enum SvlStatus svl_identify_paper(const struct SvlPosterior *post,
                                  size_t accepted,
                                  size_t max_tries,
                                  uint64_t seed,
                                  struct SvlDrawSet **out);

/**
 * Number of accepted draws, or 0 for NULL.
 *
 * # Safety
 * `set` must be NULL or a live handle.
 */
size_t svl_drawset_len(const struct SvlDrawSet *set);

/**
 * Copies accepted draw `index`'s impact matrix (row-major `n x n`,
 * variables by shocks).
 *
 * # Safety
 * `set` must be a live handle and `impact` hold `len` doubles.
 */
enum SvlStatus svl_drawset_impact(const struct SvlDrawSet *set,
                                  size_t index,
                                  double *impact,
                                  size_t len);

/**
 * # Safety
 * `set` must be NULL or a handle not freed before.
 */
void svl_drawset_free(struct SvlDrawSet *set);

/**
 * Pointwise median and `coverage` bands of structural impulse responses for
 * horizons 0..=`horizon`. Each buffer receives `(horizon + 1) * n * n`
 * values laid out as `[h][variable][shock]`.
 *
 * # Safety
 * Handles must be live; each buffer must hold `len` doubles.
 */
enum SvlStatus svl_irf_bands(const struct SvlPosterior *post,
                             const struct SvlDrawSet *set,
                             size_t horizon,
                             double coverage,
                             double *median,
                             double *lower,
                             double *upper,
                             size_t len);

/**
 * Logistic transition probabilities of a state series standardized by its
 * own mean and standard deviation.
 *
 * # Safety
 * `state` and `out` must each hold `len` doubles.
 */
enum SvlStatus svl_transition_prob(const double *state, size_t len, double eta, double *out);

/**
 * Newey-West (Bartlett) sandwich covariance of OLS coefficients for a
 * row-major `t x k` design and residuals; bandwidth 0 gives HC0.
 *
 * # Safety
 * `x` must hold `t * k` doubles, `resid` `t`, and `out` `k * k`.
 */
enum SvlStatus svl_newey_west(const double *x,
                              size_t t,
                              size_t k,
                              const double *resid,
                              size_t bandwidth,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SVARLAB_H */
