#ifndef COUNTREG_H
#define COUNTREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum CrStatus {
  CR_OK = 0,
  CR_NULL_POINTER = 1,
  CR_INVALID_ARGUMENT = 2,
  CR_IO = 3,
  CR_PARSE = 4,
  CR_DOMAIN = 5,
  CR_SPEC = 6,
  CR_NUMERICAL = 7,
  CR_BUFFER_TOO_SMALL = 8,
  CR_PANIC = 99,
} CrStatus;

typedef enum CrFamily {
  CR_POISSON = 0,
  CR_NB = 1,
  CR_ZINB = 2,
} CrFamily;

/**
 * A loaded dataset.
 */
typedef struct CrDataset CrDataset;

/**
 * A fitted model.
 */
typedef struct CrFit CrFit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next `cr_*` call on the same thread.
 */
const char *cr_last_error_message(void);

/**
 * Loads a CSV file under `schema` (`name:type,...`).
 *
 * # Safety
 * `path` and `schema` must be NUL-terminated strings; `out` must be writable.
 */
enum CrStatus cr_dataset_load_csv(const char *path, const char *schema, struct CrDataset **out);

/**
 * # Safety
 * `ds` must come from `cr_dataset_load_csv` and not be used afterwards.
 */
void cr_dataset_free(struct CrDataset *ds);

/**
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_dataset_n_rows(const struct CrDataset *ds, size_t *out);

/**
 * Rows removed by listwise deletion while loading.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_dataset_dropped_rows(const struct CrDataset *ds, size_t *out);

/**
 * Fits a model. Covariate lists are comma separated and may be null.
 * A fit that stops without converging still succeeds; check
 * `cr_fit_converged`.
 *
 * # Safety
 * `ds` must be a live handle, string arguments NUL-terminated or null where
 * allowed, and `out` writable.
 */
enum CrStatus cr_fit(const struct CrDataset *ds,
                     enum CrFamily family,
                     const char *response,
                     const char *count_covariates,
                     const char *zero_covariates,
                     struct CrFit **out);

/**
 * # Safety
 * `fit` must come from `cr_fit` and not be used afterwards.
 */
void cr_fit_free(struct CrFit *fit);

/**
 * Copies the flat estimate vector `[beta, gamma, log_tau]` into `buf`.
 * `len_out` always receives the required length; pass a null `buf` to
 * query it.
 *
 * # Safety
 * `fit` must be a live handle, `buf` valid for `capacity` doubles or null,
 * `len_out` writable.
 */
enum CrStatus cr_fit_estimates(const struct CrFit *fit,
                               double *buf,
                               size_t capacity,
                               size_t *len_out);

/**
 * # Safety
 * `fit` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_fit_log_likelihood(const struct CrFit *fit, double *out);

/**
 * # Safety
 * `fit` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_fit_aic(const struct CrFit *fit, double *out);

/**
 * Writes 1 if the optimizer converged, else 0.
 *
 * # Safety
 * `fit` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_fit_converged(const struct CrFit *fit, int *out);

/**
 * Serializes the fit as JSON. Release the string with `cr_string_free`.
 *
 * # Safety
 * `fit` must be a live handle; `out` must be writable.
 */
enum CrStatus cr_fit_to_json(const struct CrFit *fit, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void cr_string_free(char *s);

/**
 * # Safety
 * `out` must be writable.
 */
enum CrStatus cr_nb_log_pmf(uint64_t y, double lambda, double tau, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CrStatus cr_zinb_log_pmf(uint64_t y, double lambda, double tau, double p, double *out);

/**
 * Upper tail of the chi-square distribution.
 *
 * # Safety
 * `out` must be writable.
 */
enum CrStatus cr_chi_square_sf(double x, uint32_t df, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUNTREG_H */
