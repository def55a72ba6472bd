#ifndef WMCS_H
#define WMCS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every exported function.
typedef enum WmcsStatus {
  WMCS_STATUS_OK = 0,
  // A required pointer argument was null.
  WMCS_STATUS_NULL_POINTER = 1,
  // An argument was out of range or otherwise unusable.
  WMCS_STATUS_INVALID_ARGUMENT = 2,
  // The data do not support the requested computation (too few
  // observations, non-convergence, degenerate variance, ...).
  WMCS_STATUS_STATISTICAL = 3,
  // Malformed JSON or text input.
  WMCS_STATUS_PARSE = 4,
  WMCS_STATUS_IO = 5,
  // A Rust panic was caught at the boundary.
  WMCS_STATUS_PANIC = 6,
} WmcsStatus;

// Which distance [`wmcs_distance`] computes.
typedef enum WmcsDistance {
  WMCS_DISTANCE_HELLINGER = 0,
  WMCS_DISTANCE_L2 = 1,
  // `KL(first ‖ second)`.
  WMCS_DISTANCE_KULLBACK_LEIBLER = 2,
} WmcsDistance;

// A fitted model confidence set.
typedef struct WmcsConfidenceSet WmcsConfidenceSet;

// A validated sample of observations.
typedef struct WmcsDataset WmcsDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null if there was none.
// The pointer stays valid until the next failing call on the same thread.
const char *wmcs_last_error(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must be null or a pointer obtained from this library and not yet freed.
void wmcs_string_free(char *s);

// Copies `len` observations into a new dataset.
//
// # Safety
// `values` must point to `len` readable doubles; `out` must be writable.
enum WmcsStatus wmcs_dataset_new(const double *values, size_t len, struct WmcsDataset **out);

// # Safety
// `data` must be null or a live handle from [`wmcs_dataset_new`].
void wmcs_dataset_free(struct WmcsDataset *data);

// # Safety
// `data` must be a live dataset handle; `out` must be writable.
enum WmcsStatus wmcs_dataset_len(const struct WmcsDataset *data, size_t *out);

// Empirical distribution function `#{x_i ≤ t} / n`.
//
// # Safety
// `data` must be a live dataset handle; `out` must be writable.
enum WmcsStatus wmcs_ecdf(const struct WmcsDataset *data, double t, double *out);

// Critical value of the pairwise tests for `k` candidates at level `alpha`.
//
// # Safety
// `out` must be writable.
enum WmcsStatus wmcs_critical_value(double alpha, size_t k, double *out);

// Largest per-region level keeping the overall level at `alpha` over `m` regions.
//
// # Safety
// `out` must be writable.
enum WmcsStatus wmcs_beta_budget(double alpha, size_t m, double *out);

// Mixing weight maximizing the sample mean of `ln(a f + (1 − a) g)`, given
// the two component densities evaluated at each observation.
//
// # Safety
// `f_vals` and `g_vals` must each point to `len` readable doubles; `out`
// must be writable.
enum WmcsStatus wmcs_optimal_alpha(const double *f_vals,
                                   const double *g_vals,
                                   size_t len,
                                   double *out);

// Fits one model (a JSON model object) and returns the fit as JSON.
//
// # Safety
// `data` must be a live dataset handle, `model_json` a NUL-terminated
// string and `out` writable.
enum WmcsStatus wmcs_fit_json(const struct WmcsDataset *data, const char *model_json, char **out);

// Confidence set over the candidates in `models_json`, either an array of
// model objects or `{"models": [...]}`.
//
// # Safety
// `data` must be a live dataset handle, `models_json` a NUL-terminated
// string and `out` writable.
enum WmcsStatus wmcs_mcs_new(const struct WmcsDataset *data,
                             const char *models_json,
                             double alpha,
                             struct WmcsConfidenceSet **out);

// Local confidence set on `(lower, upper]` over the families named in
// `families_json`, e.g. `["normal", "laplace"]`.
//
// # Safety
// `data` must be a live dataset handle, `families_json` a NUL-terminated
// string and `out` writable.
enum WmcsStatus wmcs_local_mcs_new(const struct WmcsDataset *data,
                                   const char *families_json,
                                   double lower,
                                   double upper,
                                   double alpha,
                                   struct WmcsConfidenceSet **out);

// # Safety
// `set` must be null or a live confidence set handle.
void wmcs_mcs_free(struct WmcsConfidenceSet *set);

// Number of candidates that were fitted and tested. Indices below refer to
// this list, in input order with failed candidates removed.
//
// # Safety
// `set` must be a live confidence set handle; `out` must be writable.
enum WmcsStatus wmcs_mcs_model_count(const struct WmcsConfidenceSet *set, size_t *out);

// # Safety
// `set` must be a live confidence set handle; `out` must be writable.
enum WmcsStatus wmcs_mcs_member_count(const struct WmcsConfidenceSet *set, size_t *out);

// # Safety
// `set` must be a live confidence set handle; `out` must be writable.
enum WmcsStatus wmcs_mcs_is_member(const struct WmcsConfidenceSet *set, size_t index, bool *out);

// Smallest pairwise statistic of model `index`; `+inf` when it was the
// only fitted candidate.
//
// # Safety
// `set` must be a live confidence set handle; `out` must be writable.
enum WmcsStatus wmcs_mcs_min_t(const struct WmcsConfidenceSet *set, size_t index, double *out);

// Full confidence set as JSON, in the command-line tool's format.
//
// # Safety
// `set` must be a live confidence set handle; `out` must be writable.
enum WmcsStatus wmcs_mcs_to_json(const struct WmcsConfidenceSet *set, char **out);

// Mixture confidence set over the partition `(−∞, partition]`,
// `(partition, ∞)` as JSON. `beta` may be NaN for the largest admissible
// per-region level. `reference_json` is null or a model object to measure
// distances against.
//
// # Safety
// `data` must be a live dataset handle, the string arguments NUL-terminated
// (`reference_json` may be null) and `out` writable.
enum WmcsStatus wmcs_mixture_mcs_json(const struct WmcsDataset *data,
                                      const char *lower_families_json,
                                      const char *upper_families_json,
                                      double partition,
                                      double alpha,
                                      double beta,
                                      const char *reference_json,
                                      char **out);

// Distance between two fixed models given as JSON model objects.
//
// # Safety
// Both strings must be NUL-terminated; `out` must be writable.
enum WmcsStatus wmcs_distance(const char *first_json,
                              const char *second_json,
                              enum WmcsDistance kind,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WMCS_H */
