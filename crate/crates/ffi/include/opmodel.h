#ifndef OPMODEL_H
#define OPMODEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Which subspace a model is built on.
 */
typedef enum {
  OPM_E_MODE_KERNEL = 0,
  OPM_E_MODE_KERNEL_OMEGA = 1,
} OpmEMode;

typedef enum {
  OPM_STATUS_OK = 0,
  OPM_STATUS_NULL_POINTER = 1,
  OPM_STATUS_INVALID_UTF8 = 2,
  OPM_STATUS_SPEC = 3,
  OPM_STATUS_UNKNOWN_KEY = 4,
  OPM_STATUS_NOT_LEFT_INVERTIBLE = 5,
  OPM_STATUS_HYPOTHESIS = 6,
  OPM_STATUS_DOMAIN = 7,
  OPM_STATUS_NON_COMMUTING = 8,
  OPM_STATUS_CONFIG = 9,
  OPM_STATUS_NUMERIC = 10,
  OPM_STATUS_PANIC = 11,
  OPM_STATUS_OTHER = 12,
} OpmStatus;

/**
 * A Laurent model of a tree shift.
 */
typedef struct OpmModel OpmModel;

/**
 * A weighted shift on a directed tree.
 */
typedef struct OpmTree OpmTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into the library from the same thread.
 */
const char *opm_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void opm_string_free(char *s);

/**
 * # Safety
 * `json` must be a nul-terminated string; `out` must be writable.
 */
OpmStatus opm_tree_from_json(const char *json, OpmTree **out);

/**
 * # Safety
 * `tree` must be null or a handle from this library, not yet freed.
 */
void opm_tree_free(OpmTree *tree);

/**
 * `d(v) = Σ |λ_c|²` over the children of `key`.
 *
 * # Safety
 * Pointers must be valid; `key` nul-terminated.
 */
OpmStatus opm_tree_gram_diagonal(const OpmTree *tree, const char *key, double *out);

/**
 * Scans the Gram diagonal over `depth` levels around the base vertex.
 *
 * # Safety
 * Pointers must be valid.
 */
OpmStatus opm_tree_check_left_invertible(const OpmTree *tree,
                                         size_t depth,
                                         bool *ok,
                                         double *inf_d,
                                         double *sup_d);

/**
 * The tree carrying the Cauchy dual weights; free it separately.
 *
 * # Safety
 * Pointers must be valid.
 */
OpmStatus opm_tree_cauchy_dual(const OpmTree *tree, OpmTree **out);

/**
 * Weight of `key`; `0` for the root of a rooted tree.
 *
 * # Safety
 * Pointers must be valid; `key` nul-terminated.
 */
OpmStatus opm_tree_weight(const OpmTree *tree, const char *key, double *re, double *im);

/**
 * Product of the weights on the path from `u` down to `v`.
 *
 * # Safety
 * Pointers must be valid; keys nul-terminated.
 */
OpmStatus opm_tree_path_weight(const OpmTree *tree,
                               const char *u,
                               const char *v,
                               double *re,
                               double *im);

/**
 * Builds the model on the chosen subspace; the tree handle stays owned by
 * the caller.
 *
 * # Safety
 * Pointers must be valid.
 */
OpmStatus opm_model_new(const OpmTree *tree, OpmEMode mode, size_t depth, OpmModel **out);

/**
 * # Safety
 * `model` must be null or a handle from this library, not yet freed.
 */
void opm_model_free(OpmModel *model);

/**
 * # Safety
 * Pointers must be valid.
 */
OpmStatus opm_model_dim_e(const OpmModel *model, size_t *out);

/**
 * Laurent window of `vector_json` (`{"key": scalar, ...}`) on
 * `[-n_minus, n_plus]`, as JSON.
 *
 * # Safety
 * Pointers must be valid; the result must be released with
 * [`opm_string_free`].
 */
OpmStatus opm_model_coeffs(const OpmModel *model,
                           const char *vector_json,
                           size_t n_minus,
                           size_t n_plus,
                           char **out);

/**
 * Runs the suites of a run configuration file and returns the JSON report.
 * Failing suites are reported in the JSON, not through the status.
 *
 * # Safety
 * Pointers must be valid; the result must be released with
 * [`opm_string_free`].
 */
OpmStatus opm_verify_json(const char *config_path, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPMODEL_H */
