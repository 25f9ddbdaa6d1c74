#ifndef ARNAGG_H
#define ARNAGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>

typedef enum ArnaggStatus {
  ARNAGG_STATUS_OK = 0,
  ARNAGG_STATUS_NULL_POINTER = 1,
  ARNAGG_STATUS_INVALID_ARGUMENT = 2,
  ARNAGG_STATUS_DIMENSION_MISMATCH = 3,
  ARNAGG_STATUS_NOT_STOCHASTIC = 4,
  ARNAGG_STATUS_PARSE = 5,
  ARNAGG_STATUS_IO = 6,
  ARNAGG_STATUS_NO_CONVERGENCE = 7,
  ARNAGG_STATUS_COMPLEX_STATIONARY = 8,
  ARNAGG_STATUS_MISSING_STATIONARY = 9,
  ARNAGG_STATUS_DEGENERATE = 10,
  ARNAGG_STATUS_PANIC = 11,
} ArnaggStatus;

typedef enum ArnaggMethod {
  ARNAGG_METHOD_CGS = 0,
  ARNAGG_METHOD_MGS = 1,
  ARNAGG_METHOD_CGS2 = 2,
  ARNAGG_METHOD_MGS2 = 3,
  ARNAGG_METHOD_CGSIR = 4,
  ARNAGG_METHOD_MGSIR = 5,
} ArnaggMethod;

typedef enum ArnaggPolicy {
  ARNAGG_POLICY_NEVER = 0,
  ARNAGG_POLICY_CONDITIONAL = 1,
  ARNAGG_POLICY_ALWAYS = 2,
} ArnaggPolicy;

/**
 * Opaque aggregation `(Pi, A, pi0)` with an optional stationary vector.
 */
typedef struct ArnaggAggregation ArnaggAggregation;

/**
 * Opaque row-stochastic matrix.
 */
typedef struct ArnaggMatrix ArnaggMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into the library from the same thread.
 */
const char *arnagg_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *arnagg_version(void);

/**
 * Builds a chain from an `n x n` row-major array.
 *
 * # Safety
 * `data` must point to `n * n` doubles and `out` to writable storage.
 */
enum ArnaggStatus arnagg_matrix_from_dense(const double *data, size_t n, struct ArnaggMatrix **out);

/**
 * Builds a chain from CSR arrays (`row_ptr` has `n + 1` entries).
 *
 * # Safety
 * `row_ptr` must hold `n + 1` entries, `col_idx` and `values` `nnz` each.
 */
enum ArnaggStatus arnagg_matrix_from_csr(size_t n,
                                         const size_t *row_ptr,
                                         const size_t *col_idx,
                                         const double *values,
                                         size_t nnz,
                                         struct ArnaggMatrix **out);

/**
 * Loads a chain from a Matrix Market or CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum ArnaggStatus arnagg_matrix_load(const char *path, struct ArnaggMatrix **out);

/**
 * Uniformizes an `n x n` generator; `gamma <= 0` selects the largest exit rate.
 *
 * # Safety
 * `data` must point to `n * n` doubles.
 */
enum ArnaggStatus arnagg_matrix_uniformize(const double *data,
                                           size_t n,
                                           double gamma,
                                           struct ArnaggMatrix **out);

/**
 * The three-state chain on which both error bounds are tight. Its initial
 * vector is written to `p0_out` (3 values) when non-NULL.
 *
 * # Safety
 * `p0_out` must be NULL or hold 3 doubles.
 */
enum ArnaggStatus arnagg_matrix_counterexample(double epsilon,
                                               struct ArnaggMatrix **out,
                                               double *p0_out);

/**
 * # Safety
 * `m` must be NULL or a handle returned by this library, not yet freed.
 */
void arnagg_matrix_free(struct ArnaggMatrix *m);

/**
 * Number of states, or 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t arnagg_matrix_dim(const struct ArnaggMatrix *m);

/**
 * `p_k = p0 P^k` into `out` (`n` values).
 *
 * # Safety
 * `p0` and `out` must hold `n` doubles each.
 */
enum ArnaggStatus arnagg_transient(const struct ArnaggMatrix *m,
                                   const double *p0,
                                   size_t n,
                                   size_t k,
                                   double *out,
                                   size_t out_len);

/**
 * Arnoldi aggregation of the given size; with `stationary` set the aggregated
 * stationary vector and convergence criterion are computed as well.
 *
 * # Safety
 * `p0` must hold `n` doubles, `m` must be a live handle.
 */
enum ArnaggStatus arnagg_aggregate(const struct ArnaggMatrix *m,
                                   const double *p0,
                                   size_t n,
                                   size_t size,
                                   enum ArnaggMethod method,
                                   bool stationary,
                                   struct ArnaggAggregation **out);

/**
 * Grows the aggregation in steps of `step_size` until the convergence
 * criterion drops to `epsilon` or `max_size` is reached.
 *
 * # Safety
 * `p0` must hold `n` doubles, `m` must be a live handle.
 */
enum ArnaggStatus arnagg_aggregate_dynamic(const struct ArnaggMatrix *m,
                                           const double *p0,
                                           size_t n,
                                           size_t max_size,
                                           double epsilon,
                                           size_t step_size,
                                           enum ArnaggMethod method,
                                           struct ArnaggAggregation **out);

/**
 * # Safety
 * `a` must be NULL or a handle returned by this library, not yet freed.
 */
void arnagg_aggregation_free(struct ArnaggAggregation *a);

/**
 * Aggregated size `m`, or 0 for NULL.
 *
 * # Safety
 * `a` must be NULL or a live handle.
 */
size_t arnagg_aggregation_size(const struct ArnaggAggregation *a);

/**
 * Copies `Pi` (`m x m`, row-major).
 *
 * # Safety
 * `out` must hold `out_len` doubles.
 */
enum ArnaggStatus arnagg_aggregation_pi(const struct ArnaggAggregation *a,
                                        double *out,
                                        size_t out_len);

/**
 * Copies `A` (`m x n`, row-major).
 *
 * # Safety
 * `out` must hold `out_len` doubles.
 */
enum ArnaggStatus arnagg_aggregation_a(const struct ArnaggAggregation *a,
                                       double *out,
                                       size_t out_len);

/**
 * Copies `pi0` (`m` values).
 *
 * # Safety
 * `out` must hold `out_len` doubles.
 */
enum ArnaggStatus arnagg_aggregation_pi0(const struct ArnaggAggregation *a,
                                         double *out,
                                         size_t out_len);

/**
 * Copies the disaggregated stationary vector `pi^T A` (`n` values).
 *
 * # Safety
 * `out` must hold `out_len` doubles.
 */
enum ArnaggStatus arnagg_aggregation_stationary(const struct ArnaggAggregation *a,
                                                double *out,
                                                size_t out_len);

/**
 * Convergence criterion of an aggregation built with a stationary vector.
 *
 * # Safety
 * `out` must point to one double.
 */
enum ArnaggStatus arnagg_aggregation_criterion(const struct ArnaggAggregation *a, double *out);

/**
 * Error `||p~_k - p_k||_1` and both bounds at the ascending steps `ks`.
 * Each non-NULL output receives `ks_len` values.
 *
 * # Safety
 * `p0` must hold `n` doubles, `ks` `ks_len` entries, and every non-NULL
 * output `ks_len` doubles.
 */
enum ArnaggStatus arnagg_error_trace(const struct ArnaggMatrix *m,
                                     const double *p0,
                                     size_t n,
                                     const struct ArnaggAggregation *a,
                                     const size_t *ks,
                                     size_t ks_len,
                                     enum ArnaggPolicy policy,
                                     double *e_k,
                                     double *bound_specific,
                                     double *bound_general);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ARNAGG_H */
