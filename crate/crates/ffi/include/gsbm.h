#ifndef GSBM_H
#define GSBM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsbmStatus {
  GSBM_STATUS_OK = 0,
  GSBM_STATUS_INVALID_ARGUMENT = 1,
  GSBM_STATUS_NUMERICAL = 2,
  GSBM_STATUS_IO = 3,
  GSBM_STATUS_NULL_POINTER = 4,
  GSBM_STATUS_PANIC = 5,
} GsbmStatus;

typedef enum GsbmShift {
  GSBM_SHIFT_HIDDEN_COMMUNITY = 0,
  GSBM_SHIFT_BALANCED = 1,
} GsbmShift;

typedef enum GsbmNoise {
  GSBM_NOISE_GAUSSIAN = 0,
  GSBM_NOISE_RADEMACHER = 1,
  /**
   * Centered Bernoulli entries; needs `noise_q` in (0, 1).
   */
  GSBM_NOISE_BERNOULLI = 2,
} GsbmNoise;

typedef enum GsbmEdgeMethod {
  GSBM_EDGE_METHOD_DISCRIMINANT = 0,
  GSBM_EDGE_METHOD_DENSITY_SUPPORT_SCAN = 1,
} GsbmEdgeMethod;

/**
 * Opaque dense symmetric matrix.
 */
typedef struct GsbmMatrix GsbmMatrix;

/**
 * Opaque model specification.
 */
typedef struct GsbmSpecHandle GsbmSpecHandle;

typedef struct GsbmEdge {
  double l_plus;
  double m1;
  double m_n;
  int32_t method;
  double certified_window;
} GsbmEdge;

typedef struct GsbmOutlier {
  double lambda;
  double lambda_c;
  double l_plus;
  /**
   * Outlier location; NaN when `has_outlier` is 0.
   */
  double z;
  /**
   * `z - l_plus`; NaN when `has_outlier` is 0.
   */
  double gap;
  uint8_t has_outlier;
  uint8_t marginal;
  int32_t method;
} GsbmOutlier;

typedef struct GsbmQveSolution {
  double m1_re;
  double m1_im;
  double m_n_re;
  double m_n_im;
  double m_avg_re;
  double m_avg_im;
  double residual;
  size_t iterations;
} GsbmQveSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *gsbm_last_error_message(void);

/**
 * Creates a validated spec. `n = 0` leaves the dimension unset.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GsbmStatus gsbm_spec_new(double gamma,
                              double alpha1,
                              double alpha2,
                              double theta1,
                              double theta2,
                              double lambda,
                              size_t n,
                              struct GsbmSpecHandle **out);

/**
 * Spec of a shifted and rescaled two-block Bernoulli model.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GsbmStatus gsbm_spec_from_sbm(size_t n,
                                   size_t n1,
                                   double p1,
                                   double p2,
                                   double q,
                                   int32_t shift,
                                   struct GsbmSpecHandle **out);

/**
 * Reads the spike strength stored in a spec.
 *
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_spec_lambda(const struct GsbmSpecHandle *spec, double *out);

/**
 * # Safety
 * `spec` must come from this library and not be used afterwards; null is ignored.
 */
void gsbm_spec_free(struct GsbmSpecHandle *spec);

/**
 * Samples `M = H + λuuᵀ` for a spec with its dimension set.
 *
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_matrix_sample(const struct GsbmSpecHandle *spec,
                                   int32_t noise,
                                   double noise_q,
                                   uint64_t master_seed,
                                   uint64_t stream_id,
                                   struct GsbmMatrix **out);

/**
 * Samples a shifted and rescaled Bernoulli adjacency matrix.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum GsbmStatus gsbm_matrix_sample_sbm(size_t n,
                                       size_t n1,
                                       double p1,
                                       double p2,
                                       double q,
                                       int32_t shift,
                                       uint64_t master_seed,
                                       uint64_t stream_id,
                                       struct GsbmMatrix **out);

/**
 * Dimension of a matrix; 0 for null.
 *
 * # Safety
 * `m` must be null or come from this library.
 */
size_t gsbm_matrix_dim(const struct GsbmMatrix *m);

/**
 * Entry `(i, j)` of a matrix.
 *
 * # Safety
 * `m` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_matrix_get(const struct GsbmMatrix *m, size_t i, size_t j, double *out);

/**
 * All eigenvalues in descending order; `len` must equal the dimension.
 *
 * # Safety
 * `m` must come from this library; `out` must hold `len` doubles.
 */
enum GsbmStatus gsbm_matrix_eigenvalues(const struct GsbmMatrix *m, double *out, size_t len);

/**
 * Writes the flat binary format: `n` as a little-endian u64, then the upper
 * triangle row by row as little-endian doubles.
 *
 * # Safety
 * `m` must come from this library; `path` must be a nul-terminated string.
 */
enum GsbmStatus gsbm_matrix_write_binary(const struct GsbmMatrix *m, const char *path);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards; null is ignored.
 */
void gsbm_matrix_free(struct GsbmMatrix *m);

/**
 * Upper edge of the limiting spectrum of `H`.
 *
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_find_upper_edge(const struct GsbmSpecHandle *spec, struct GsbmEdge *out);

/**
 * Predicted outlier for spike strength `lambda`.
 *
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_predict_outlier(const struct GsbmSpecHandle *spec,
                                     double lambda,
                                     struct GsbmOutlier *out);

/**
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_critical_lambda(const struct GsbmSpecHandle *spec, double *out);

/**
 * Solves the two-block vector equation at `z = z_re + i z_im`, `z_im ≥ 0`.
 *
 * # Safety
 * `spec` must come from this library; `out` must be valid for writes.
 */
enum GsbmStatus gsbm_solve_reduced(const struct GsbmSpecHandle *spec,
                                   double z_re,
                                   double z_im,
                                   double tol,
                                   struct GsbmQveSolution *out);

/**
 * Density `Im⟨m⟩(x + iη)/π` at each of the `len` grid points.
 *
 * # Safety
 * `spec` must come from this library; `grid` and `out_rho` must hold `len` doubles.
 */
enum GsbmStatus gsbm_density(const struct GsbmSpecHandle *spec,
                             const double *grid,
                             size_t len,
                             double eta,
                             double *out_rho);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum GsbmStatus gsbm_hidden_threshold(double q, double gamma, size_t n, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum GsbmStatus gsbm_unbalanced_threshold(double q, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSBM_H */
