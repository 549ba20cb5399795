#ifndef PSD_BUNDLE_H
#define PSD_BUNDLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PsdbStatus {
  PSDB_STATUS_OK = 0,
  PSDB_STATUS_PARSE = 2,
  PSDB_STATUS_DOMAIN = 3,
  PSDB_STATUS_NON_CONVERGENCE = 4,
  PSDB_STATUS_NULL_POINTER = 5,
  PSDB_STATUS_PANIC = 6,
} PsdbStatus;

typedef enum PsdbSide {
  PSDB_SIDE_MINUS = 0,
  PSDB_SIDE_PLUS = 1,
} PsdbSide;

typedef enum PsdbMode {
  PSDB_MODE_CLOSED_FORM = 0,
  PSDB_MODE_OPTIMIZED_DEGENERATE = 1,
  PSDB_MODE_FAITHFUL_SAMPLED = 2,
} PsdbMode;

/**
 * Validated PSD matrix, real or complex.
 */
typedef struct PsdbMatrix PsdbMatrix;

/**
 * Metric choice plus evaluation options.
 */
typedef struct PsdbMetricSpec PsdbMetricSpec;

typedef struct PsdbGdResult {
  double total;
  double grassmann_term;
  double fiber_term;
  size_t stratum_index;
  int32_t mode;
} PsdbGdResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a real matrix from `n * n` row-major entries. `tol_psd <= 0` selects
 * the default PSD tolerance.
 *
 * # Safety
 * `data` must point to `n * n` readable doubles and `out` must be writable.
 */
enum PsdbStatus psdb_matrix_new(const double *data,
                                size_t n,
                                double tol_psd,
                                struct PsdbMatrix **out);

/**
 * Builds a complex Hermitian matrix from `2 * n * n` row-major doubles,
 * real and imaginary parts interleaved.
 *
 * # Safety
 * `data` must point to `2 * n * n` readable doubles and `out` must be writable.
 */
enum PsdbStatus psdb_matrix_new_complex(const double *data,
                                        size_t n,
                                        double tol_psd,
                                        struct PsdbMatrix **out);

/**
 * Parses one matrix in the `psdm <field> <n>` text format.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` must be writable.
 */
enum PsdbStatus psdb_matrix_parse(const char *text, struct PsdbMatrix **out);

/**
 * # Safety
 * `m` must be null or a handle from this library that has not been freed.
 */
void psdb_matrix_free(struct PsdbMatrix *m);

/**
 * Side length of the matrix, 0 for a null handle.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
size_t psdb_matrix_dim(const struct PsdbMatrix *m);

/**
 * 1 for complex matrices, 0 for real ones.
 *
 * # Safety
 * `m` must be null or a live handle.
 */
int32_t psdb_matrix_is_complex(const struct PsdbMatrix *m);

/**
 * Numerical rank with relative threshold `tol` (`<= 0` selects the default).
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum PsdbStatus psdb_matrix_rank(const struct PsdbMatrix *m, double tol, size_t *out);

/**
 * Parses a metric from names such as `"geodesic"`, `"kl"` or `"ab:0.5,0.5+sym"`.
 * A null `hausdorff` selects `algorithm1`.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum PsdbStatus psdb_spec_new(const char *grassmann,
                              const char *fiber,
                              const char *hausdorff,
                              struct PsdbMetricSpec **out);

/**
 * Overrides restarts, faithful-mode grid size and seed. Zero keeps the
 * current restarts or grid.
 *
 * # Safety
 * `spec` must be a live handle.
 */
enum PsdbStatus psdb_spec_configure(struct PsdbMetricSpec *spec,
                                    size_t restarts,
                                    size_t grid,
                                    uint64_t seed);

/**
 * # Safety
 * `spec` must be null or a handle from this library that has not been freed.
 */
void psdb_spec_free(struct PsdbMetricSpec *spec);

/**
 * Geometric distance between `a` and `b`. `mode` in the result holds a
 * `PsdbMode` value.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum PsdbStatus psdb_gd(const struct PsdbMatrix *a,
                        const struct PsdbMatrix *b,
                        const struct PsdbMetricSpec *spec,
                        struct PsdbGdResult *out);

/**
 * Full result as a JSON string; release it with [`psdb_string_free`].
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
enum PsdbStatus psdb_gd_json(const struct PsdbMatrix *a,
                             const struct PsdbMatrix *b,
                             const struct PsdbMetricSpec *spec,
                             char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void psdb_string_free(char *s);

/**
 * Writes the `count x count` row-major distance matrix of `items` to `out`.
 *
 * # Safety
 * `items` must hold `count` live handles of one field; `out` must have room
 * for `count * count` doubles.
 */
enum PsdbStatus psdb_pairwise(const struct PsdbMatrix *const *items,
                              size_t count,
                              const struct PsdbMetricSpec *spec,
                              double *out);

/**
 * Point-set divergence between PD `c` (`r x r`) and PD `d` (`s x s`), both
 * row-major with `r <= s`. If `witness` is non-null it receives the optimal
 * `r x r` projection (minus) or `s x s` lift (plus), row-major.
 *
 * # Safety
 * `c`, `d` must point to `r * r` and `s * s` doubles; `value` must be
 * writable; `witness`, when non-null, must have room for the witness.
 */
enum PsdbStatus psdb_pointset(const char *fiber,
                              const double *c,
                              size_t r,
                              const double *d,
                              size_t s,
                              enum PsdbSide side,
                              double *value,
                              double *witness);

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *psdb_last_error_message(void);

const char *psdb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PSD_BUNDLE_H */
