#ifndef SADDLEKIT_H
#define SADDLEKIT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; the numeric values follow the command line exit codes.
 */
typedef enum SkStatus {
  SK_STATUS_OK = 0,
  /**
   * A checked property does not hold.
   */
  SK_STATUS_PROPERTY_FAILURE = 1,
  /**
   * Bad argument or configuration.
   */
  SK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Numerical failure (non-convergence, singular system, ...).
   */
  SK_STATUS_NUMERICAL = 3,
  SK_STATUS_NULL_POINTER = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  SK_STATUS_PANIC = 5,
  /**
   * The caller's buffer is too small; the required length was written.
   */
  SK_STATUS_BUFFER_TOO_SMALL = 6,
} SkStatus;

/**
 * Run configuration.
 */
typedef struct SkConfig SkConfig;

/**
 * Radial kernel together with its one-dimensional reduction (computed lazily).
 */
typedef struct SkKernel SkKernel;

/**
 * One-dimensional layer solution.
 */
typedef struct SkLayer SkLayer;

/**
 * Report of a subcommand run.
 */
typedef struct SkReport SkReport;

/**
 * Saddle-shaped solution on the lattice.
 */
typedef struct SkSaddle SkSaddle;

/**
 * Result of the ellipticity scan.
 */
typedef struct SkEllipticity {
  bool holds;
  double min_ratio;
  double max_ratio;
} SkEllipticity;

/**
 * Result of the √τ-convexity scan.
 */
typedef struct SkConvexity {
  bool strictly_convex;
  double worst;
  double tau_at_worst;
} SkConvexity;

/**
 * One row of the asymptotic table.
 */
typedef struct SkAsymptoticRow {
  double radius;
  double value;
  double gradient;
  double hessian;
} SkAsymptoticRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sk_version(void);

/**
 * Message of the last failing call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *sk_last_error_message(void);

void sk_clear_error(void);

/**
 * Preset configuration.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkStatus sk_config_default(struct SkConfig **out);

/**
 * Parses configuration text; relative paths resolve against `base_dir` (may be NULL).
 *
 * # Safety
 * `text` and `base_dir` must be NUL-terminated strings or NULL; `out` must be writable.
 */
enum SkStatus sk_config_parse(const char *text, const char *base_dir, struct SkConfig **out);

/**
 * Reads and parses a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SkStatus sk_config_load(const char *path, struct SkConfig **out);

/**
 * Overrides the seed of the randomized ensembles.
 *
 * # Safety
 * `cfg` must be a live handle from this library.
 */
enum SkStatus sk_config_set_seed(struct SkConfig *cfg, uint64_t seed);

/**
 * Hex SHA-256 of the resolved configuration, copied into `buf` (with NUL).
 *
 * # Safety
 * `cfg` must be a live handle; `buf` must hold `len` bytes.
 */
enum SkStatus sk_config_hash(const struct SkConfig *cfg, char *buf, size_t len);

/**
 * # Safety
 * `cfg` must be NULL or a handle from this library not freed before.
 */
void sk_config_free(struct SkConfig *cfg);

/**
 * Fractional Laplacian kernel c_{n,γ} r^{-n-2γ}.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkStatus sk_kernel_fractional(size_t n, double gamma, struct SkKernel **out);

/**
 * Kernel described by a configuration.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_kernel_from_config(const struct SkConfig *cfg, struct SkKernel **out);

/**
 * k(r).
 *
 * # Safety
 * `k` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_kernel_eval(const struct SkKernel *k, double r, double *out);

/**
 * Ellipticity scan on `samples` radii; `PropertyFailure` when the bounds fail.
 *
 * # Safety
 * `k` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_kernel_check_ellipticity(const struct SkKernel *k,
                                          size_t samples,
                                          struct SkEllipticity *out);

/**
 * √τ-convexity scan; `PropertyFailure` when not strictly convex.
 *
 * # Safety
 * `k` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_kernel_check_sqrt_convexity(const struct SkKernel *k,
                                             size_t grid,
                                             struct SkConvexity *out);

/**
 * One-dimensional reduction k₁(τ).
 *
 * # Safety
 * `k` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_kernel_reduce_1d(struct SkKernel *k, double tau, double *out);

/**
 * # Safety
 * `k` must be NULL or a handle from this library not freed before.
 */
void sk_kernel_free(struct SkKernel *k);

/**
 * Layer solution of the reduced kernel on [-L, L] with spacing h.
 * `nonlinearity` is `allen-cahn` or `peierls`.
 *
 * # Safety
 * `k` must be a live handle; `nonlinearity` a NUL-terminated string; `out` writable.
 */
enum SkStatus sk_layer_solve(const struct SkKernel *k,
                             const char *nonlinearity,
                             double half_length,
                             double h,
                             struct SkLayer **out);

/**
 * u₀(x), extended by the fitted tail outside [-L, L].
 *
 * # Safety
 * `layer` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_layer_eval(const struct SkLayer *layer, double x, double *out);

/**
 * Final residual ‖L u₀ - f(u₀)‖_∞.
 *
 * # Safety
 * `layer` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_layer_residual(const struct SkLayer *layer, double *out);

/**
 * # Safety
 * `layer` must be NULL or a handle from this library not freed before.
 */
void sk_layer_free(struct SkLayer *layer);

/**
 * Saddle-shaped solution for the configuration (grid, radii, kernel, f).
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_saddle_solve(const struct SkConfig *cfg, struct SkSaddle **out);

/**
 * Number of unknown nodes (lattice points of B_R ∩ O).
 *
 * # Safety
 * `s` must be a live handle.
 */
size_t sk_saddle_len(const struct SkSaddle *s);

/**
 * Copies (|x'|, |x''|, u) of the first `len` unknowns into the three arrays.
 *
 * # Safety
 * `s` must be a live handle; each array must hold `len` doubles.
 */
enum SkStatus sk_saddle_values(const struct SkSaddle *s,
                               double *sv,
                               double *tv,
                               double *uv,
                               size_t len);

/**
 * Interior residual of the final iterate.
 *
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum SkStatus sk_saddle_residual(const struct SkSaddle *s, double *out);

/**
 * Asymptotic table at `count` radii; `PropertyFailure` when a column does not
 * strictly decrease.
 *
 * # Safety
 * `s` must be a live handle; `radii` and `rows` must hold `count` entries.
 */
enum SkStatus sk_saddle_asymptotic(const struct SkSaddle *s,
                                   const double *radii,
                                   size_t count,
                                   struct SkAsymptoticRow *rows);

/**
 * # Safety
 * `s` must be NULL or a handle from this library not freed before.
 */
void sk_saddle_free(struct SkSaddle *s);

/**
 * Runs a subcommand (`kernel-check`, `layer`, `eigen`, `saddle`, `evolve`,
 * `verify`, `torsion`) writing its files into `out_dir`. `only` is a
 * comma-separated list or NULL. Returns `PropertyFailure` when a check fails;
 * the report is produced in both cases.
 *
 * # Safety
 * `cfg` must be a live handle; strings NUL-terminated (`only` may be NULL); `out` writable.
 */
enum SkStatus sk_run(const struct SkConfig *cfg,
                     const char *command,
                     const char *out_dir,
                     const char *only,
                     struct SkReport **out);

/**
 * Whether every check of the report passed.
 *
 * # Safety
 * `r` must be a live handle.
 */
bool sk_report_passed(const struct SkReport *r);

/**
 * Number of checks in the report.
 *
 * # Safety
 * `r` must be a live handle.
 */
size_t sk_report_check_count(const struct SkReport *r);

/**
 * Full text of the report; valid for the lifetime of the handle.
 *
 * # Safety
 * `r` must be a live handle.
 */
const char *sk_report_text(const struct SkReport *r);

/**
 * # Safety
 * `r` must be NULL or a handle from this library not freed before.
 */
void sk_report_free(struct SkReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SADDLEKIT_H */
