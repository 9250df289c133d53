#ifndef CONEWALK_H
#define CONEWALK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a C API call.
 */
typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_INVALID_CONE = 3,
  CW_STATUS_INVALID_MODEL = 4,
  CW_STATUS_DIMENSION_MISMATCH = 5,
  CW_STATUS_NON_LATTICE_MODEL = 6,
  CW_STATUS_BUDGET_EXCEEDED = 7,
  CW_STATUS_SOLVER_FAILURE = 8,
  CW_STATUS_UNSUPPORTED = 9,
  CW_STATUS_PANIC = 10,
  CW_STATUS_OTHER = 11,
} CwStatus;

/**
 * Opaque cone handle.
 */
typedef struct CwCone CwCone;

/**
 * Opaque chain-model handle.
 */
typedef struct CwModel CwModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing call.
 */
const char *cw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cw_version(void);

enum CwStatus cw_cone_new_half_line(struct CwCone **out);

enum CwStatus cw_cone_new_half_space(size_t d, struct CwCone **out);

enum CwStatus cw_cone_new_wedge(double omega_radians, struct CwCone **out);

enum CwStatus cw_cone_new_orthant(size_t d, struct CwCone **out);

enum CwStatus cw_cone_new_circular(double theta0_radians, struct CwCone **out);

/**
 * Cone from its JSON description, e.g. `{"variant":"wedge2d","omega_radians":2.0}`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
enum CwStatus cw_cone_from_json(const char *json, struct CwCone **out);

/**
 * # Safety
 * `cone` must be null or a handle from a `cw_cone_*` constructor, not yet freed.
 */
void cw_cone_free(struct CwCone *cone);

/**
 * Ambient dimension, or 0 for a null handle.
 *
 * # Safety
 * `cone` must be null or a live handle.
 */
size_t cw_cone_dim(const struct CwCone *cone);

/**
 * Homogeneity exponent `p` of the cone's harmonic function.
 *
 * # Safety
 * `cone` must be a live handle and `out` writable.
 */
enum CwStatus cw_cone_exponent(const struct CwCone *cone, double *out);

/**
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum CwStatus cw_cone_contains(const struct CwCone *cone, const double *x, size_t len, bool *out);

/**
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum CwStatus cw_cone_boundary_distance(const struct CwCone *cone,
                                        const double *x,
                                        size_t len,
                                        double *out);

/**
 * # Safety
 * `x` must point to `len` doubles; `out` must be writable.
 */
enum CwStatus cw_cone_harmonic_u(const struct CwCone *cone,
                                 const double *x,
                                 size_t len,
                                 double *out);

enum CwStatus cw_model_new_lattice(size_t dim, struct CwModel **out);

enum CwStatus cw_model_new_gaussian(size_t dim, struct CwModel **out);

enum CwStatus cw_model_new_heavy_tail(size_t dim, double a, struct CwModel **out);

/**
 * Model from its JSON description, e.g. `{"variant":"iid_lattice","dim":2}`.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string.
 */
enum CwStatus cw_model_from_json(const char *json, struct CwModel **out);

/**
 * # Safety
 * `model` must be null or a handle from a `cw_model_*` constructor, not yet freed.
 */
void cw_model_free(struct CwModel *model);

/**
 * State dimension, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t cw_model_dim(const struct CwModel *model);

/**
 * Monte Carlo survival `P̂_x(τ > n)` and its standard error at each of the `n_len` times in `n`
 * (strictly increasing). `p_hat` and `se` must hold `n_len` doubles. Output is independent of
 * `threads` (0 = all cores).
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum CwStatus cw_estimate_survival(const struct CwModel *model,
                                   const struct CwCone *cone,
                                   const double *x0,
                                   size_t x0_len,
                                   const uint64_t *n,
                                   size_t n_len,
                                   uint64_t paths,
                                   uint64_t seed,
                                   size_t threads,
                                   double *p_hat,
                                   double *se);

/**
 * Exact survival `P_x(τ > n)` for `n = 0..=n_max` of the product simple random walk started at
 * the lattice point `x0`. `survival` must hold `n_max + 1` doubles; `killed_u` may be null,
 * otherwise it receives `E_x[u(X(n)); τ > n]` for the same `n`. A `memory_cap_bytes` of 0 selects
 * the default cap.
 *
 * # Safety
 * All non-null pointers must be valid for the stated lengths.
 */
enum CwStatus cw_dp_survival(const struct CwModel *model,
                             const struct CwCone *cone,
                             const int64_t *x0,
                             size_t x0_len,
                             size_t n_max,
                             uint64_t memory_cap_bytes,
                             double *survival,
                             double *killed_u);

/**
 * Survival of Brownian motion started at height `x > 0` above a hyperplane, up to time `t > 0`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CwStatus cw_bm_halfspace_survival(double x, double t, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONEWALK_H */
