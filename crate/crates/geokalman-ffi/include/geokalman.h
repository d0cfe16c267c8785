#ifndef GEOKALMAN_H
#define GEOKALMAN_H

/* Generated by cbindgen from crates/geokalman-ffi; do not edit by hand.          */
/* Regenerate with: cbindgen --crate geokalman-ffi --output include/geokalman.h */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of a C-API call.
typedef enum GkStatus {
  // The call succeeded.
  GK_STATUS_OK = 0,
  // A required pointer argument was null.
  GK_STATUS_NULL_POINTER = 1,
  // An argument value is invalid (unknown name, unsupported dimension,
  // out-of-range parameter).
  GK_STATUS_INVALID_ARGUMENT = 2,
  // A buffer length does not match the manifold's ambient length.
  GK_STATUS_BAD_LENGTH = 3,
  // The operation failed numerically (domain violation, singular
  // matrix, diverging iteration).
  GK_STATUS_NUMERICAL_ERROR = 4,
  // A string argument is not valid UTF-8.
  GK_STATUS_UTF8_ERROR = 5,
  // Writing the experiment outputs failed.
  GK_STATUS_IO_ERROR = 6,
  // An unexpected internal failure; the library state is unchanged.
  GK_STATUS_INTERNAL_ERROR = 7,
} GkStatus;

// Opaque manifold handle.
typedef struct GkManifold GkManifold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Euclidean space R^n.
struct GkManifold *gk_manifold_euclidean(size_t n);

// Unit sphere S^n embedded in R^{n+1}.
struct GkManifold *gk_manifold_sphere(size_t n);

// Rotation group SO(n); returns null unless `n` is 2 or 3.
struct GkManifold *gk_manifold_rotations(size_t n);

// Unit quaternion group.
struct GkManifold *gk_manifold_unit_quaternions(void);

// Special Euclidean group SE(n); returns null unless `n` is 2 or 3.
struct GkManifold *gk_manifold_special_euclidean(size_t n);

// Tangent bundle over a copy of `base`; the caller keeps ownership of
// `base`.  Returns null if `base` is null.
//
// # Safety
// `base` must be a live handle from a `gk_manifold_*` constructor.
struct GkManifold *gk_manifold_tangent_bundle(const struct GkManifold *base);

// Releases a manifold handle; null is ignored.
//
// # Safety
// `m` must be a handle returned by a `gk_manifold_*` constructor that has
// not been freed already.
void gk_manifold_free(struct GkManifold *m);

// Intrinsic dimension, or 0 if `m` is null.
//
// # Safety
// `m` must be null or a live manifold handle.
size_t gk_manifold_dim(const struct GkManifold *m);

// Length of the ambient array representation, or 0 if `m` is null.
//
// # Safety
// `m` must be null or a live manifold handle.
size_t gk_manifold_ambient_len(const struct GkManifold *m);

// Exponential map: writes `exp_p(x)` into `out`.  All three arrays have
// the manifold's ambient length.
//
// # Safety
// `m` must be a live handle; the array arguments must match their stated
// lengths.
enum GkStatus gk_exp(const struct GkManifold *m,
                     const double *p,
                     size_t p_len,
                     const double *x,
                     size_t x_len,
                     double *out,
                     size_t out_len);

// Logarithmic map: writes `log_p(q)` into `out`.
//
// # Safety
// `m` must be a live handle; the array arguments must match their stated
// lengths.
enum GkStatus gk_log(const struct GkManifold *m,
                     const double *p,
                     size_t p_len,
                     const double *q,
                     size_t q_len,
                     double *out,
                     size_t out_len);

// Parallel transport: moves the tangent `x` at `p` along the geodesic with
// initial velocity `d` and writes the transported vector into `out`.
//
// # Safety
// `m` must be a live handle; the array arguments must match their stated
// lengths.
enum GkStatus gk_parallel_transport(const struct GkManifold *m,
                                    const double *p,
                                    size_t p_len,
                                    const double *d,
                                    size_t d_len,
                                    const double *x,
                                    size_t x_len,
                                    double *out,
                                    size_t out_len);

// Geodesic distance between `p` and `q`, written into `out_distance`.
//
// # Safety
// `m` must be a live handle; the array arguments must match their stated
// lengths; `out_distance` must be writable.
enum GkStatus gk_distance(const struct GkManifold *m,
                          const double *p,
                          size_t p_len,
                          const double *q,
                          size_t q_len,
                          double *out_distance);

// Runs one benchmark experiment (`"car2d"` or `"sphere"`) with the given
// horizon, time step, seed, and adaptive-EKF forgetting factor, writing
// the three CSV files into `out_dir` (created if needed).
//
// # Safety
// `experiment` and `out_dir` must be readable NUL-terminated strings.
enum GkStatus gk_run_experiment(const char *experiment,
                                size_t steps,
                                double dt,
                                uint64_t seed,
                                double alpha,
                                const char *out_dir);

// Static human-readable description of a status code.
const char *gk_status_message(enum GkStatus status);

// Library version as a static string.
const char *gk_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GEOKALMAN_H */
