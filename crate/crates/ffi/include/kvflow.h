#ifndef KVFLOW_H
#define KVFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code of every fallible call.
 */
typedef enum KvStatus {
  KV_STATUS_OK = 0,
  KV_STATUS_NULL_POINTER = 1,
  KV_STATUS_INVALID_ARGUMENT = 2,
  KV_STATUS_DIMENSION_MISMATCH = 3,
  KV_STATUS_INVALID_GEOMETRY = 4,
  KV_STATUS_NON_CONVERGENCE = 5,
  KV_STATUS_INSTABILITY = 6,
  KV_STATUS_IO = 7,
  KV_STATUS_PANIC = 8,
} KvStatus;

/**
 * A vector field: nodal components, node-major.
 */
typedef struct KvField KvField;

/**
 * A discretized closed manifold.
 */
typedef struct KvManifold KvManifold;

/**
 * The assembled flow operator of one manifold.
 */
typedef struct KvOperator KvOperator;

/**
 * Result of [`kv_flow_run`] besides the final field.
 */
typedef struct KvRunSummary {
  /**
   * 0 converged, 2 instability, 3 not converged at t_end.
   */
  int32_t exit_code;
  double t_final;
  size_t steps;
  double frak_l_initial;
  double frak_l_final;
} KvRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL, so a
 * call with `len == 0` sizes the buffer.
 *
 * # Safety
 * `buf` must be NULL or valid for `len` bytes.
 */
size_t kv_last_error_message(char *buf, size_t len);

/**
 * Build a manifold. `kind` is one of `unit_sphere_s2`, `flat_torus_t2`,
 * `perturbed_torus`, `unit_sphere_s3`; `perturbation` is ignored except for
 * the perturbed torus.
 *
 * # Safety
 * `kind` must be a NUL-terminated string, `resolution` valid for `len`
 * values, `out` a valid pointer.
 */
enum KvStatus kv_manifold_new(const char *kind,
                              const size_t *resolution,
                              size_t len,
                              double perturbation,
                              struct KvManifold **out);

/**
 * # Safety
 * `m` must be NULL or a handle from [`kv_manifold_new`] not yet freed.
 */
void kv_manifold_free(struct KvManifold *m);

/**
 * Chart dimension, 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t kv_manifold_dim(const struct KvManifold *m);

/**
 * Grid node count, 0 for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
size_t kv_manifold_node_count(const struct KvManifold *m);

/**
 * Riemannian volume, NaN for NULL.
 *
 * # Safety
 * `m` must be NULL or a live handle.
 */
double kv_manifold_volume(const struct KvManifold *m);

/**
 * Assemble the flow operator. The operator does not borrow the manifold.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum KvStatus kv_operator_new(const struct KvManifold *m, struct KvOperator **out);

/**
 * # Safety
 * `op` must be NULL or a handle from [`kv_operator_new`] not yet freed.
 */
void kv_operator_free(struct KvOperator *op);

/**
 * Degrees of freedom (dim × nodes), 0 for NULL.
 *
 * # Safety
 * `op` must be NULL or a live handle.
 */
size_t kv_operator_dofs(const struct KvOperator *op);

/**
 * y = L_h x. `x` and `y` must not overlap.
 *
 * # Safety
 * `x` and `y` must be valid for `len` doubles.
 */
enum KvStatus kv_operator_apply(const struct KvOperator *op,
                                const double *x,
                                double *y,
                                size_t len);

/**
 * The discrete deformation energy of `x`.
 *
 * # Safety
 * `x` must be valid for `len` doubles and `out` a valid pointer.
 */
enum KvStatus kv_operator_frak_l(const struct KvOperator *op,
                                 const double *x,
                                 size_t len,
                                 double *out);

/**
 * Copy `len = dim × nodes` node-major values into a new field.
 *
 * # Safety
 * `data` must be valid for `len` doubles and `out` a valid pointer.
 */
enum KvStatus kv_field_from_data(const struct KvManifold *m,
                                 const double *data,
                                 size_t len,
                                 struct KvField **out);

/**
 * Seeded band-limited random field of unit L² norm.
 *
 * # Safety
 * `m` must be a live handle and `out` a valid pointer.
 */
enum KvStatus kv_field_random(const struct KvManifold *m, uint64_t seed, struct KvField **out);

/**
 * # Safety
 * `x` must be NULL or a field handle not yet freed.
 */
void kv_field_free(struct KvField *x);

/**
 * Number of values in the field, 0 for NULL.
 *
 * # Safety
 * `x` must be NULL or a live handle.
 */
size_t kv_field_len(const struct KvField *x);

/**
 * Copy the field values into `buf`; `len` must equal [`kv_field_len`].
 *
 * # Safety
 * `buf` must be valid for `len` doubles.
 */
enum KvStatus kv_field_copy(const struct KvField *x, double *buf, size_t len);

/**
 * Integrate `x0` to `t_end` (≤ 0 selects the spectral-gap default).
 * `variant` is `main`, `normalized`, `bochner_yano` or `navier_stokes`;
 * `integrator` is `euler`, `rk4` or `rkl2`. An instability or a run that
 * has not converged still returns `KV_STATUS_OK` with the last valid field;
 * inspect `summary->exit_code`.
 *
 * # Safety
 * All handles must be live, strings NUL-terminated, `out` and `summary`
 * valid pointers (`summary` may be NULL).
 */
enum KvStatus kv_flow_run(const struct KvManifold *m,
                          const struct KvOperator *op,
                          const struct KvField *x0,
                          const char *variant,
                          const char *integrator,
                          double t_end,
                          double dt_safety,
                          struct KvField **out,
                          struct KvRunSummary *summary);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KVFLOW_H */
