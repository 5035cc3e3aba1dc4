#ifndef THERMOBEAM_H
#define THERMOBEAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum {
  TB_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  TB_STATUS_NULL_POINTER = 1,
  /**
   * Config text was not UTF-8, or a key or value was rejected.
   */
  TB_STATUS_CONFIG = 2,
  /**
   * An argument is outside the operation's domain (length, time step, ...).
   */
  TB_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Factorization, eigensolver or time stepping failed.
   */
  TB_STATUS_NUMERICAL = 4,
  /**
   * The caller's buffer is too short; the required length was written.
   */
  TB_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * A Rust panic was caught at the boundary.
   */
  TB_STATUS_INTERNAL = 6,
} TbStatus;

/**
 * Opaque model handle.
 */
typedef struct TbSystem TbSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the next failing
 * call on the same thread.
 */
const char *tb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * Builds a model from flat TOML (`params.*`, `law.*`, `bcs`, `mesh.*`, `thermal`).
 * An empty string gives the default model.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be writable.
 */
TbStatus tb_system_new(const char *config_toml, TbSystem **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sys` must be null or a handle from `tb_system_new` not yet freed.
 */
void tb_system_free(TbSystem *sys);

/**
 * Length of a state vector.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
TbStatus tb_system_dim(const TbSystem *sys, size_t *out);

/**
 * Largest real part of the generator spectrum.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
TbStatus tb_spectral_abscissa(const TbSystem *sys, double *out);

/**
 * Copies all eigenvalues, sorted by decreasing real part, into `re` and `im`.
 * `len` receives the count; when `capacity` is smaller nothing is copied and
 * `TB_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `re` and `im` must be valid for `capacity` writes; `len` must be writable.
 */
TbStatus tb_eigenvalues(const TbSystem *sys, double *re, double *im, size_t capacity, size_t *len);

/**
 * Energy-norm `‖(iλ − A)⁻¹‖`. When `iλ` is numerically an eigenvalue the result is the
 * finite cap `1e12 / ‖A‖` in whitened coordinates.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
TbStatus tb_resolvent_norm(const TbSystem *sys, double lambda, double *out);

/**
 * Energy `½‖U‖²` of a state.
 *
 * # Safety
 * `state` must be valid for `len` reads; `out` must be writable.
 */
TbStatus tb_energy(const TbSystem *sys, const double *state, size_t len, double *out);

/**
 * Dissipation rate `-dE/dt` of a state.
 *
 * # Safety
 * `state` must be valid for `len` reads; `out` must be writable.
 */
TbStatus tb_dissipation(const TbSystem *sys, const double *state, size_t len, double *out);

/**
 * Writes `U̇` for the state `U` into `out` (both of length `len`).
 *
 * # Safety
 * `state` must be valid for `len` reads and `out` for `len` writes.
 */
TbStatus tb_apply_generator(const TbSystem *sys, const double *state, size_t len, double *out);

/**
 * Integrates from `state` over `[0, t_final]` with the implicit midpoint rule, overwriting
 * `state` with the final state. `energy_final` receives `E(t_final)`; `decay_rate`, when
 * non-null, receives the fitted energy decay exponent or NaN if the history admits no fit.
 *
 * # Safety
 * `state` must be valid for `len` reads and writes; `energy_final` must be writable.
 */
TbStatus tb_simulate(const TbSystem *sys,
                     double *state,
                     size_t len,
                     double dt,
                     double t_final,
                     double *energy_final,
                     double *decay_rate);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THERMOBEAM_H */
