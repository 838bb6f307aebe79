#ifndef SQUEEZEKIT_H
#define SQUEEZEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SkStatus {
  SK_STATUS_OK = 0,
  SK_STATUS_NULL_POINTER = 1,
  SK_STATUS_INVALID_ARGUMENT = 2,
  SK_STATUS_CAPACITY = 3,
  SK_STATUS_NUMERICAL = 4,
  SK_STATUS_DEGENERATE_BLOCH_VECTOR = 5,
  SK_STATUS_PANIC = 6,
  SK_STATUS_OTHER = 7,
} SkStatus;

/**
 * Interaction matrix of a filled geometry, with its Ising spectrum.
 */
typedef struct SkLattice SkLattice;

/**
 * `2^N` state vector.
 */
typedef struct SkState SkState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sk_version(void);

/**
 * Copy the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t sk_last_error_message(char *buf, size_t len);

/**
 * `rows × cols` square lattice with unit spacing.
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum SkStatus sk_lattice_square(size_t rows,
                                size_t cols,
                                double r_c_over_a,
                                double v0,
                                struct SkLattice **out);

/**
 * Open chain of `n` sites with unit spacing.
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum SkStatus sk_lattice_chain(size_t n, double r_c_over_a, double v0, struct SkLattice **out);

/**
 * Number of atoms, or 0 for a null handle.
 *
 * # Safety
 * `lattice` must be null or a live handle.
 */
size_t sk_lattice_n_atoms(const struct SkLattice *lattice);

/**
 * Coupling `V_ij`; NaN for a null handle or out-of-range indices.
 *
 * # Safety
 * `lattice` must be null or a live handle.
 */
double sk_lattice_coupling(const struct SkLattice *lattice, size_t i, size_t j);

/**
 * # Safety
 * `lattice` must be null or a handle not yet freed.
 */
void sk_lattice_free(struct SkLattice *lattice);

/**
 * `|↑_x⟩^⊗n`.
 *
 * # Safety
 * `out` must be null or valid for writing one pointer.
 */
enum SkStatus sk_state_coherent_x(size_t n, struct SkState **out);

/**
 * Apply the layered circuit with `len = 3n` parameters `(τ, ϑ, τ′)` per layer.
 *
 * # Safety
 * Handles must be live; `params` must point to `len` doubles.
 */
enum SkStatus sk_state_apply_circuit(struct SkState *state,
                                     const struct SkLattice *lattice,
                                     const double *params,
                                     size_t len);

/**
 * Rotation-invariant squeezing parameter `ξ²`.
 *
 * # Safety
 * `state` must be live; `out` valid for one double.
 */
enum SkStatus sk_state_xi2(const struct SkState *state, double *out);

/**
 * `⟨J_x⟩, ⟨J_y⟩, ⟨J_z⟩` into `out[0..3]`.
 *
 * # Safety
 * `state` must be live; `out` valid for three doubles.
 */
enum SkStatus sk_state_mean_spin(const struct SkState *state, double *out);

/**
 * # Safety
 * `state` must be null or a handle not yet freed.
 */
void sk_state_free(struct SkState *state);

/**
 * Optimal one-axis-twisting `ξ²` for `n` atoms.
 *
 * # Safety
 * `out` must be null or valid for one double.
 */
enum SkStatus sk_oat_optimal_xi2(size_t n, double *out);

/**
 * `ξ²` of the analytic trial state for even `n`.
 *
 * # Safety
 * `out` must be null or valid for one double.
 */
enum SkStatus sk_trial_state_xi2(size_t n, double *out);

/**
 * Status name as a static NUL-terminated string.
 */
const char *sk_status_name(enum SkStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQUEEZEKIT_H */
