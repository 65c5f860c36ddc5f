#ifndef CLIFFHAM_H
#define CLIFFHAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

typedef enum CliffhamStatus {
  CLIFFHAM_STATUS_OK = 0,
  CLIFFHAM_STATUS_NULL_POINTER = 1,
  CLIFFHAM_STATUS_INVALID_ARGUMENT = 2,
  CLIFFHAM_STATUS_PARSE = 3,
  CLIFFHAM_STATUS_DOMAIN = 4,
  CLIFFHAM_STATUS_DIVERGENCE = 5,
  CLIFFHAM_STATUS_ABORTED = 6,
  CLIFFHAM_STATUS_IO = 7,
  CLIFFHAM_STATUS_VERIFY_FAILED = 8,
  CLIFFHAM_STATUS_PANIC = 9,
} CliffhamStatus;

// A parsed Hamiltonian.
typedef struct CliffhamExpr CliffhamExpr;

// An integrated trajectory.
typedef struct CliffhamTrajectory CliffhamTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. The pointer is
// valid until the next `cliffham_*` call on the same thread.
const char *cliffham_last_error_message(void);

// Parses `source` as a Hamiltonian on `R^{8n}`.
//
// # Safety
// `source` must be a NUL-terminated string and `out` a writable pointer.
enum CliffhamStatus cliffham_expr_parse(const char *source, size_t n, struct CliffhamExpr **out);

// # Safety
// `expr` must be NULL or a pointer from [`cliffham_expr_parse`] not yet freed.
void cliffham_expr_free(struct CliffhamExpr *expr);

// Dimension `8n` of the state space of `expr`, or 0 for NULL.
//
// # Safety
// `expr` must be NULL or a live handle.
size_t cliffham_expr_dim(const struct CliffhamExpr *expr);

// Evaluates `H(x)`.
//
// # Safety
// `expr` must be a live handle, `x` must point to `len` doubles and `out`
// to one writable double.
enum CliffhamStatus cliffham_expr_eval(const struct CliffhamExpr *expr,
                                       const double *x,
                                       size_t len,
                                       double *out);

// Writes `∇H(x)` (8n values) to `out`.
//
// # Safety
// As [`cliffham_expr_eval`], with `out` pointing to `out_len` doubles.
enum CliffhamStatus cliffham_expr_grad(const struct CliffhamExpr *expr,
                                       const double *x,
                                       size_t len,
                                       double *out,
                                       size_t out_len);

// Writes the Hamiltonian vector field of `expr` for structure
// `structure` (1, 2 or 3) at `x` to `out`.
//
// # Safety
// As [`cliffham_expr_grad`].
enum CliffhamStatus cliffham_hamiltonian_field(const struct CliffhamExpr *expr,
                                               uint32_t structure,
                                               const double *x,
                                               size_t len,
                                               double *out,
                                               size_t out_len);

// Image of `block` (0..7) under structure `structure`: target block and
// sign (+1 or -1).
//
// # Safety
// `target` and `sign` must be writable.
enum CliffhamStatus cliffham_structure_entry(uint32_t structure,
                                             uint8_t block,
                                             uint8_t *target,
                                             int8_t *sign);

// Integrates the JSON configuration `config_json`.
//
// On [`CliffhamStatus::Aborted`] `*out` still receives the partial
// trajectory, flagged invalid; on other failures it is set to NULL.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out` writable.
enum CliffhamStatus cliffham_simulate(const char *config_json, struct CliffhamTrajectory **out);

// # Safety
// `traj` must be NULL or a pointer from [`cliffham_simulate`] not yet freed.
void cliffham_trajectory_free(struct CliffhamTrajectory *traj);

// Number of samples, or 0 for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
size_t cliffham_trajectory_len(const struct CliffhamTrajectory *traj);

// State dimension `8n`, or 0 for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
size_t cliffham_trajectory_dim(const struct CliffhamTrajectory *traj);

// False for NULL and for trajectories cut short by an error.
//
// # Safety
// `traj` must be NULL or a live handle.
bool cliffham_trajectory_is_valid(const struct CliffhamTrajectory *traj);

// Copies sample `index`: time, state (into `x`, `x_len` ≥ 8n) and energy.
//
// # Safety
// `traj` must be a live handle; `t`, `energy` writable; `x` must point to
// `x_len` doubles.
enum CliffhamStatus cliffham_trajectory_sample(const struct CliffhamTrajectory *traj,
                                               size_t index,
                                               double *t,
                                               double *x,
                                               size_t x_len,
                                               double *energy);

// `max |H(x_t) - H(x_0)|` over the trajectory; NaN for NULL.
//
// # Safety
// `traj` must be NULL or a live handle.
double cliffham_trajectory_energy_drift(const struct CliffhamTrajectory *traj);

// Writes the trajectory as CSV to `path`.
//
// # Safety
// `traj` must be a live handle and `path` a NUL-terminated string.
enum CliffhamStatus cliffham_trajectory_write_csv(const struct CliffhamTrajectory *traj,
                                                  const char *path);

// Runs the certification catalog for the `ns_len` values in `ns`.
// Returns [`CliffhamStatus::VerifyFailed`] if any check fails and stores
// the number of failed checks in `failed` when it is not NULL.
//
// # Safety
// `ns` must point to `ns_len` values; `failed` must be NULL or writable.
enum CliffhamStatus cliffham_verify(const size_t *ns,
                                    size_t ns_len,
                                    uint64_t seed,
                                    size_t points,
                                    uint32_t *failed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CLIFFHAM_H */
