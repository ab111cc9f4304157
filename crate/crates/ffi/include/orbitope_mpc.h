#ifndef ORBITOPE_MPC_H
#define ORBITOPE_MPC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every call. The solver outcomes share their numbers with the
 * command-line exit codes.
 */
typedef enum OmpcStatus {
  OMPC_STATUS_OK = 0,
  /**
   * Numerical failure or an unbounded relaxation.
   */
  OMPC_STATUS_OTHER = 1,
  OMPC_STATUS_INFEASIBLE = 2,
  /**
   * Solver iteration/node limit, or the closed loop ran out of steps.
   */
  OMPC_STATUS_ITER_LIMIT = 3,
  OMPC_STATUS_INVALID_INPUT = 4,
  OMPC_STATUS_NULL_POINTER = 5,
  OMPC_STATUS_IO = 6,
  OMPC_STATUS_PANIC = 7,
} OmpcStatus;

/**
 * A parsed scenario file.
 */
typedef struct OmpcScenario OmpcScenario;

/**
 * A planned or executed trajectory.
 */
typedef struct OmpcTrajectory OmpcTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ompc_last_error(void);

/**
 * Static, NUL-terminated crate version.
 */
const char *ompc_version(void);

/**
 * Loads a TOML scenario from `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum OmpcStatus ompc_scenario_load(const char *path, struct OmpcScenario **out);

/**
 * Parses a TOML scenario held in memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a writable pointer.
 */
enum OmpcStatus ompc_scenario_parse(const char *text, struct OmpcScenario **out);

/**
 * Overrides the solver tolerance, which must lie in (0, 1).
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
enum OmpcStatus ompc_scenario_set_tol(struct OmpcScenario *scenario, double tol);

/**
 * Spatial dimension (2 or 3).
 *
 * # Safety
 * `scenario` must be null or a live handle.
 */
enum OmpcStatus ompc_scenario_dim(const struct OmpcScenario *scenario, size_t *out);

/**
 * # Safety
 * `scenario` must be null or a handle from `ompc_scenario_load`/`_parse`
 * that has not been freed.
 */
void ompc_scenario_free(struct OmpcScenario *scenario);

/**
 * One-shot solve. `*out` receives a trajectory whenever the solve ran, also
 * when the status is `INFEASIBLE` or `ITER_LIMIT`; it stays null on errors.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable pointer.
 */
enum OmpcStatus ompc_plan(const struct OmpcScenario *scenario, struct OmpcTrajectory **out);

/**
 * Receding-horizon run of the scenario's `[rhc]` section. Returns `OK` when
 * the goal was captured and `ITER_LIMIT` when the step budget ran out;
 * `*out` holds the executed trajectory in both cases.
 *
 * # Safety
 * `scenario` must be a live handle and `out` a writable pointer.
 */
enum OmpcStatus ompc_rhc(const struct OmpcScenario *scenario, struct OmpcTrajectory **out);

/**
 * # Safety
 * `traj` must be null or a handle from `ompc_plan`/`ompc_rhc` that has not
 * been freed.
 */
void ompc_trajectory_free(struct OmpcTrajectory *traj);

/**
 * Number of rows (time instants), horizon + 1 for a plan.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t ompc_trajectory_len(const struct OmpcTrajectory *traj);

/**
 * Spatial dimension of the rows, 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t ompc_trajectory_dim(const struct OmpcTrajectory *traj);

/**
 * Objective value of the solve (a plan) or the accumulated cost (a run).
 *
 * # Safety
 * `traj` must be null or a live handle; `out` must be writable.
 */
enum OmpcStatus ompc_trajectory_objective(const struct OmpcTrajectory *traj, double *out);

/**
 * Copies one row: `position` takes `dim` values, `rotation` `dim*dim`
 * row-major, `det` one. Any output pointer may be null to skip it.
 *
 * # Safety
 * Non-null outputs must have room for the counts above.
 */
enum OmpcStatus ompc_trajectory_row(const struct OmpcTrajectory *traj,
                                    size_t row,
                                    double *position,
                                    double *rotation,
                                    double *det);

/**
 * Input applied at `row` (zeros on the last row). Writes up to `cap` values
 * and stores the input length in `len`; a short buffer is an error.
 *
 * # Safety
 * `input` must have room for `cap` values; `len` must be writable.
 */
enum OmpcStatus ompc_trajectory_input(const struct OmpcTrajectory *traj,
                                      size_t row,
                                      double *input,
                                      size_t cap,
                                      size_t *len);

/**
 * Writes the trajectory table (same format as the command-line export).
 *
 * # Safety
 * `traj` must be a live handle and `path` a NUL-terminated string.
 */
enum OmpcStatus ompc_trajectory_write_csv(const struct OmpcTrajectory *traj, const char *path);

/**
 * Nearest rotation to the `n×n` row-major matrix `m` (n = 2 or 3) in the
 * Frobenius norm. `rotation` receives `n*n` values; `distance` and `unique`
 * may be null.
 *
 * # Safety
 * `m` and `rotation` must hold `n*n` values.
 */
enum OmpcStatus ompc_project_to_son(size_t n,
                                    const double *m,
                                    double *rotation,
                                    double *distance,
                                    bool *unique);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITOPE_MPC_H */
