#ifndef LSHAPE_OCP_H
#define LSHAPE_OCP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum LocpProblem {
  LOCP_PROBLEM_LSHAPE_MEASURE = 0,
  LOCP_PROBLEM_SMOOTH = 1,
} LocpProblem;

typedef enum LocpStatus {
  LOCP_STATUS_OK = 0,
  LOCP_STATUS_INVALID_ARGUMENT = 1,
  LOCP_STATUS_PARSE = 2,
  LOCP_STATUS_VALIDATION = 3,
  LOCP_STATUS_NUMERICAL = 4,
  LOCP_STATUS_NULL_POINTER = 5,
  LOCP_STATUS_IO = 6,
  LOCP_STATUS_PANIC = 7,
} LocpStatus;

typedef struct LocpMesh LocpMesh;

typedef struct LocpSolution LocpSolution;

typedef struct LocpStudy LocpStudy;

/**
 * Solver settings. Zero `n` or `steps` picks the defaults (8 and
 * `ceil(T / h^2)` rounded up to even); a non-positive `step` means
 * `1 / alpha`.
 */
typedef struct LocpOptions {
  enum LocpProblem problem;
  uintptr_t n;
  uintptr_t steps;
  double alpha;
  double u_a;
  double u_b;
  double step;
  double tol;
  uintptr_t max_iter;
} LocpOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *locp_last_error_message(void);

struct LocpOptions locp_options_default(void);

/**
 * Structured L-shape mesh with squares of side `1/n`; `n` must be even.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage.
 */
enum LocpStatus locp_mesh_new(uintptr_t n, struct LocpMesh **out);

/**
 * # Safety
 * `mesh` must be null or come from [`locp_mesh_new`] and not be freed yet.
 */
void locp_mesh_free(struct LocpMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle.
 */
uintptr_t locp_mesh_num_vertices(const struct LocpMesh *mesh);

/**
 * # Safety
 * `mesh` must be a live handle.
 */
uintptr_t locp_mesh_num_triangles(const struct LocpMesh *mesh);

/**
 * Number of interior vertices.
 *
 * # Safety
 * `mesh` must be a live handle.
 */
uintptr_t locp_mesh_num_dofs(const struct LocpMesh *mesh);

/**
 * Longest edge, or NaN for a null handle.
 *
 * # Safety
 * `mesh` must be a live handle.
 */
double locp_mesh_h(const struct LocpMesh *mesh);

/**
 * Copies interleaved `x, y` vertex coordinates into `xy`, which must hold
 * `2 * num_vertices` values.
 *
 * # Safety
 * `mesh` must be a live handle and `xy` must point to `len` writable doubles.
 */
enum LocpStatus locp_mesh_vertices(const struct LocpMesh *mesh, double *xy, uintptr_t len);

/**
 * Solves the discrete control problem by projected gradients.
 *
 * # Safety
 * `opts` must be null (defaults) or valid; `out` must be writable.
 */
enum LocpStatus locp_solve(const struct LocpOptions *opts, struct LocpSolution **out);

/**
 * # Safety
 * `sol` must be null or come from [`locp_solve`] and not be freed yet.
 */
void locp_solution_free(struct LocpSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle.
 */
uintptr_t locp_solution_iterations(const struct LocpSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle.
 */
bool locp_solution_converged(const struct LocpSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle.
 */
double locp_solution_kkt_residual(const struct LocpSolution *sol);

/**
 * Reduced cost of the returned control.
 *
 * # Safety
 * `sol` must be a live handle.
 */
double locp_solution_cost(const struct LocpSolution *sol);

/**
 * Writes the `L2(L2)` errors of state, co-state and control into
 * `errors[0..3]`; all NaN when the problem has no exact solution.
 *
 * # Safety
 * `sol` must be a live handle and `errors` must hold 3 doubles.
 */
enum LocpStatus locp_solution_errors(const struct LocpSolution *sol, double *errors);

/**
 * Number of control values, `steps * num_triangles`.
 *
 * # Safety
 * `sol` must be a live handle.
 */
uintptr_t locp_solution_control_len(const struct LocpSolution *sol);

/**
 * Copies the control, interval-major, into `values`.
 *
 * # Safety
 * `sol` must be a live handle and `values` must point to `len` writable
 * doubles.
 */
enum LocpStatus locp_solution_control(const struct LocpSolution *sol,
                                      double *values,
                                      uintptr_t len);

/**
 * Copies the state at the final time (one value per vertex) into `values`.
 *
 * # Safety
 * `sol` must be a live handle and `values` must point to `len` writable
 * doubles.
 */
enum LocpStatus locp_solution_final_state(const struct LocpSolution *sol,
                                          double *values,
                                          uintptr_t len);

/**
 * Convergence study over the mesh parameters `levels[0..len]`. `opts.n`
 * and `opts.steps` are ignored.
 *
 * # Safety
 * `levels` must point to `len` values, `opts` must be null or valid and
 * `out` must be writable.
 */
enum LocpStatus locp_study_run(const uintptr_t *levels,
                               uintptr_t len,
                               const struct LocpOptions *opts,
                               struct LocpStudy **out);

/**
 * # Safety
 * `study` must be null or come from [`locp_study_run`] and not be freed
 * yet.
 */
void locp_study_free(struct LocpStudy *study);

/**
 * False when a level failed; the report then ends in an error row.
 *
 * # Safety
 * `study` must be a live handle.
 */
bool locp_study_is_complete(const struct LocpStudy *study);

/**
 * # Safety
 * `study` must be a live handle.
 */
uintptr_t locp_study_num_rows(const struct LocpStudy *study);

/**
 * Report as CSV. Release with [`locp_string_free`]. Null on a null handle.
 *
 * # Safety
 * `study` must be a live handle.
 */
char *locp_study_csv(const struct LocpStudy *study);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void locp_string_free(char *s);

/**
 * Compares the adjoint gradient with central differences on a coarse
 * instance and writes the worst relative error.
 *
 * # Safety
 * `opts` must be null or valid; `max_relative_error` must be writable.
 */
enum LocpStatus locp_gradcheck(const struct LocpOptions *opts, double *max_relative_error);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LSHAPE_OCP_H */
