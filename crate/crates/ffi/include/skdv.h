#ifndef SKDV_H
#define SKDV_H

/* Generated by cbindgen from the skdv-ffi sources; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SkdvStatus {
  SKDV_STATUS_OK = 0,
  SKDV_STATUS_NULL_POINTER = 1,
  SKDV_STATUS_INVALID_ARGUMENT = 2,
  SKDV_STATUS_GRID_MISMATCH = 3,
  SKDV_STATUS_NO_PROJECTION = 4,
  SKDV_STATUS_OFF_MANIFOLD = 5,
  SKDV_STATUS_NON_CONVERGENCE = 6,
  SKDV_STATUS_BUFFER_TOO_SMALL = 7,
  SKDV_STATUS_INTERNAL = 99,
} SkdvStatus;

typedef enum SkdvGridKind {
  SKDV_GRID_KIND_LINE = 0,
  SKDV_GRID_KIND_RADIAL = 1,
} SkdvGridKind;

/**
 * Opaque handle to a scalar field on a grid.
 */
typedef struct SkdvField SkdvField;

/**
 * Opaque grid handle.
 */
typedef struct SkdvGrid SkdvGrid;

/**
 * Opaque handle to a pair `(u, v)` on a common grid.
 */
typedef struct SkdvState SkdvState;

typedef struct SkdvSolveOptions {
  size_t max_iters;
  double tol_grad;
  double tol_energy;
  double step0;
  double armijo;
  size_t multistart;
  uint64_t seed;
} SkdvSolveOptions;

typedef struct SkdvParams {
  double lambda1;
  double lambda2;
  double beta;
  size_t dim;
} SkdvParams;

typedef struct SkdvEnergy {
  double phi;
  double psi;
  double norm_sq;
  double norm_u_sq;
  double norm_v_sq;
  double quartic;
  double cubic_abs;
  double cross;
} SkdvEnergy;

typedef struct SkdvSolveReport {
  bool converged;
  size_t iters;
  double final_energy;
  double grad_norm;
  double residual_sup;
  double psi_rel;
} SkdvSolveReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *skdv_last_error(void);

struct SkdvSolveOptions skdv_solve_options_default(void);

/**
 * Creates a grid of `n` nodes: `[-extent, extent)` for a line grid, `(0, extent)`
 * for a radial grid in dimension `dim`. `kind` takes an [`SkdvGridKind`] value.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for a handle.
 */
enum SkdvStatus skdv_grid_new(uint32_t kind,
                              size_t n,
                              double extent,
                              size_t dim,
                              struct SkdvGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from `skdv_grid_new` not yet freed.
 */
void skdv_grid_free(struct SkdvGrid *grid);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live grid handle.
 */
size_t skdv_grid_len(const struct SkdvGrid *grid);

/**
 * Copies the node coordinates into `buf`, which holds `len` values.
 *
 * # Safety
 * `grid` must be a live grid handle and `buf` must point to `len` doubles.
 */
enum SkdvStatus skdv_grid_nodes(const struct SkdvGrid *grid, double *buf, size_t len);

/**
 * Creates a field from `len` nodal values; `len` must equal the grid size.
 *
 * # Safety
 * `grid` must be a live grid handle and `values` must point to `len` doubles.
 */
enum SkdvStatus skdv_field_new(const struct SkdvGrid *grid,
                               const double *values,
                               size_t len,
                               struct SkdvField **out);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
void skdv_field_free(struct SkdvField *field);

/**
 * # Safety
 * `field` must be null or a live field handle.
 */
size_t skdv_field_len(const struct SkdvField *field);

/**
 * # Safety
 * `field` must be a live field handle and `buf` must point to `len` doubles.
 */
enum SkdvStatus skdv_field_values(const struct SkdvField *field, double *buf, size_t len);

/**
 * Builds a state from copies of two fields on the same grid.
 *
 * # Safety
 * `u` and `v` must be live field handles.
 */
enum SkdvStatus skdv_state_new(const struct SkdvField *u,
                               const struct SkdvField *v,
                               struct SkdvState **out);

/**
 * # Safety
 * `state` must be null or a live state handle.
 */
void skdv_state_free(struct SkdvState *state);

/**
 * Copies component `which` (0 for `u`, 1 for `v`) into a new field.
 *
 * # Safety
 * `state` must be a live state handle.
 */
enum SkdvStatus skdv_state_component(const struct SkdvState *state,
                                     uint32_t which,
                                     struct SkdvField **out);

/**
 * # Safety
 * `p` and `state` must be valid; `out` must point to writable storage.
 */
enum SkdvStatus skdv_energy(const struct SkdvParams *p,
                            const struct SkdvState *state,
                            struct SkdvEnergy *out);

/**
 * Scales `state` onto the Nehari manifold, returning the factor and the
 * projected state.
 *
 * # Safety
 * All pointers must be valid; `out_state` receives a new handle.
 */
enum SkdvStatus skdv_nehari_project(const struct SkdvParams *p,
                                    const struct SkdvState *state,
                                    double *out_t,
                                    struct SkdvState **out_state);

/**
 * Ground state of the single fourth-order equation with parameter `lambda2`.
 * An unconverged solve still returns its best iterate with status
 * `NonConvergence`; the report says how far it got.
 *
 * # Safety
 * `grid` and `opts` must be valid; `out` receives a new field handle and
 * `report` may be null.
 */
enum SkdvStatus skdv_solve_scalar(double lambda2,
                                  const struct SkdvGrid *grid,
                                  const struct SkdvSolveOptions *opts,
                                  struct SkdvField **out,
                                  struct SkdvSolveReport *report_out);

/**
 * Ground state of the coupled system from the default initialisations.
 *
 * # Safety
 * As for [`skdv_solve_scalar`].
 */
enum SkdvStatus skdv_solve_coupled(const struct SkdvParams *p,
                                   const struct SkdvGrid *grid,
                                   const struct SkdvSolveOptions *opts,
                                   struct SkdvState **out,
                                   struct SkdvSolveReport *report_out);

/**
 * Critical coupling `inf ‖φ‖₁² / ∫v2 φ²` for the profile `v2`. The
 * minimiser is returned through `out_minimizer` unless it is null.
 *
 * # Safety
 * `v2` and `opts` must be valid handles; `out_lambda` must be writable.
 */
enum SkdvStatus skdv_lambda_threshold(double lambda1,
                                      const struct SkdvField *v2,
                                      const struct SkdvSolveOptions *opts,
                                      double *out_lambda,
                                      struct SkdvField **out_minimizer);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKDV_H */
