#ifndef FMHSDM_H
#define FMHSDM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result codes.
 */
typedef enum FmhStatus {
  FMH_OK = 0,
  FMH_NULL_POINTER = 1,
  FMH_INVALID_ARGUMENT = 2,
  FMH_DIMENSION_MISMATCH = 3,
  FMH_UNSUPPORTED = 4,
  FMH_DIVERGENCE = 5,
  FMH_NUMERICAL = 6,
  FMH_PANIC = 7,
} FmhStatus;

/*
 Solver variants.
 */
typedef enum FmhVariant {
  FMH_FM_HSDM = 0,
  FMH_FM_HSDM_G0 = 1,
  FMH_FM_HSDM_F0 = 2,
  FMH_FM_HSDM_III = 3,
  FMH_HSDM = 4,
  FMH_HCGM = 5,
  FMH_ADMM = 6,
  FMH_PD_CONDAT = 7,
  FMH_PD_CP = 8,
  FMH_FISTA = 9,
} FmhVariant;

/*
 Opaque affine firmly nonexpansive map `x -> Q x + pi`.
 */
typedef struct FmhMap FmhMap;

/*
 Opaque test problem.
 */
typedef struct FmhProblem FmhProblem;

/*
 Opaque solver trace.
 */
typedef struct FmhTrace FmhTrace;

/*
 Run parameters; baseline methods use their built-in defaults.
 `variant` must hold one of the enumerators.
 */
typedef struct FmhRunOptions {
  enum FmhVariant variant;
  double alpha;
  double lambda;
  uintptr_t max_iters;
} FmhRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Builds the three-block quadratic test problem with ball constraints.
 `recast != 0` selects the formulation with the quadratic moved into the prox term.

 # Safety
 `out` must be valid for writes.
 */
enum FmhStatus fmh_problem_iiduka(uintptr_t d,
                                  double p11,
                                  uint64_t seed,
                                  int32_t recast,
                                  struct FmhProblem **out);

/*
 Builds the hyperplane-constrained quadratic test problem.

 # Safety
 `out` must be valid for writes.
 */
enum FmhStatus fmh_problem_hyperplane(uintptr_t d,
                                      double p11,
                                      uint64_t seed,
                                      int32_t recast,
                                      struct FmhProblem **out);

/*
 Dimension of the problem's variable, or 0 for a null handle.

 # Safety
 `problem` must be null or a live handle.
 */
uintptr_t fmh_problem_dim(const struct FmhProblem *problem);

/*
 Lipschitz constant of the smooth term's gradient, or NaN for a null handle.

 # Safety
 `problem` must be null or a live handle.
 */
double fmh_problem_lipschitz(const struct FmhProblem *problem);

/*
 Copies the known minimizer into `out[0..len]`.

 # Safety
 `problem` must be a live handle and `out` valid for `len` writes.
 */
enum FmhStatus fmh_problem_minimizer(const struct FmhProblem *problem, double *out, uintptr_t len);

/*
 Draws a point on the unit sphere around the minimizer from a stream seeded with `seed`.

 # Safety
 `problem` must be a live handle and `out` valid for `len` writes.
 */
enum FmhStatus fmh_initial_point(const struct FmhProblem *problem,
                                 uint64_t seed,
                                 double *out,
                                 uintptr_t len);

/*
 # Safety
 `problem` must be null or a handle not yet freed.
 */
void fmh_problem_free(struct FmhProblem *problem);

/*
 Checks `alpha` and `lambda` against the admissible range of `variant`.
 */
enum FmhStatus fmh_validate_step_size(enum FmhVariant variant,
                                      double alpha,
                                      double lambda,
                                      double lipschitz);

/*
 Runs a solver from `x0[0..len]`.

 # Safety
 `problem` and `options` must be live, `x0` valid for `len` reads and `out` for writes.
 */
enum FmhStatus fmh_run(const struct FmhProblem *problem,
                       const struct FmhRunOptions *options,
                       const double *x0,
                       uintptr_t len,
                       struct FmhTrace **out);

/*
 Number of recorded iterates (iterations + 1), or 0 for a null handle.

 # Safety
 `trace` must be null or a live handle.
 */
uintptr_t fmh_trace_len(const struct FmhTrace *trace);

/*
 Copies `||x_n - x*||` for every recorded `n` into `out[0..len]`.

 # Safety
 `trace` must be live and `out` valid for `len` writes.
 */
enum FmhStatus fmh_trace_distances(const struct FmhTrace *trace, double *out, uintptr_t len);

/*
 Copies the last iterate into `out[0..len]`.

 # Safety
 `trace` must be live and `out` valid for `len` writes.
 */
enum FmhStatus fmh_trace_final_iterate(const struct FmhTrace *trace, double *out, uintptr_t len);

/*
 # Safety
 `trace` must be null or a handle not yet freed.
 */
void fmh_trace_free(struct FmhTrace *trace);

/*
 Projection onto the hyperplane `{x : <a, x> = b}`.

 # Safety
 `a` must be valid for `len` reads and `out` for writes.
 */
enum FmhStatus fmh_map_hyperplane(const double *a, uintptr_t len, double b, struct FmhMap **out);

/*
 Projection onto the consensus subspace of `blocks` copies of a `block_dim` vector.

 # Safety
 `out` must be valid for writes.
 */
enum FmhStatus fmh_map_consensus(uintptr_t blocks, uintptr_t block_dim, struct FmhMap **out);

/*
 Dimension of the map, or 0 for a null handle.

 # Safety
 `map` must be null or a live handle.
 */
uintptr_t fmh_map_dim(const struct FmhMap *map);

/*
 Writes `T x` into `out`; both buffers hold `len` values and may not overlap.

 # Safety
 `map` must be live, `x` valid for `len` reads and `out` for `len` writes.
 */
enum FmhStatus fmh_map_apply(const struct FmhMap *map, const double *x, double *out, uintptr_t len);

/*
 # Safety
 `map` must be null or a handle not yet freed.
 */
void fmh_map_free(struct FmhMap *map);

/*
 Message of the last failed call on this thread, or null if none.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *fmh_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FMHSDM_H */
