#ifndef FRSD_H
#define FRSD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code for every fallible call.
 */
typedef enum {
  FrsdStatus_Ok = 0,
  /**
   * a required pointer argument was null
   */
  FrsdStatus_NullPointer = 1,
  /**
   * an argument was out of range or unparsable
   */
  FrsdStatus_InvalidArgument = 2,
  /**
   * graph construction or generation failed
   */
  FrsdStatus_GraphError = 3,
  /**
   * dataset parsing or objective construction failed
   */
  FrsdStatus_ObjectiveError = 4,
  /**
   * the simulation or the centralized oracle failed
   */
  FrsdStatus_EngineError = 5,
} FrsdStatus;

/**
 * Opaque directed-graph handle.
 */
typedef struct FrsdGraph FrsdGraph;

/**
 * Opaque problem-instance handle (one local objective per node).
 */
typedef struct FrsdProblem FrsdProblem;

/**
 * Opaque trace handle holding per-round metrics of a finished run.
 */
typedef struct FrsdTrace FrsdTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Generates a strongly connected digraph with `n` nodes and an edge budget
 * of `phi * n * (n-1)` (plus self-loops), writing the handle to `out`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FrsdStatus frsd_graph_generate(uintptr_t n, double phi, uint64_t seed, FrsdGraph **out);

/**
 * Parses a graph from its text form (`n` on the first line, one
 * `from to` pair per following line).
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
FrsdStatus frsd_graph_from_text(const char *text, FrsdGraph **out);

/**
 * Renders the graph in the same text form accepted by
 * [`frsd_graph_from_text`]; free with [`frsd_string_free`].
 *
 * # Safety
 * `g` must be a live handle from this library or null.
 */
char *frsd_graph_to_text(const FrsdGraph *g);

/**
 * Node count, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle from this library or null.
 */
uintptr_t frsd_graph_node_count(const FrsdGraph *g);

/**
 * Directed edge count excluding self-loops, or 0 for a null handle.
 *
 * # Safety
 * `g` must be a live handle from this library or null.
 */
uintptr_t frsd_graph_edge_count(const FrsdGraph *g);

/**
 * Releases a graph handle; null is a no-op.
 *
 * # Safety
 * `g` must be a handle returned by this library, not yet freed.
 */
void frsd_graph_free(FrsdGraph *g);

/**
 * Builds a seeded synthetic Huber regression problem: `n` nodes,
 * `m_per_node` samples each, dimension `p`, Huber threshold `xi`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
FrsdStatus frsd_problem_synth_huber(uintptr_t n,
                                    uintptr_t m_per_node,
                                    uintptr_t p,
                                    double xi,
                                    uint64_t seed,
                                    FrsdProblem **out);

/**
 * Parses LIBSVM-format text and partitions `n * m_per_node` samples over
 * `n` nodes as regularized logistic regression in dimension `p`.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
FrsdStatus frsd_problem_from_libsvm(const char *text,
                                    uintptr_t n,
                                    uintptr_t m_per_node,
                                    uintptr_t p,
                                    double lambda,
                                    uint64_t seed,
                                    FrsdProblem **out);

/**
 * Node count, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be a live handle from this library or null.
 */
uintptr_t frsd_problem_node_count(const FrsdProblem *problem);

/**
 * Decision-variable dimension, or 0 for a null handle.
 *
 * # Safety
 * `problem` must be a live handle from this library or null.
 */
uintptr_t frsd_problem_dimension(const FrsdProblem *problem);

/**
 * Releases a problem handle; null is a no-op.
 *
 * # Safety
 * `problem` must be a handle returned by this library, not yet freed.
 */
void frsd_problem_free(FrsdProblem *problem);

/**
 * Solves the average objective to `tol` gradient norm and writes the
 * minimizer into `x_out` (length must equal the problem dimension).
 * `out_value` and `out_grad_norm` may be null.
 *
 * # Safety
 * `problem` must be a live handle; `x_out` must point to `dimension`
 * writable doubles.
 */
FrsdStatus frsd_solve_average(const FrsdProblem *problem,
                              double tol,
                              uintptr_t max_iters,
                              double *x_out,
                              double *out_value,
                              double *out_grad_norm);

/**
 * Runs `algorithm` (by name, e.g. `"frsd"` or `"push-pull"`) for
 * `iterations` synchronous rounds over `graph`, recording metrics every
 * `cadence` rounds. Mixing matrices, the seeded start, and the reference
 * solution are built internally. Writes a trace handle to `out`.
 *
 * # Safety
 * `graph` and `problem` must be live handles; `algorithm` a valid
 * NUL-terminated string; `out` a valid pointer.
 */
FrsdStatus frsd_run(const FrsdGraph *graph,
                    const FrsdProblem *problem,
                    const char *algorithm,
                    double alpha,
                    double beta,
                    uintptr_t iterations,
                    uintptr_t cadence,
                    uint64_t seed,
                    FrsdTrace **out);

/**
 * Number of recorded rows, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be a live handle from this library or null.
 */
uintptr_t frsd_trace_row_count(const FrsdTrace *trace);

/**
 * Residual of the last recorded row, or NaN for a null handle.
 *
 * # Safety
 * `trace` must be a live handle from this library or null.
 */
double frsd_trace_final_residual(const FrsdTrace *trace);

/**
 * Copies one recorded row into the out pointers; any out pointer may be
 * null to skip that field.
 *
 * # Safety
 * `trace` must be a live handle; non-null out pointers must be writable.
 */
FrsdStatus frsd_trace_row(const FrsdTrace *trace,
                          uintptr_t index,
                          uintptr_t *out_round,
                          double *out_residual,
                          double *out_consensus_violation,
                          double *out_grad_norm,
                          uintptr_t *out_cum_broadcast_scalars);

/**
 * Renders the trace as CSV; free with [`frsd_string_free`].
 *
 * # Safety
 * `trace` must be a live handle from this library or null.
 */
char *frsd_trace_csv(const FrsdTrace *trace);

/**
 * Releases a trace handle; null is a no-op.
 *
 * # Safety
 * `trace` must be a handle returned by this library, not yet freed.
 */
void frsd_trace_free(FrsdTrace *trace);

/**
 * Scalars one node broadcasts per round under `algorithm`, or 0 if the
 * name is unknown.
 *
 * # Safety
 * `algorithm` must be a valid NUL-terminated string or null.
 */
uintptr_t frsd_comm_size(const char *algorithm, uintptr_t n, uintptr_t p);

/**
 * Scalars one node stores between rounds under `algorithm`, or 0 if the
 * name is unknown.
 *
 * # Safety
 * `algorithm` must be a valid NUL-terminated string or null.
 */
uintptr_t frsd_memory_size(const char *algorithm, uintptr_t n, uintptr_t p);

/**
 * Releases a string returned by this library; null is a no-op.
 *
 * # Safety
 * `s` must be a string returned by this library, not yet freed.
 */
void frsd_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FRSD_H */
