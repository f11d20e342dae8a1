//! C ABI for the `frsd` library.
//!
//! Handles are opaque pointers created and destroyed by this crate; every
//! fallible call returns an [`FrsdStatus`] and writes results through out
//! pointers. Strings returned by `frsd_*` functions are heap-allocated and
//! must be released with [`frsd_string_free`].

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use frsd::digraph::{
    build_uniform_column_stochastic, build_uniform_row_stochastic, generate_strongly_connected,
    DiGraph,
};
use frsd::engine::{initial_points, run, solve_centralized, Trace};
use frsd::objectives::{parse_libsvm, partition_dataset, synth_huber_problem, ProblemInstance};
use frsd::protocols::{comm_size, memory_size, Algorithm, HyperParams};

/// Result code for every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrsdStatus {
    Ok = 0,
    /// a required pointer argument was null
    NullPointer = 1,
    /// an argument was out of range or unparsable
    InvalidArgument = 2,
    /// graph construction or generation failed
    GraphError = 3,
    /// dataset parsing or objective construction failed
    ObjectiveError = 4,
    /// the simulation or the centralized oracle failed
    EngineError = 5,
}

/// Opaque directed-graph handle.
pub struct FrsdGraph(DiGraph);

/// Opaque problem-instance handle (one local objective per node).
pub struct FrsdProblem(ProblemInstance);

/// Opaque trace handle holding per-round metrics of a finished run.
pub struct FrsdTrace(Trace);

fn out_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

unsafe fn read_str<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        return None;
    }
    CStr::from_ptr(s).to_str().ok()
}

/// Generates a strongly connected digraph with `n` nodes and an edge budget
/// of `phi * n * (n-1)` (plus self-loops), writing the handle to `out`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_generate(
    n: usize,
    phi: f64,
    seed: u64,
    out: *mut *mut FrsdGraph,
) -> FrsdStatus {
    if out.is_null() {
        return FrsdStatus::NullPointer;
    }
    match generate_strongly_connected(n, phi, seed) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(FrsdGraph(g)));
            FrsdStatus::Ok
        }
        Err(_) => FrsdStatus::GraphError,
    }
}

/// Parses a graph from its text form (`n` on the first line, one
/// `from to` pair per following line).
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_from_text(
    text: *const c_char,
    out: *mut *mut FrsdGraph,
) -> FrsdStatus {
    if out.is_null() {
        return FrsdStatus::NullPointer;
    }
    let Some(text) = read_str(text) else {
        return FrsdStatus::NullPointer;
    };
    match DiGraph::from_text(text) {
        Ok(g) => {
            *out = Box::into_raw(Box::new(FrsdGraph(g)));
            FrsdStatus::Ok
        }
        Err(_) => FrsdStatus::GraphError,
    }
}

/// Renders the graph in the same text form accepted by
/// [`frsd_graph_from_text`]; free with [`frsd_string_free`].
///
/// # Safety
/// `g` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_to_text(g: *const FrsdGraph) -> *mut c_char {
    match g.as_ref() {
        Some(g) => out_string(g.0.to_text()),
        None => ptr::null_mut(),
    }
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_node_count(g: *const FrsdGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Directed edge count excluding self-loops, or 0 for a null handle.
///
/// # Safety
/// `g` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_edge_count(g: *const FrsdGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.edge_count())
}

/// Releases a graph handle; null is a no-op.
///
/// # Safety
/// `g` must be a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn frsd_graph_free(g: *mut FrsdGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Builds a seeded synthetic Huber regression problem: `n` nodes,
/// `m_per_node` samples each, dimension `p`, Huber threshold `xi`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frsd_problem_synth_huber(
    n: usize,
    m_per_node: usize,
    p: usize,
    xi: f64,
    seed: u64,
    out: *mut *mut FrsdProblem,
) -> FrsdStatus {
    if out.is_null() {
        return FrsdStatus::NullPointer;
    }
    if n == 0 || m_per_node == 0 || p == 0 || !(xi > 0.0) {
        return FrsdStatus::InvalidArgument;
    }
    let problem = synth_huber_problem(n, m_per_node, p, xi, seed);
    *out = Box::into_raw(Box::new(FrsdProblem(problem)));
    FrsdStatus::Ok
}

/// Parses LIBSVM-format text and partitions `n * m_per_node` samples over
/// `n` nodes as regularized logistic regression in dimension `p`.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frsd_problem_from_libsvm(
    text: *const c_char,
    n: usize,
    m_per_node: usize,
    p: usize,
    lambda: f64,
    seed: u64,
    out: *mut *mut FrsdProblem,
) -> FrsdStatus {
    if out.is_null() {
        return FrsdStatus::NullPointer;
    }
    let Some(text) = read_str(text) else {
        return FrsdStatus::NullPointer;
    };
    if n == 0 || m_per_node == 0 || p == 0 {
        return FrsdStatus::InvalidArgument;
    }
    let ds = match parse_libsvm(text) {
        Ok(ds) => ds,
        Err(_) => return FrsdStatus::ObjectiveError,
    };
    if ds.len() < n * m_per_node {
        return FrsdStatus::InvalidArgument;
    }
    match partition_dataset(&ds, n, m_per_node, p, lambda, seed) {
        Ok(problem) => {
            *out = Box::into_raw(Box::new(FrsdProblem(problem)));
            FrsdStatus::Ok
        }
        Err(_) => FrsdStatus::ObjectiveError,
    }
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `problem` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_problem_node_count(problem: *const FrsdProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.n())
}

/// Decision-variable dimension, or 0 for a null handle.
///
/// # Safety
/// `problem` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_problem_dimension(problem: *const FrsdProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.dimension())
}

/// Releases a problem handle; null is a no-op.
///
/// # Safety
/// `problem` must be a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn frsd_problem_free(problem: *mut FrsdProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves the average objective to `tol` gradient norm and writes the
/// minimizer into `x_out` (length must equal the problem dimension).
/// `out_value` and `out_grad_norm` may be null.
///
/// # Safety
/// `problem` must be a live handle; `x_out` must point to `dimension`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn frsd_solve_average(
    problem: *const FrsdProblem,
    tol: f64,
    max_iters: usize,
    x_out: *mut f64,
    out_value: *mut f64,
    out_grad_norm: *mut f64,
) -> FrsdStatus {
    let Some(problem) = problem.as_ref() else {
        return FrsdStatus::NullPointer;
    };
    if x_out.is_null() {
        return FrsdStatus::NullPointer;
    }
    match solve_centralized(&problem.0, tol, max_iters) {
        Ok(sol) => {
            ptr::copy_nonoverlapping(sol.x_star.as_slice().as_ptr(), x_out, sol.x_star.len());
            if !out_value.is_null() {
                *out_value = sol.value;
            }
            if !out_grad_norm.is_null() {
                *out_grad_norm = sol.grad_norm;
            }
            FrsdStatus::Ok
        }
        Err(_) => FrsdStatus::EngineError,
    }
}

/// Runs `algorithm` (by name, e.g. `"frsd"` or `"push-pull"`) for
/// `iterations` synchronous rounds over `graph`, recording metrics every
/// `cadence` rounds. Mixing matrices, the seeded start, and the reference
/// solution are built internally. Writes a trace handle to `out`.
///
/// # Safety
/// `graph` and `problem` must be live handles; `algorithm` a valid
/// NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn frsd_run(
    graph: *const FrsdGraph,
    problem: *const FrsdProblem,
    algorithm: *const c_char,
    alpha: f64,
    beta: f64,
    iterations: usize,
    cadence: usize,
    seed: u64,
    out: *mut *mut FrsdTrace,
) -> FrsdStatus {
    if out.is_null() {
        return FrsdStatus::NullPointer;
    }
    let (Some(graph), Some(problem)) = (graph.as_ref(), problem.as_ref()) else {
        return FrsdStatus::NullPointer;
    };
    let Some(name) = read_str(algorithm) else {
        return FrsdStatus::NullPointer;
    };
    let Ok(alg) = Algorithm::from_name(name) else {
        return FrsdStatus::InvalidArgument;
    };
    if graph.0.n() != problem.0.n() || iterations == 0 || cadence == 0 {
        return FrsdStatus::InvalidArgument;
    }
    let params = HyperParams { alpha, beta };
    if params.validate(alg).is_err() {
        return FrsdStatus::InvalidArgument;
    }
    let oracle = match solve_centralized(&problem.0, 1e-12, 1_000_000) {
        Ok(sol) => sol,
        Err(_) => return FrsdStatus::EngineError,
    };
    let row = build_uniform_row_stochastic(&graph.0);
    let col = alg
        .needs_column_weights()
        .then(|| build_uniform_column_stochastic(&graph.0));
    let x0 = initial_points(problem.0.n(), problem.0.dimension(), seed);
    match run(
        alg,
        &problem.0,
        &row,
        col.as_ref(),
        params,
        x0,
        &oracle,
        iterations,
        cadence,
    ) {
        Ok(trace) => {
            *out = Box::into_raw(Box::new(FrsdTrace(trace)));
            FrsdStatus::Ok
        }
        Err(_) => FrsdStatus::EngineError,
    }
}

/// Number of recorded rows, or 0 for a null handle.
///
/// # Safety
/// `trace` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_trace_row_count(trace: *const FrsdTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.rows.len())
}

/// Residual of the last recorded row, or NaN for a null handle.
///
/// # Safety
/// `trace` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_trace_final_residual(trace: *const FrsdTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.0.final_residual())
}

/// Copies one recorded row into the out pointers; any out pointer may be
/// null to skip that field.
///
/// # Safety
/// `trace` must be a live handle; non-null out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn frsd_trace_row(
    trace: *const FrsdTrace,
    index: usize,
    out_round: *mut usize,
    out_residual: *mut f64,
    out_consensus_violation: *mut f64,
    out_grad_norm: *mut f64,
    out_cum_broadcast_scalars: *mut usize,
) -> FrsdStatus {
    let Some(trace) = trace.as_ref() else {
        return FrsdStatus::NullPointer;
    };
    let Some(row) = trace.0.rows.get(index) else {
        return FrsdStatus::InvalidArgument;
    };
    if !out_round.is_null() {
        *out_round = row.k;
    }
    if !out_residual.is_null() {
        *out_residual = row.residual;
    }
    if !out_consensus_violation.is_null() {
        *out_consensus_violation = row.consensus_violation;
    }
    if !out_grad_norm.is_null() {
        *out_grad_norm = row.grad_norm;
    }
    if !out_cum_broadcast_scalars.is_null() {
        *out_cum_broadcast_scalars = row.cum_broadcast_scalars;
    }
    FrsdStatus::Ok
}

/// Renders the trace as CSV; free with [`frsd_string_free`].
///
/// # Safety
/// `trace` must be a live handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_trace_csv(trace: *const FrsdTrace) -> *mut c_char {
    match trace.as_ref() {
        Some(t) => out_string(t.0.to_csv()),
        None => ptr::null_mut(),
    }
}

/// Releases a trace handle; null is a no-op.
///
/// # Safety
/// `trace` must be a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn frsd_trace_free(trace: *mut FrsdTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Scalars one node broadcasts per round under `algorithm`, or 0 if the
/// name is unknown.
///
/// # Safety
/// `algorithm` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_comm_size(algorithm: *const c_char, n: usize, p: usize) -> usize {
    read_str(algorithm)
        .and_then(|name| Algorithm::from_name(name).ok())
        .map_or(0, |alg| comm_size(alg, n, p))
}

/// Scalars one node stores between rounds under `algorithm`, or 0 if the
/// name is unknown.
///
/// # Safety
/// `algorithm` must be a valid NUL-terminated string or null.
#[no_mangle]
pub unsafe extern "C" fn frsd_memory_size(algorithm: *const c_char, n: usize, p: usize) -> usize {
    read_str(algorithm)
        .and_then(|name| Algorithm::from_name(name).ok())
        .map_or(0, |alg| memory_size(alg, n, p))
}

/// Releases a string returned by this library; null is a no-op.
///
/// # Safety
/// `s` must be a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn frsd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
