use std::ffi::{CStr, CString};
use std::ptr;

use frsd_ffi::*;

#[test]
fn graph_problem_run_roundtrip() {
    unsafe {
        let mut graph = ptr::null_mut();
        assert_eq!(frsd_graph_generate(8, 0.3, 7, &mut graph), FrsdStatus::Ok);
        assert_eq!(frsd_graph_node_count(graph), 8);
        assert!(frsd_graph_edge_count(graph) > 0);

        // text form round-trips
        let text = frsd_graph_to_text(graph);
        assert!(!text.is_null());
        let mut reparsed = ptr::null_mut();
        assert_eq!(frsd_graph_from_text(text, &mut reparsed), FrsdStatus::Ok);
        assert_eq!(
            frsd_graph_edge_count(reparsed),
            frsd_graph_edge_count(graph)
        );
        frsd_string_free(text);
        frsd_graph_free(reparsed);

        let mut problem = ptr::null_mut();
        assert_eq!(
            frsd_problem_synth_huber(8, 6, 4, 2.0, 11, &mut problem),
            FrsdStatus::Ok
        );
        assert_eq!(frsd_problem_node_count(problem), 8);
        assert_eq!(frsd_problem_dimension(problem), 4);

        let mut x = [0.0f64; 4];
        let mut value = f64::NAN;
        let mut grad_norm = f64::NAN;
        assert_eq!(
            frsd_solve_average(problem, 1e-10, 100_000, x.as_mut_ptr(), &mut value, &mut grad_norm),
            FrsdStatus::Ok
        );
        assert!(grad_norm <= 1e-10);
        assert!(value.is_finite());

        let name = CString::new("frsd").unwrap();
        let mut trace = ptr::null_mut();
        assert_eq!(
            frsd_run(graph, problem, name.as_ptr(), 0.02, 2.5, 400, 1, 3, &mut trace),
            FrsdStatus::Ok
        );
        let rows = frsd_trace_row_count(trace);
        assert_eq!(rows, 401);
        let last = frsd_trace_final_residual(trace);
        assert!(last < 1e-3, "residual {last}");

        let mut round = 0usize;
        let mut residual = f64::NAN;
        assert_eq!(
            frsd_trace_row(
                trace,
                rows - 1,
                &mut round,
                &mut residual,
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            FrsdStatus::Ok
        );
        assert_eq!(round, 400);
        assert_eq!(residual, last);

        let csv = frsd_trace_csv(trace);
        assert!(!csv.is_null());
        let body = CStr::from_ptr(csv).to_str().unwrap();
        assert!(body.starts_with("k,residual"));
        assert_eq!(body.lines().count(), rows + 1);
        frsd_string_free(csv);

        frsd_trace_free(trace);
        frsd_problem_free(problem);
        frsd_graph_free(graph);
    }
}

#[test]
fn logistic_problem_and_push_pull() {
    let mut text = String::new();
    for i in 0..120 {
        let a = (i as f64 * 0.37).sin();
        let b = (i as f64 * 0.61).cos();
        let label = if a + 0.5 * b > 0.0 { "+1" } else { "-1" };
        text.push_str(&format!("{label} 1:{a:.6} 2:{b:.6}\n"));
    }
    let text = CString::new(text).unwrap();
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(
            frsd_problem_from_libsvm(text.as_ptr(), 6, 20, 3, 0.05, 1, &mut problem),
            FrsdStatus::Ok
        );
        let mut graph = ptr::null_mut();
        assert_eq!(frsd_graph_generate(6, 0.4, 1, &mut graph), FrsdStatus::Ok);

        let name = CString::new("push-pull").unwrap();
        let mut trace = ptr::null_mut();
        assert_eq!(
            frsd_run(graph, problem, name.as_ptr(), 0.1, 0.0, 2000, 10, 0, &mut trace),
            FrsdStatus::Ok
        );
        let last = frsd_trace_final_residual(trace);
        assert!(last < 1e-6, "residual {last}");

        frsd_trace_free(trace);
        frsd_problem_free(problem);
        frsd_graph_free(graph);
    }
}

#[test]
fn error_paths() {
    unsafe {
        let mut graph = ptr::null_mut();
        // 0.015 * 50 * 49 rounds to 37 directed edges: too few to strongly
        // connect 50 nodes
        assert_eq!(
            frsd_graph_generate(50, 0.015, 0, &mut graph),
            FrsdStatus::GraphError
        );
        assert_eq!(
            frsd_graph_generate(4, 0.5, 0, ptr::null_mut()),
            FrsdStatus::NullPointer
        );

        assert_eq!(frsd_graph_node_count(ptr::null()), 0);
        assert!(frsd_trace_final_residual(ptr::null()).is_nan());

        let mut problem = ptr::null_mut();
        assert_eq!(
            frsd_problem_synth_huber(4, 3, 2, -1.0, 0, &mut problem),
            FrsdStatus::InvalidArgument
        );
        assert_eq!(
            frsd_problem_synth_huber(4, 3, 2, 2.0, 0, &mut problem),
            FrsdStatus::Ok
        );
        assert_eq!(frsd_graph_generate(4, 0.6, 0, &mut graph), FrsdStatus::Ok);

        let bogus = CString::new("no-such-algorithm").unwrap();
        let mut trace = ptr::null_mut();
        assert_eq!(
            frsd_run(graph, problem, bogus.as_ptr(), 0.1, 0.5, 10, 1, 0, &mut trace),
            FrsdStatus::InvalidArgument
        );
        let frsd_name = CString::new("frsd").unwrap();
        // frsd requires alpha * beta < 1
        assert_eq!(
            frsd_run(graph, problem, frsd_name.as_ptr(), 0.5, 2.0, 10, 1, 0, &mut trace),
            FrsdStatus::InvalidArgument
        );

        assert_eq!(frsd_comm_size(frsd_name.as_ptr(), 25, 301), 326);
        assert_eq!(frsd_memory_size(bogus.as_ptr(), 25, 301), 0);

        frsd_problem_free(problem);
        frsd_graph_free(graph);
        frsd_graph_free(ptr::null_mut());
        frsd_string_free(ptr::null_mut());
    }
}
