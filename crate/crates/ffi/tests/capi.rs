use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use fmhsdm_ffi::*;

fn last_error() -> String {
    let p = fmh_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn hyperplane_map_projects() {
    let a = [3.0, 4.0];
    let mut map = ptr::null_mut();
    unsafe {
        assert_eq!(fmh_map_hyperplane(a.as_ptr(), 2, 5.0, &mut map), FmhStatus::FMH_OK);
        assert_eq!(fmh_map_dim(map), 2);
        // <a, x> = 0 at the origin, so P(0) = (b / ||a||^2) a = a / 5
        let x = [0.0, 0.0];
        let mut y = [0.0; 2];
        assert_eq!(fmh_map_apply(map, x.as_ptr(), y.as_mut_ptr(), 2), FmhStatus::FMH_OK);
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 0.8).abs() < 1e-15);
        assert_eq!(fmh_map_apply(map, x.as_ptr(), y.as_mut_ptr(), 3), FmhStatus::FMH_DIMENSION_MISMATCH);
        assert!(last_error().contains("dimension"));
        fmh_map_free(map);
    }
}

#[test]
fn consensus_map_averages() {
    let mut map = ptr::null_mut();
    unsafe {
        assert_eq!(fmh_map_consensus(2, 2, &mut map), FmhStatus::FMH_OK);
        let x = [1.0, 2.0, 3.0, 6.0];
        let mut y = [0.0; 4];
        assert_eq!(fmh_map_apply(map, x.as_ptr(), y.as_mut_ptr(), 4), FmhStatus::FMH_OK);
        assert_eq!(y, [2.0, 4.0, 2.0, 4.0]);
        fmh_map_free(map);
    }
}

#[test]
fn run_reaches_minimizer() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(fmh_problem_iiduka(20, 1.0, 3, 0, &mut problem), FmhStatus::FMH_OK);
        let n = fmh_problem_dim(problem);
        assert_eq!(n, 60);
        assert_eq!(fmh_problem_lipschitz(problem), 10.0);
        let mut x0 = vec![0.0; n];
        assert_eq!(fmh_initial_point(problem, 11, x0.as_mut_ptr(), n), FmhStatus::FMH_OK);

        let opts = FmhRunOptions { variant: FmhVariant::FMH_FM_HSDM, alpha: 0.5, lambda: 0.099, max_iters: 2000 };
        let mut trace = ptr::null_mut();
        assert_eq!(fmh_run(problem, &opts, x0.as_ptr(), n, &mut trace), FmhStatus::FMH_OK);
        let len = fmh_trace_len(trace);
        assert_eq!(len, 2001);
        let mut dist = vec![0.0; len];
        assert_eq!(fmh_trace_distances(trace, dist.as_mut_ptr(), len), FmhStatus::FMH_OK);
        assert!((dist[0] - 1.0).abs() < 1e-12);
        assert!(dist[len - 1] < 1e-8);

        let mut xs = vec![0.0; n];
        let mut x = vec![0.0; n];
        assert_eq!(fmh_problem_minimizer(problem, xs.as_mut_ptr(), n), FmhStatus::FMH_OK);
        assert_eq!(fmh_trace_final_iterate(trace, x.as_mut_ptr(), n), FmhStatus::FMH_OK);
        let err: f64 = x.iter().zip(&xs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!((err - dist[len - 1]).abs() < 1e-15);
        fmh_trace_free(trace);
        fmh_problem_free(problem);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut problem = ptr::null_mut();
        assert_eq!(fmh_problem_iiduka(20, 2.0, 0, 0, &mut problem), FmhStatus::FMH_INVALID_ARGUMENT);
        assert!(problem.is_null());
        assert!(last_error().contains("p11"));
        assert_eq!(fmh_problem_iiduka(20, 1.0, 0, 0, ptr::null_mut()), FmhStatus::FMH_NULL_POINTER);

        assert_eq!(fmh_problem_iiduka(20, 1.0, 0, 0, &mut problem), FmhStatus::FMH_OK);
        let x0 = vec![0.0; 60];
        let mut trace = ptr::null_mut();
        let bad_step = FmhRunOptions { variant: FmhVariant::FMH_FM_HSDM, alpha: 0.5, lambda: 0.1, max_iters: 10 };
        assert_eq!(fmh_run(problem, &bad_step, x0.as_ptr(), 60, &mut trace), FmhStatus::FMH_INVALID_ARGUMENT);
        assert!(last_error().contains("2(1 - alpha)/L"));
        let fista = FmhRunOptions { variant: FmhVariant::FMH_FISTA, alpha: 0.5, lambda: 1.0, max_iters: 10 };
        assert_eq!(fmh_run(problem, &fista, x0.as_ptr(), 60, &mut trace), FmhStatus::FMH_UNSUPPORTED);
        assert!(trace.is_null());
        let ok = FmhRunOptions { max_iters: 10, ..bad_step };
        assert_eq!(fmh_run(problem, &ok, x0.as_ptr(), 59, &mut trace), FmhStatus::FMH_DIMENSION_MISMATCH);
        fmh_problem_free(problem);

        fmh_problem_free(ptr::null_mut());
        fmh_trace_free(ptr::null_mut());
        fmh_map_free(ptr::null_mut());
        assert_eq!(fmh_trace_len(ptr::null()), 0);
    }
}

#[test]
fn step_size_gate() {
    use FmhVariant::*;
    assert_eq!(fmh_validate_step_size(FMH_FM_HSDM, 0.5, 0.099, 10.0), FmhStatus::FMH_OK);
    assert_eq!(fmh_validate_step_size(FMH_FM_HSDM, 0.5, 0.1, 10.0), FmhStatus::FMH_INVALID_ARGUMENT);
    assert_eq!(fmh_validate_step_size(FMH_FM_HSDM_III, 0.5, 0.0495, 10.0), FmhStatus::FMH_OK);
    assert_eq!(fmh_validate_step_size(FMH_FM_HSDM_F0, 0.5, 100.0, 10.0), FmhStatus::FMH_OK);
}

#[test]
fn header_declares_the_api() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/fmhsdm.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in [
        "fmh_problem_iiduka",
        "fmh_problem_hyperplane",
        "fmh_problem_free",
        "fmh_run",
        "fmh_trace_distances",
        "fmh_trace_free",
        "fmh_validate_step_size",
        "fmh_map_apply",
        "fmh_last_error_message",
        "typedef struct FmhProblem FmhProblem;",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    // Compile check when a C compiler is around.
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
