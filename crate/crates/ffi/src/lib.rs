//! C interface to the fmhsdm toolkit.
//!
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Every fallible call returns an [`FmhStatus`];
//! on failure, [`fmh_last_error_message`] describes the error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fmhsdm::affine::{make_consensus_projection, make_hyperplane_projection, AffineFneMap};
use fmhsdm::bench::{gen_instance_seeded, ProblemKind};
use fmhsdm::objective::Problem;
use fmhsdm::solver::{self, SolverConfig, SolverTrace, Variant};
use fmhsdm::Error;

/// Result codes.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmhStatus {
    FMH_OK = 0,
    FMH_NULL_POINTER = 1,
    FMH_INVALID_ARGUMENT = 2,
    FMH_DIMENSION_MISMATCH = 3,
    FMH_UNSUPPORTED = 4,
    FMH_DIVERGENCE = 5,
    FMH_NUMERICAL = 6,
    FMH_PANIC = 7,
}

/// Solver variants.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FmhVariant {
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
}

impl From<FmhVariant> for Variant {
    fn from(v: FmhVariant) -> Self {
        match v {
            FmhVariant::FMH_FM_HSDM => Variant::FmHsdm,
            FmhVariant::FMH_FM_HSDM_G0 => Variant::FmHsdmG0,
            FmhVariant::FMH_FM_HSDM_F0 => Variant::FmHsdmF0,
            FmhVariant::FMH_FM_HSDM_III => Variant::FmHsdmIii,
            FmhVariant::FMH_HSDM => Variant::Hsdm,
            FmhVariant::FMH_HCGM => Variant::Hcgm,
            FmhVariant::FMH_ADMM => Variant::Admm,
            FmhVariant::FMH_PD_CONDAT => Variant::PdCondat,
            FmhVariant::FMH_PD_CP => Variant::PdCp,
            FmhVariant::FMH_FISTA => Variant::Fista,
        }
    }
}

/// Run parameters; baseline methods use their built-in defaults.
/// `variant` must hold one of the enumerators.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FmhRunOptions {
    pub variant: FmhVariant,
    pub alpha: f64,
    pub lambda: f64,
    pub max_iters: usize,
}

/// Opaque test problem.
pub struct FmhProblem(Problem);

/// Opaque solver trace.
pub struct FmhTrace(SolverTrace);

/// Opaque affine firmly nonexpansive map `x -> Q x + pi`.
pub struct FmhMap(AffineFneMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FmhStatus {
    match e {
        Error::DimensionMismatch { .. } => FmhStatus::FMH_DIMENSION_MISMATCH,
        Error::Divergence { .. } => FmhStatus::FMH_DIVERGENCE,
        Error::UnsupportedProblem(_) | Error::VariantMismatch(_) => FmhStatus::FMH_UNSUPPORTED,
        Error::EstimatorFailure { .. }
        | Error::NotPsd { .. }
        | Error::NotStronglyPositive { .. }
        | Error::EmptyFixedPointSet { .. }
        | Error::InfeasibleConstraint { .. }
        | Error::MetricCorruption(_) => FmhStatus::FMH_NUMERICAL,
        _ => FmhStatus::FMH_INVALID_ARGUMENT,
    }
}

// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), FmhStatusError>) -> FmhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FmhStatus::FMH_OK,
        Ok(Err(FmhStatusError(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            FmhStatus::FMH_PANIC
        }
    }
}

struct FmhStatusError(FmhStatus, String);

impl From<Error> for FmhStatusError {
    fn from(e: Error) -> Self {
        FmhStatusError(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> FmhStatusError {
    FmhStatusError(FmhStatus::FMH_NULL_POINTER, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], FmhStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], FmhStatusError> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn check_len(expected: usize, found: usize) -> Result<(), FmhStatusError> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found }.into())
    }
}

unsafe fn make_problem(kind: ProblemKind, d: usize, p11: f64, seed: u64, recast: bool, out: *mut *mut FmhProblem) -> FmhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let b = gen_instance_seeded(kind, d, p11, seed)?;
        let p = if recast { b.recast } else { b.native };
        *out = Box::into_raw(Box::new(FmhProblem(p)));
        Ok(())
    })
}

/// Builds the three-block quadratic test problem with ball constraints.
/// `recast != 0` selects the formulation with the quadratic moved into the prox term.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_iiduka(d: usize, p11: f64, seed: u64, recast: i32, out: *mut *mut FmhProblem) -> FmhStatus {
    make_problem(ProblemKind::Iiduka, d, p11, seed, recast != 0, out)
}

/// Builds the hyperplane-constrained quadratic test problem.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_hyperplane(d: usize, p11: f64, seed: u64, recast: i32, out: *mut *mut FmhProblem) -> FmhStatus {
    make_problem(ProblemKind::Hyperplane, d, p11, seed, recast != 0, out)
}

/// Dimension of the problem's variable, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_dim(problem: *const FmhProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.dim())
}

/// Lipschitz constant of the smooth term's gradient, or NaN for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_lipschitz(problem: *const FmhProblem) -> f64 {
    problem.as_ref().map_or(f64::NAN, |p| p.0.smooth().lipschitz())
}

/// Copies the known minimizer into `out[0..len]`.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_minimizer(problem: *const FmhProblem, out: *mut f64, len: usize) -> FmhStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let x = p.0.known_minimizer().ok_or_else(|| Error::MissingData("no known minimizer".into()))?;
        check_len(x.len(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(x);
        Ok(())
    })
}

/// Draws a point on the unit sphere around the minimizer from a stream seeded with `seed`.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_initial_point(problem: *const FmhProblem, seed: u64, out: *mut f64, len: usize) -> FmhStatus {
    guard(|| {
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        check_len(p.0.dim(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(&solver::seeded_initial_point(&p.0, seed));
        Ok(())
    })
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmh_problem_free(problem: *mut FmhProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Checks `alpha` and `lambda` against the admissible range of `variant`.
#[no_mangle]
pub extern "C" fn fmh_validate_step_size(variant: FmhVariant, alpha: f64, lambda: f64, lipschitz: f64) -> FmhStatus {
    guard(|| Ok(solver::validate_step_size(variant.into(), alpha, lambda, lipschitz)?))
}

/// Runs a solver from `x0[0..len]`.
///
/// # Safety
/// `problem` and `options` must be live, `x0` valid for `len` reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_run(
    problem: *const FmhProblem,
    options: *const FmhRunOptions,
    x0: *const f64,
    len: usize,
    out: *mut *mut FmhTrace,
) -> FmhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let o = options.as_ref().ok_or_else(|| null("options"))?;
        let x0 = slice(x0, len, "x0")?;
        let config = SolverConfig::new(o.variant.into(), o.alpha, o.lambda, o.max_iters);
        let trace = solver::run(&p.0, &config, x0)?;
        *out = Box::into_raw(Box::new(FmhTrace(trace)));
        Ok(())
    })
}

/// Number of recorded iterates (iterations + 1), or 0 for a null handle.
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmh_trace_len(trace: *const FmhTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.0.records.len())
}

/// Copies `||x_n - x*||` for every recorded `n` into `out[0..len]`.
///
/// # Safety
/// `trace` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_trace_distances(trace: *const FmhTrace, out: *mut f64, len: usize) -> FmhStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        check_len(t.0.records.len(), len)?;
        let d = t.0.distances().ok_or_else(|| Error::MissingData("problem has no known minimizer".into()))?;
        slice_mut(out, len, "out")?.copy_from_slice(&d);
        Ok(())
    })
}

/// Copies the last iterate into `out[0..len]`.
///
/// # Safety
/// `trace` must be live and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_trace_final_iterate(trace: *const FmhTrace, out: *mut f64, len: usize) -> FmhStatus {
    guard(|| {
        let t = trace.as_ref().ok_or_else(|| null("trace"))?;
        check_len(t.0.final_iterate.len(), len)?;
        slice_mut(out, len, "out")?.copy_from_slice(&t.0.final_iterate);
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmh_trace_free(trace: *mut FmhTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Projection onto the hyperplane `{x : <a, x> = b}`.
///
/// # Safety
/// `a` must be valid for `len` reads and `out` for writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_map_hyperplane(a: *const f64, len: usize, b: f64, out: *mut *mut FmhMap) -> FmhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = make_hyperplane_projection(slice(a, len, "a")?, b)?;
        *out = Box::into_raw(Box::new(FmhMap(m)));
        Ok(())
    })
}

/// Projection onto the consensus subspace of `blocks` copies of a `block_dim` vector.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_map_consensus(blocks: usize, block_dim: usize, out: *mut *mut FmhMap) -> FmhStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = make_consensus_projection(blocks, block_dim)?;
        *out = Box::into_raw(Box::new(FmhMap(m)));
        Ok(())
    })
}

/// Dimension of the map, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fmh_map_dim(map: *const FmhMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.dim())
}

/// Writes `T x` into `out`; both buffers hold `len` values and may not overlap.
///
/// # Safety
/// `map` must be live, `x` valid for `len` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fmh_map_apply(map: *const FmhMap, x: *const f64, out: *mut f64, len: usize) -> FmhStatus {
    guard(|| {
        let m = map.as_ref().ok_or_else(|| null("map"))?;
        check_len(m.0.dim(), len)?;
        let x = slice(x, len, "x")?;
        let y = slice_mut(out, len, "out")?;
        m.0.apply_into(x, y);
        Ok(())
    })
}

/// # Safety
/// `map` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fmh_map_free(map: *mut FmhMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Message of the last failed call on this thread, or null if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fmh_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}
