use std::time::Instant;

use super::{SolverConfig, Variant, DIVERGENCE_BOUND};
use crate::error::{Error, Result};
use crate::linalg::{self, norm};
use crate::objective::Problem;

/// Quantities recorded for one iterate `x_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    pub n: usize,
    /// `||x_n - x*||` when the minimizer is known.
    pub distance: Option<f64>,
    /// `f(x_n) + g(x_n)` with indicator terms dropped.
    pub objective: f64,
    /// Whether `x_n` satisfies every indicator term of `g`.
    pub feasible: bool,
    /// `||(I - T) x_n||`.
    pub fp_residual: f64,
    /// Seconds since the run started.
    pub elapsed: f64,
}

/// Everything a run produced. `records[n]` describes `x_n`, starting from `x_0`.
#[derive(Debug, Clone)]
pub struct SolverTrace {
    pub variant: Variant,
    pub alpha: f64,
    pub lambda: f64,
    pub records: Vec<IterRecord>,
    /// `x_n`, when iterates or certificates were requested.
    pub iterates: Vec<Vec<f64>>,
    /// `half_iterates[k] = x_{k+1/2}`, the point whose prox is `x_{k+1}`
    /// (FM-HSDM variants with certificates only).
    pub half_iterates: Vec<Vec<f64>>,
    /// `duals[n] = v_n` with `v_0 = 0` (FM-HSDM variants with certificates only).
    pub duals: Vec<Vec<f64>>,
    pub final_iterate: Vec<f64>,
    pub stopped_early: bool,
}

impl SolverTrace {
    /// Number of iterations executed.
    pub fn iterations(&self) -> usize {
        self.records.len() - 1
    }

    pub fn distances(&self) -> Option<Vec<f64>> {
        self.records.iter().map(|r| r.distance).collect()
    }

    pub fn has_certificates(&self) -> bool {
        !self.duals.is_empty()
    }
}

/// One FM-HSDM step as seen by an observer: `x_n`, the half-iterate
/// `x_{n-1/2}` it was computed from (absent for `n = 0`) and `v_n`.
#[derive(Debug, Clone, Copy)]
pub struct Step<'s> {
    pub n: usize,
    pub x: &'s [f64],
    pub half: Option<&'s [f64]>,
    pub v: &'s [f64],
}

/// Callback receiving every [`Step`] of an FM-HSDM run.
pub type Observer<'o> = &'o mut dyn FnMut(&Step<'_>) -> Result<()>;

pub(crate) struct Recorder<'a> {
    problem: &'a Problem,
    observer: Option<Observer<'a>>,
    early_stop: Option<f64>,
    keep_iterates: bool,
    certificates: bool,
    track_duals: bool,
    start: Instant,
    trace: SolverTrace,
    scratch: Vec<f64>,
    last_fp: f64,
}

impl<'a> Recorder<'a> {
    pub fn new(problem: &'a Problem, config: &SolverConfig) -> Self {
        Self::with_observer(problem, config, None)
    }

    /// With an observer attached, certificate data is streamed to it instead
    /// of being stored in the trace.
    pub fn with_observer(problem: &'a Problem, config: &SolverConfig, observer: Option<Observer<'a>>) -> Self {
        let certificates = config.record_certificates && config.variant.is_fm_hsdm();
        let stream = observer.is_some();
        Recorder {
            problem,
            observer,
            early_stop: config.early_stop,
            keep_iterates: config.store_iterates || (certificates && !stream),
            certificates: certificates && !stream,
            track_duals: certificates || stream,
            start: Instant::now(),
            trace: SolverTrace {
                variant: config.variant,
                alpha: config.alpha,
                lambda: config.lambda,
                records: Vec::with_capacity(config.max_iters + 1),
                iterates: Vec::new(),
                half_iterates: Vec::new(),
                duals: Vec::new(),
                final_iterate: Vec::new(),
                stopped_early: false,
            },
            scratch: vec![0.0; problem.dim()],
            last_fp: f64::INFINITY,
        }
    }

    /// Whether the driver must maintain the dual sequence.
    pub fn track_duals(&self) -> bool {
        self.track_duals
    }

    pub fn emit(&mut self, step: Step<'_>) -> Result<()> {
        match self.observer.as_mut() {
            Some(obs) => obs(&step),
            None => Ok(()),
        }
    }

    /// Records `x_n`; `tx` is `T x_n` when the caller already has it.
    pub fn push(&mut self, n: usize, x: &[f64], tx: Option<&[f64]>) -> Result<()> {
        let nx = norm(x);
        if !nx.is_finite() || nx > DIVERGENCE_BOUND {
            return Err(Error::Divergence { iteration: n });
        }
        let fp_residual = match tx {
            Some(t) => linalg::dist(x, t),
            None => {
                self.problem.constraint().apply_into(x, &mut self.scratch);
                linalg::dist(x, &self.scratch)
            }
        };
        self.last_fp = fp_residual;
        let m = self.problem.metrics(x);
        self.trace.records.push(IterRecord {
            n,
            distance: m.distance,
            objective: m.objective,
            feasible: m.feasible,
            fp_residual,
            elapsed: self.start.elapsed().as_secs_f64(),
        });
        if self.keep_iterates {
            self.trace.iterates.push(x.to_vec());
        }
        Ok(())
    }

    pub fn push_half(&mut self, half: &[f64]) {
        if self.certificates {
            self.trace.half_iterates.push(half.to_vec());
        }
    }

    pub fn push_dual(&mut self, v: &[f64]) {
        if self.certificates {
            self.trace.duals.push(v.to_vec());
        }
    }

    /// Early-stop test on the step just taken, using the residual of the last push.
    pub fn converged(&mut self, step: f64) -> bool {
        match self.early_stop {
            Some(eps) if step <= eps && self.last_fp <= eps => {
                self.trace.stopped_early = true;
                true
            }
            _ => false,
        }
    }

    pub fn finish(mut self, x: Vec<f64>) -> SolverTrace {
        self.trace.final_iterate = x;
        self.trace
    }
}
