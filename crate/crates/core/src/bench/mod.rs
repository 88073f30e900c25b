//! Monte-Carlo benchmark harness: every run draws a problem and one shared
//! initial point, runs each configured solver on it and records per-iterate
//! metrics; curves are then averaged uniformly over runs.

mod config;
mod output;
mod problems;
mod spec;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::certificate::{upsilon_residual, FejerTracker, OptimalPair, RateTracker, ThetaMetric};
use crate::error::{Error, Result};
use crate::solver::{initial_point, run_observed, SolverTrace, Step};

pub use config::ConfigLayer;
pub use output::{emit_plots, read_averaged_csv, AveragedRow};
pub use problems::{
    draw_diagonal, gen_instance, gen_instance_seeded, gen_problem_hyperplane, gen_problem_iiduka, hyperplane_from_diagonal,
    iiduka_from_diagonal, lift, BenchProblem, ProblemKind, P_MAX,
};
pub use spec::{Form, SolverOverrides, SolverSpec, DIMINISHING_STEP, RECAST_LAMBDA, SOLVER_NAMES, STEP_FRACTION};

pub const METRICS: [&str; 3] = ["distance", "objective_gap", "infeasible"];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub d: usize,
    pub p11: f64,
    pub runs: usize,
    pub iters: usize,
    pub solvers: Vec<SolverSpec>,
    pub base_seed: u64,
    pub output_dir: PathBuf,
    pub certificates: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d must be at least 2, got {}", self.d)));
        }
        if !(self.p11 > 0.0 && self.p11 <= 1.0) {
            return Err(Error::Config(format!("p11 must lie in (0, 1], got {}", self.p11)));
        }
        if self.runs == 0 || self.iters == 0 {
            return Err(Error::Config("runs and iters must be positive".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::Config("no solvers selected".into()));
        }
        for (i, s) in self.solvers.iter().enumerate() {
            if self.solvers[..i].iter().any(|t| t.name == s.name) {
                return Err(Error::Config(format!("solver `{}` listed twice", s.name)));
            }
            s.check_applicable(self.problem)?;
        }
        Ok(())
    }
}

/// Metrics of one solver trace. `objective_gap` may be negative at infeasible points.
#[derive(Debug, Clone, PartialEq)]
pub struct Curves {
    pub distance: Vec<f64>,
    pub objective_gap: Vec<f64>,
    pub infeasible: Vec<bool>,
}

impl Curves {
    fn from_trace(trace: &SolverTrace, optimum: f64) -> Self {
        Curves {
            distance: trace.records.iter().map(|r| r.distance.unwrap_or(f64::NAN)).collect(),
            objective_gap: trace.records.iter().map(|r| r.objective - optimum).collect(),
            infeasible: trace.records.iter().map(|r| !r.feasible).collect(),
        }
    }

    fn metric(&self, name: &str, n: usize) -> f64 {
        match name {
            "distance" => self.distance[n],
            "objective_gap" => self.objective_gap[n],
            _ => f64::from(u8::from(self.infeasible[n])),
        }
    }
}

/// Certificate results of one FM-HSDM run.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateSummary {
    pub fejer_max_relative_increment: f64,
    pub fejer_passed: bool,
    /// `(name, sup ratio, passed)` per rate series; per-iterate series carry an `iter_` prefix.
    pub rates: Vec<(String, f64, bool)>,
    pub rate_passed: bool,
    pub delta_y_monotone: Option<bool>,
    pub upsilon_residual: f64,
}

impl CertificateSummary {
    pub fn passed(&self) -> bool {
        self.fejer_passed && self.rate_passed
    }

    fn rows(&self) -> Vec<(String, f64)> {
        let flag = |b: bool| f64::from(u8::from(b));
        let mut rows = vec![
            ("fejer_max_relative_increment".to_string(), self.fejer_max_relative_increment),
            ("fejer_passed".to_string(), flag(self.fejer_passed)),
        ];
        for (name, ratio, passed) in &self.rates {
            rows.push((format!("rate_{name}_sup_ratio"), *ratio));
            rows.push((format!("rate_{name}_passed"), flag(*passed)));
        }
        rows.push(("rate_passed".to_string(), flag(self.rate_passed)));
        if let Some(m) = self.delta_y_monotone {
            rows.push(("delta_y_monotone".to_string(), flag(m)));
        }
        rows.push(("upsilon_residual".to_string(), self.upsilon_residual));
        rows
    }
}

#[derive(Debug, Clone)]
pub enum SolverResult {
    Finished { curves: Curves, certificates: Option<CertificateSummary> },
    Diverged { iteration: usize },
}

#[derive(Debug, Clone)]
pub struct SolverRun {
    pub name: String,
    pub result: SolverResult,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run: usize,
    pub seed: u64,
    pub x0_sha256: String,
    pub solvers: Vec<SolverRun>,
}

/// Uniform averages over the runs that did not abort.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverCurves {
    pub name: String,
    pub runs_used: usize,
    pub distance: Vec<f64>,
    pub objective_gap: Vec<f64>,
    pub infeasible: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub iters: usize,
    pub solvers: Vec<SolverCurves>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub curves: CurveSet,
    pub runs: Vec<RunOutcome>,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    /// `(solver, run, iteration)` of every aborted run.
    pub fn divergences(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for r in &self.runs {
            for s in &r.solvers {
                if let SolverResult::Diverged { iteration } = s.result {
                    out.push((s.name.clone(), r.run, iteration));
                }
            }
        }
        out
    }

    pub fn certificates(&self) -> impl Iterator<Item = (usize, &str, &CertificateSummary)> {
        self.runs.iter().flat_map(|r| {
            r.solvers.iter().filter_map(move |s| match &s.result {
                SolverResult::Finished { certificates: Some(c), .. } => Some((r.run, s.name.as_str(), c)),
                _ => None,
            })
        })
    }
}

fn hash_point(x: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in x {
        h.update(v.to_le_bytes());
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn run_solver(spec: &SolverSpec, bench: &BenchProblem, x0: &[f64], iters: usize, certificates: bool) -> Result<SolverResult> {
    let (problem, start) = match spec.form {
        Form::Native => (&bench.native, x0.to_vec()),
        Form::Recast => (&bench.recast, lift(x0, &bench.recast)),
    };
    let config = spec.config(problem, iters, certificates);
    let optimum = problem.optimal_value().unwrap_or(f64::NAN);
    let outcome = if config.record_certificates {
        let pair = OptimalPair::from_problem(problem, config.lambda)?;
        let metric = ThetaMetric::for_variant(problem.constraint(), config.variant, config.alpha)?;
        let mut fejer = FejerTracker::new(pair.clone(), metric);
        let mut rate = RateTracker::new(problem, config.variant, config.alpha, config.lambda)?;
        let mut residual = f64::NAN;
        let mut observer = |step: &Step<'_>| -> Result<()> {
            fejer.observe(step)?;
            rate.observe(step)?;
            if step.n == iters {
                residual = upsilon_residual(step.x, step.v, config.lambda, problem)?;
            }
            Ok(())
        };
        let silent = crate::solver::SolverConfig { record_certificates: false, ..config.clone() };
        run_observed(problem, &silent, &start, Some(&mut observer)).map(|trace| {
            let f = fejer.finish();
            let r = rate.finish();
            let summary = CertificateSummary {
                fejer_max_relative_increment: f.max_relative_increment,
                fejer_passed: f.passed,
                rates: r
                    .averaged
                    .iter()
                    .map(|s| (s.name.to_string(), s.sup_ratio, s.passed))
                    .chain(r.per_iterate.iter().map(|s| (format!("iter_{}", s.name), s.sup_ratio, s.passed)))
                    .collect(),
                rate_passed: r.passed(),
                delta_y_monotone: r.delta_y_monotone,
                upsilon_residual: residual,
            };
            (trace, Some(summary))
        })
    } else {
        run_observed(problem, &config, &start, None).map(|t| (t, None))
    };
    match outcome {
        Ok((trace, certificates)) => Ok(SolverResult::Finished { curves: Curves::from_trace(&trace, optimum), certificates }),
        Err(Error::Divergence { iteration }) => Ok(SolverResult::Diverged { iteration }),
        Err(e) => Err(e),
    }
}

fn run_once(config: &ExperimentConfig, run: usize) -> Result<RunOutcome> {
    let seed = config.base_seed.wrapping_add(run as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bench = gen_instance(config.problem, config.d, config.p11, &mut rng)?;
    let x0 = initial_point(&bench.native, &mut rng);
    let mut solvers = Vec::with_capacity(config.solvers.len());
    for spec in &config.solvers {
        let start = Instant::now();
        let result = run_solver(spec, &bench, &x0, config.iters, config.certificates)?;
        solvers.push(SolverRun { name: spec.name.clone(), result, seconds: start.elapsed().as_secs_f64() });
    }
    Ok(RunOutcome { run, seed, x0_sha256: hash_point(&x0), solvers })
}

fn average(config: &ExperimentConfig, runs: &[RunOutcome]) -> CurveSet {
    let len = config.iters + 1;
    let solvers = config
        .solvers
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let mut c = SolverCurves {
                name: spec.name.clone(),
                runs_used: 0,
                distance: vec![0.0; len],
                objective_gap: vec![0.0; len],
                infeasible: vec![0.0; len],
            };
            for r in runs {
                if let SolverResult::Finished { curves, .. } = &r.solvers[k].result {
                    c.runs_used += 1;
                    for n in 0..len {
                        c.distance[n] += curves.distance[n];
                        c.objective_gap[n] += curves.objective_gap[n];
                        c.infeasible[n] += f64::from(u8::from(curves.infeasible[n]));
                    }
                }
            }
            let inv = 1.0 / c.runs_used.max(1) as f64;
            for v in c.distance.iter_mut().chain(&mut c.objective_gap).chain(&mut c.infeasible) {
                *v *= inv;
            }
            c
        })
        .collect();
    CurveSet { iters: config.iters, solvers }
}

/// Runs the experiment in memory without writing files.
pub fn simulate(config: &ExperimentConfig) -> Result<(CurveSet, Vec<RunOutcome>)> {
    config.validate()?;
    let runs: Vec<RunOutcome> = (0..config.runs)
        .into_par_iter()
        .map(|r| run_once(config, r))
        .collect::<Result<_>>()?;
    Ok((average(config, &runs), runs))
}

/// Runs the experiment and writes `<solver>.csv`, `averaged.csv`, optional
/// `certificates.csv`, the `run.log` sidecar and one SVG plus gnuplot script per metric.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let started = Instant::now();
    let (curves, runs) = simulate(config)?;
    let mut files = Vec::new();
    for (k, spec) in config.solvers.iter().enumerate() {
        files.push(output::write_solver_csv(out, &spec.name, k, &runs)?);
    }
    let averaged = output::write_averaged_csv(out, &curves)?;
    files.push(averaged.clone());
    if config.certificates {
        files.push(output::write_certificates_csv(out, &runs)?);
    }
    files.push(write_log(out, config, &runs, started.elapsed().as_secs_f64())?);
    if curves.solvers.iter().any(|s| s.runs_used > 0) {
        files.extend(emit_plots(&averaged, out)?);
    }
    Ok(ExperimentReport { curves, runs, files })
}

fn write_log(out: &Path, config: &ExperimentConfig, runs: &[RunOutcome], seconds: f64) -> Result<PathBuf> {
    let mut log = String::new();
    let names: Vec<&str> = config.solvers.iter().map(|s| s.name.as_str()).collect();
    let _ = writeln!(
        log,
        "problem={} d={} p11={} runs={} iters={} base_seed={} certificates={} solvers={}",
        config.problem.name(),
        config.d,
        config.p11,
        config.runs,
        config.iters,
        config.base_seed,
        config.certificates,
        names.join(",")
    );
    for r in runs {
        let _ = writeln!(log, "run={} seed={} x0_sha256={}", r.run, r.seed, r.x0_sha256);
        for s in &r.solvers {
            match &s.result {
                SolverResult::Finished { .. } => {
                    let _ = writeln!(log, "  solver={} status=ok seconds={:.6}", s.name, s.seconds);
                }
                SolverResult::Diverged { iteration } => {
                    let _ = writeln!(
                        log,
                        "  solver={} status=diverged iteration={} seconds={:.6} (excluded from averages)",
                        s.name, iteration, s.seconds
                    );
                }
            }
        }
    }
    let _ = writeln!(log, "total_seconds={seconds:.3}");
    let path = out.join("run.log");
    std::fs::write(&path, log).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
