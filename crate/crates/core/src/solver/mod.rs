//! The FM-HSDM family and baseline solvers behind one run-to-trace interface.

mod baseline;
mod fm;
mod trace;

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm};
use crate::objective::Problem;

pub use trace::{IterRecord, Observer, SolverTrace, Step};

/// Iterates with norm above this abort the run.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    FmHsdm,
    FmHsdmG0,
    FmHsdmF0,
    FmHsdmIii,
    Hsdm,
    Hcgm,
    Admm,
    PdCondat,
    PdCp,
    Fista,
}

impl Variant {
    pub const ALL: [Variant; 10] = [
        Variant::FmHsdm,
        Variant::FmHsdmG0,
        Variant::FmHsdmF0,
        Variant::FmHsdmIii,
        Variant::Hsdm,
        Variant::Hcgm,
        Variant::Admm,
        Variant::PdCondat,
        Variant::PdCp,
        Variant::Fista,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::FmHsdm => "fm-hsdm",
            Variant::FmHsdmG0 => "fm-hsdm-g0",
            Variant::FmHsdmF0 => "fm-hsdm-f0",
            Variant::FmHsdmIii => "fm-hsdm-iii",
            Variant::Hsdm => "hsdm",
            Variant::Hcgm => "hcgm",
            Variant::Admm => "admm",
            Variant::PdCondat => "pd-condat",
            Variant::PdCp => "pd-cp",
            Variant::Fista => "fista",
        }
    }

    pub fn is_fm_hsdm(self) -> bool {
        matches!(
            self,
            Variant::FmHsdm | Variant::FmHsdmG0 | Variant::FmHsdmF0 | Variant::FmHsdmIii
        )
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown solver variant `{s}`")))
    }
}

/// Parameters of the baseline methods. `None` selects a default derived from
/// the problem's Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    /// HSDM schedule `lambda_n = c / (n + 1)`; default `2 (1 - alpha) / L`.
    pub hsdm_c: Option<f64>,
    /// HCGM step multiplier; default `1 / L`.
    pub hcgm_mu: Option<f64>,
    /// ADMM penalty.
    pub admm_rho: f64,
    /// Primal step; default depends on the method (see `pd_sigma`).
    pub pd_tau: Option<f64>,
    /// Dual step.
    pub pd_sigma: f64,
    /// Strong-convexity modulus driving the Chambolle-Pock step acceleration.
    pub cp_gamma: f64,
    /// FISTA step; default `1 / L`.
    pub fista_step: Option<f64>,
}

impl Default for BaselineParams {
    fn default() -> Self {
        BaselineParams {
            hsdm_c: None,
            hcgm_mu: None,
            admm_rho: 1.0,
            pd_tau: None,
            pd_sigma: 1.0,
            cp_gamma: 0.0,
            fista_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub variant: Variant,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub lambda: f64,
    pub max_iters: usize,
    /// Record dual iterates and half-iterates for certificate checks.
    #[serde(default)]
    pub record_certificates: bool,
    /// Keep every iterate `x_n` in the trace.
    #[serde(default)]
    pub store_iterates: bool,
    /// Stop once `||x_{n+1} - x_n||` and `||(I - T) x_{n+1}||` both fall below this.
    #[serde(default)]
    pub early_stop: Option<f64>,
    #[serde(default)]
    pub baseline: BaselineParams,
}

fn default_alpha() -> f64 {
    0.5
}

impl SolverConfig {
    pub fn new(variant: Variant, alpha: f64, lambda: f64, max_iters: usize) -> Self {
        SolverConfig {
            variant,
            alpha,
            lambda,
            max_iters,
            record_certificates: false,
            store_iterates: false,
            early_stop: None,
            baseline: BaselineParams::default(),
        }
    }

    pub fn with_certificates(mut self) -> Self {
        self.record_certificates = true;
        self
    }

    pub fn with_baseline(mut self, baseline: BaselineParams) -> Self {
        self.baseline = baseline;
        self
    }
}

/// Checks `alpha` and `lambda` against the admissible ranges of each FM-HSDM variant.
///
/// `alpha` must lie in `[0.5, 1)`. The step must satisfy `0 < lambda < 2 (1 - alpha) / L`
/// for `fm-hsdm` and `fm-hsdm-g0`, `0 < lambda < 2 (1 - alpha)^2 / L` for
/// `fm-hsdm-iii`, and `lambda > 0` for `fm-hsdm-f0`. Baselines only need `lambda > 0`.
pub fn validate_step_size(variant: Variant, alpha: f64, lambda: f64, lipschitz: f64) -> Result<()> {
    if !(lipschitz > 0.0) {
        return Err(Error::param("L", lipschitz, "> 0"));
    }
    if !(0.5..1.0).contains(&alpha) {
        return Err(Error::param("alpha", alpha, "in [0.5, 1)"));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", lambda, "> 0"));
    }
    let bound = match variant {
        Variant::FmHsdm | Variant::FmHsdmG0 => Some((2.0 * (1.0 - alpha) / lipschitz, "2(1 - alpha)/L")),
        Variant::FmHsdmIii => Some((2.0 * (1.0 - alpha).powi(2) / lipschitz, "2(1 - alpha)^2/L")),
        _ => None,
    };
    match bound {
        Some((b, label)) if lambda >= b => Err(Error::param("lambda", lambda, format!("< {label} = {b}"))),
        _ => Ok(()),
    }
}

/// Runs `config.variant` on `problem` from `x0`.
pub fn run(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    run_observed(problem, config, x0, None)
}

/// Like [`run`], but streams each FM-HSDM step (with its dual iterate) to
/// `observer` instead of storing certificate data in the trace. Baselines
/// never call the observer.
pub fn run_observed<'a>(
    problem: &'a Problem,
    config: &SolverConfig,
    x0: &[f64],
    observer: Option<Observer<'a>>,
) -> Result<SolverTrace> {
    check_dim(problem.dim(), x0.len())?;
    if let Some(index) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if config.max_iters == 0 {
        return Err(Error::param("max_iters", 0.0, ">= 1"));
    }
    match config.variant {
        Variant::FmHsdm | Variant::FmHsdmG0 | Variant::FmHsdmF0 | Variant::FmHsdmIii => {
            fm::run(problem, config, x0, observer)
        }
        Variant::Hsdm => baseline::hsdm(problem, config, x0),
        Variant::Hcgm => baseline::hcgm(problem, config, x0),
        Variant::Admm => baseline::admm(problem, config, x0),
        Variant::PdCondat => baseline::pd_condat(problem, config, x0),
        Variant::PdCp => baseline::pd_cp(problem, config, x0),
        Variant::Fista => baseline::fista(problem, config, x0),
    }
}

pub fn run_fm_hsdm(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    run(problem, &SolverConfig { variant: Variant::FmHsdm, ..config.clone() }, x0)
}

pub fn run_fm_hsdm_g0(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    run(problem, &SolverConfig { variant: Variant::FmHsdmG0, ..config.clone() }, x0)
}

pub fn run_fm_hsdm_f0(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    run(problem, &SolverConfig { variant: Variant::FmHsdmF0, ..config.clone() }, x0)
}

pub fn run_fm_hsdm_iii(problem: &Problem, config: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    run(problem, &SolverConfig { variant: Variant::FmHsdmIii, ..config.clone() }, x0)
}

/// A point drawn uniformly from the unit sphere centered at the known
/// minimizer, or the origin when no minimizer is attached.
pub fn initial_point<R: Rng + ?Sized>(problem: &Problem, rng: &mut R) -> Vec<f64> {
    let Some(center) = problem.known_minimizer() else {
        return vec![0.0; problem.dim()];
    };
    let mut dir: Vec<f64> = (0..center.len()).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm(&dir);
    dir.iter_mut().for_each(|v| *v /= n);
    linalg::add(center, &dir)
}

/// [`initial_point`] drawn from a ChaCha8 stream seeded with `seed`.
pub fn seeded_initial_point(problem: &Problem, seed: u64) -> Vec<f64> {
    initial_point(problem, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_gate() {
        assert!(validate_step_size(Variant::FmHsdm, 0.5, 0.099, 10.0).is_ok());
        assert!(validate_step_size(Variant::FmHsdmG0, 0.5, 0.099, 10.0).is_ok());
        assert!(validate_step_size(Variant::FmHsdm, 0.5, 0.1, 10.0).is_err());
        assert!(validate_step_size(Variant::FmHsdmIii, 0.5, 0.0495, 10.0).is_ok());
        assert!(validate_step_size(Variant::FmHsdmIii, 0.5, 0.05, 10.0).is_err());
        assert!(validate_step_size(Variant::FmHsdmF0, 0.5, 100.0, 10.0).is_ok());
        assert!(validate_step_size(Variant::FmHsdmF0, 0.5, 0.0, 10.0).is_err());
        assert!(validate_step_size(Variant::FmHsdm, 1.0, 0.01, 10.0).is_err());
        assert!(validate_step_size(Variant::FmHsdm, 0.49, 0.01, 10.0).is_err());
    }

    #[test]
    fn bound_is_named() {
        let e = validate_step_size(Variant::FmHsdm, 0.5, 0.1, 10.0).unwrap_err();
        assert!(e.to_string().contains("2(1 - alpha)/L"), "{e}");
    }

    #[test]
    fn variant_names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("fm-hsdm-iv".parse::<Variant>().is_err());
    }
}
