//! Named solver configurations used by the harness.

use serde::{Deserialize, Serialize};

use super::problems::ProblemKind;
use crate::error::{Error, Result};
use crate::objective::Problem;
use crate::solver::{BaselineParams, SolverConfig, Variant};

/// Fraction of the largest admissible step used by default.
pub const STEP_FRACTION: f64 = 0.99;
/// Default step of the `f = 0` variant on the product-space problems.
pub const RECAST_LAMBDA: f64 = 100.0;
/// Harness default for the HSDM schedule constant and the HCGM step multiplier,
/// tuned on the three-block problem with `d = 200`.
pub const DIMINISHING_STEP: f64 = 1.0;

/// Which formulation of a test problem a solver runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Native,
    Recast,
}

/// Per-solver overrides; unset fields keep the harness defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOverrides {
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub hsdm_c: Option<f64>,
    pub hcgm_mu: Option<f64>,
    pub admm_rho: Option<f64>,
    pub pd_tau: Option<f64>,
    pub pd_sigma: Option<f64>,
    pub cp_gamma: Option<f64>,
    pub fista_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSpec {
    pub name: String,
    pub variant: Variant,
    pub form: Form,
    pub overrides: SolverOverrides,
}

pub const SOLVER_NAMES: [&str; 10] = [
    "fm-hsdm",
    "fm-hsdm-ii",
    "fm-hsdm-iii",
    "hsdm",
    "hcgm",
    "admm",
    "pd-condat",
    "pd-condat-ii",
    "pd-cp",
    "fista",
];

impl SolverSpec {
    pub fn parse(name: &str) -> Result<Self> {
        let (variant, form) = match name {
            "fm-hsdm" => (Variant::FmHsdm, Form::Native),
            "fm-hsdm-ii" => (Variant::FmHsdmF0, Form::Recast),
            "fm-hsdm-iii" => (Variant::FmHsdmIii, Form::Native),
            "hsdm" => (Variant::Hsdm, Form::Native),
            "hcgm" => (Variant::Hcgm, Form::Native),
            "admm" => (Variant::Admm, Form::Recast),
            "pd-condat" => (Variant::PdCondat, Form::Native),
            "pd-condat-ii" => (Variant::PdCondat, Form::Recast),
            "pd-cp" => (Variant::PdCp, Form::Recast),
            "fista" => (Variant::Fista, Form::Native),
            other => {
                return Err(Error::Config(format!(
                    "unknown solver `{other}` (expected one of {})",
                    SOLVER_NAMES.join(", ")
                )))
            }
        };
        Ok(SolverSpec { name: name.to_string(), variant, form, overrides: SolverOverrides::default() })
    }

    pub fn with_overrides(mut self, overrides: SolverOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// Rejects solvers whose requirements the problem cannot meet.
    pub fn check_applicable(&self, kind: ProblemKind) -> Result<()> {
        match (self.variant, kind) {
            (Variant::FmHsdmIii | Variant::Fista, ProblemKind::Iiduka) => Err(Error::Config(format!(
                "`{}` needs g = 0 and does not apply to the {} problem",
                self.name,
                kind.name()
            ))),
            _ => Ok(()),
        }
    }

    /// The solver configuration for a run on `problem` (already in this spec's form).
    pub fn config(&self, problem: &Problem, iters: usize, certificates: bool) -> SolverConfig {
        let o = &self.overrides;
        let alpha = o.alpha.unwrap_or(0.5);
        let lipschitz = problem.smooth().lipschitz();
        let lambda = match (o.lambda, self.variant) {
            (Some(l), _) => l,
            (None, Variant::FmHsdm | Variant::FmHsdmG0) => STEP_FRACTION * 2.0 * (1.0 - alpha) / lipschitz,
            (None, Variant::FmHsdmIii) => STEP_FRACTION * 2.0 * (1.0 - alpha).powi(2) / lipschitz,
            (None, Variant::FmHsdmF0) => RECAST_LAMBDA,
            (None, _) => 1.0,
        };
        let defaults = BaselineParams::default();
        let baseline = BaselineParams {
            hsdm_c: Some(o.hsdm_c.unwrap_or(DIMINISHING_STEP)),
            hcgm_mu: Some(o.hcgm_mu.unwrap_or(DIMINISHING_STEP)),
            admm_rho: o.admm_rho.unwrap_or(defaults.admm_rho),
            pd_tau: o.pd_tau,
            pd_sigma: o.pd_sigma.unwrap_or(defaults.pd_sigma),
            cp_gamma: o.cp_gamma.unwrap_or(defaults.cp_gamma),
            fista_step: o.fista_step,
        };
        let mut cfg = SolverConfig::new(self.variant, alpha, lambda, iters).with_baseline(baseline);
        cfg.record_certificates = certificates && self.variant.is_fm_hsdm();
        cfg
    }
}
