use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{dot, SymOperator};
use crate::error::{Error, Result};

const PROBES: usize = 100;
const PROBE_SEED: u64 = 0x005e_eda4;

/// Worst-case margins of the three strong-positivity inequalities.
///
/// Each margin is `upper - lower` for its inequality, normalized by `||x||^2`
/// for the quadratic-form bounds; all three are nonnegative when the bounds hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongPositivityReport {
    /// `1/delta - ||op^-1||`
    pub inverse_norm_margin: f64,
    /// `min_x <op^-1 x, x>/||x||^2 - delta/||op||^2`
    pub lower_margin: f64,
    /// `min_x 1/delta - <op^-1 x, x>/||x||^2`
    pub upper_margin: f64,
    pub probes: usize,
}

impl StrongPositivityReport {
    /// All margins nonnegative up to `tol` (absolute, on the normalized scale).
    pub fn holds(&self, tol: f64) -> bool {
        self.inverse_norm_margin >= -tol && self.lower_margin >= -tol && self.upper_margin >= -tol
    }
}

/// Numerically checks the bounds on `op^-1` implied by `op >= delta * I`.
pub fn check_strongly_positive_inverse(op: &SymOperator, delta: f64) -> Result<StrongPositivityReport> {
    if !(delta > 0.0) {
        return Err(Error::param("delta", delta, "> 0"));
    }
    let min_eig = op.min_eigenvalue()?;
    if min_eig < delta - 1e-10 {
        return Err(Error::NotStronglyPositive {
            min_eigenvalue: min_eig,
            delta,
        });
    }
    let norm = op.spectral_norm()?;
    let inv = op.inverse()?;
    let lower = delta / (norm * norm);
    let upper = 1.0 / delta;

    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let n = op.dim();
    let mut lower_margin = f64::INFINITY;
    let mut upper_margin = f64::INFINITY;
    for _ in 0..PROBES {
        let x: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let nx2 = dot(&x, &x);
        if nx2 == 0.0 {
            continue;
        }
        let q = inv.quadratic_form(&x) / nx2;
        lower_margin = lower_margin.min(q - lower);
        upper_margin = upper_margin.min(upper - q);
    }
    Ok(StrongPositivityReport {
        inverse_norm_margin: upper - inv.spectral_norm()?,
        lower_margin,
        upper_margin,
        probes: PROBES,
    })
}
