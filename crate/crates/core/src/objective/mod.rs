//! Smooth and proximable loss terms and the problems built from them.

mod problem;
mod terms;

use std::fmt::Debug;

pub use problem::{PointMetrics, Problem, Readout};
pub use terms::{
    make_ball_indicator, make_quadratic, make_quadratic_prox, make_separable_sum, make_zero_term,
    prox_objective, AffineSetIndicator, BallIndicator, Quadratic, QuadraticProx, SeparableSum, ZeroTerm,
};

/// Membership slack used by indicator terms.
pub const INDICATOR_SLACK: f64 = 1e-10;
/// Lipschitz constant reported by terms whose gradient vanishes identically.
pub const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// A convex differentiable loss with `L`-Lipschitz gradient.
pub trait SmoothTerm: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);
    fn lipschitz(&self) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.gradient_into(x, &mut g);
        g
    }

    /// True when the gradient vanishes identically.
    fn is_zero(&self) -> bool {
        false
    }
}

/// A convex, possibly extended-valued loss with a proximal oracle.
pub trait ProxTerm: Debug + Send + Sync {
    fn dim(&self) -> usize;

    /// Value in `R U {+inf}`.
    fn value(&self, x: &[f64]) -> f64;

    /// `prox_{lambda g}(x)` written into `out`; `out` must not alias `x`.
    fn prox_into(&self, lambda: f64, x: &[f64], out: &mut [f64]);

    /// Value with indicator contributions dropped.
    fn finite_part(&self, x: &[f64]) -> f64 {
        let v = self.value(x);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        self.value(x).is_finite()
    }

    fn prox(&self, lambda: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.prox_into(lambda, x, &mut out);
        out
    }

    /// True when `prox_{lambda g}` is the identity.
    fn is_zero(&self) -> bool {
        false
    }

    /// True when `prox_{lambda g}` does not depend on `lambda` (indicators).
    fn is_lambda_invariant(&self) -> bool {
        false
    }
}
