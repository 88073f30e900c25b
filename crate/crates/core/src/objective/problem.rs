use std::borrow::Cow;
use std::sync::Arc;

use super::{ProxTerm, SmoothTerm};
use crate::affine::{AffineFneMap, FIXED_POINT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm, BlockLayout, Vector};

/// Maps iterates of a product-space reformulation back to the original problem.
///
/// The reformulated variable holds `blocks` copies of the original one; the
/// readout is their mean, and metrics are evaluated on `native`.
#[derive(Debug, Clone)]
pub struct Readout {
    pub blocks: usize,
    pub native: Arc<Problem>,
}

/// `min f(x) + g(x)` subject to `x in Fix T`.
#[derive(Debug, Clone)]
pub struct Problem {
    smooth: Arc<dyn SmoothTerm>,
    prox: Arc<dyn ProxTerm>,
    constraint: AffineFneMap,
    layout: BlockLayout,
    known_minimizer: Option<Vector>,
    kkt_subgradient: Option<Vector>,
    readout: Option<Readout>,
}

/// Per-iterate quantities reported in solver traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    pub distance: Option<f64>,
    /// `f(x) + g(x)` with indicator terms dropped.
    pub objective: f64,
    /// Whether every indicator term of `g` is satisfied within its slack.
    pub feasible: bool,
}

impl Problem {
    pub fn new(
        smooth: Arc<dyn SmoothTerm>,
        prox: Arc<dyn ProxTerm>,
        constraint: AffineFneMap,
        layout: BlockLayout,
    ) -> Result<Self> {
        let n = constraint.dim();
        check_dim(n, smooth.dim())?;
        check_dim(n, prox.dim())?;
        check_dim(n, layout.total_dim())?;
        Ok(Problem {
            smooth,
            prox,
            constraint,
            layout,
            known_minimizer: None,
            kkt_subgradient: None,
            readout: None,
        })
    }

    /// Attaches the exact minimizer; it must lie in `Fix T`.
    pub fn with_minimizer(mut self, x: Vector) -> Result<Self> {
        check_dim(self.dim(), x.len())?;
        let r = self.constraint.fixed_point_residual(&x);
        if r > FIXED_POINT_TOL {
            return Err(Error::Malformed(format!(
                "known minimizer is not a fixed point of the constraint map (residual {r:e})"
            )));
        }
        self.known_minimizer = Some(x);
        Ok(self)
    }

    /// Attaches `s = grad f(x*) + xi*` with `xi* in dg(x*)` chosen so that
    /// `s` lies in the range of `U = sqrt(I - Q)`.
    pub fn with_kkt_subgradient(mut self, s: Vector) -> Result<Self> {
        check_dim(self.dim(), s.len())?;
        self.kkt_subgradient = Some(s);
        Ok(self)
    }

    pub fn with_readout(mut self, readout: Readout) -> Result<Self> {
        check_dim(self.dim(), readout.blocks * readout.native.dim())?;
        self.readout = Some(readout);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.constraint.dim()
    }

    pub fn smooth(&self) -> &dyn SmoothTerm {
        self.smooth.as_ref()
    }

    pub fn prox(&self) -> &dyn ProxTerm {
        self.prox.as_ref()
    }

    pub fn constraint(&self) -> &AffineFneMap {
        &self.constraint
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn known_minimizer(&self) -> Option<&Vector> {
        self.known_minimizer.as_ref()
    }

    pub fn kkt_subgradient(&self) -> Option<&Vector> {
        self.kkt_subgradient.as_ref()
    }

    pub fn readout(&self) -> Option<&Readout> {
        self.readout.as_ref()
    }

    /// `f(x) + g(x)` with indicators dropped.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth.value(x) + self.prox.finite_part(x)
    }

    /// The dual point `v* = -lambda U^+ s` paired with the known minimizer.
    pub fn dual_witness(&self, lambda: f64) -> Result<Vector> {
        let s = self
            .kkt_subgradient
            .as_ref()
            .ok_or_else(|| Error::MissingData("problem has no KKT subgradient".into()))?;
        let u = self.constraint.sqrt_i_minus_q()?;
        let v = linalg::scale(&u.pseudo_inverse(1e-10)?.apply(s), -lambda);
        let back = u.apply(&v);
        let err = back.iter().zip(s.iter()).map(|(b, si)| (b + lambda * si).powi(2)).sum::<f64>().sqrt();
        if err > 1e-8 * (1.0 + lambda * norm(s)) {
            return Err(Error::Malformed(format!(
                "KKT subgradient is not in the range of U (residual {err:e})"
            )));
        }
        Vector::new(v)
    }

    /// The point at which metrics are evaluated: `x`, or the block mean under a readout.
    pub fn readout_point<'a>(&self, x: &'a [f64]) -> Cow<'a, [f64]> {
        match &self.readout {
            None => Cow::Borrowed(x),
            Some(r) => {
                let n = r.native.dim();
                let mut mean = vec![0.0; n];
                for b in 0..r.blocks {
                    linalg::axpy(1.0, &x[b * n..(b + 1) * n], &mut mean);
                }
                let inv = 1.0 / r.blocks as f64;
                mean.iter_mut().for_each(|v| *v *= inv);
                Cow::Owned(mean)
            }
        }
    }

    /// Metrics of `x` in the original problem's space.
    pub fn metrics(&self, x: &[f64]) -> PointMetrics {
        if let Some(r) = &self.readout {
            return r.native.metrics(&self.readout_point(x));
        }
        PointMetrics {
            distance: self.known_minimizer.as_ref().map(|m| linalg::dist(x, m)),
            objective: self.objective(x),
            feasible: self.prox.is_feasible(x),
        }
    }

    /// Optimal value, when the minimizer is known.
    pub fn optimal_value(&self) -> Option<f64> {
        if let Some(r) = &self.readout {
            return r.native.optimal_value();
        }
        self.known_minimizer.as_ref().map(|m| self.objective(m))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::make_hyperplane_projection;
    use crate::linalg::SymOperator;
    use crate::objective::{make_quadratic, make_zero_term};

    fn hyperplane_problem() -> Problem {
        let f = make_quadratic(SymOperator::diagonal(vec![2.0, 5.0]).unwrap()).unwrap();
        let t = make_hyperplane_projection(&[1.0, 0.0], 1.0).unwrap();
        Problem::new(Arc::new(f), Arc::new(make_zero_term(2)), t, BlockLayout::single(2).unwrap())
            .unwrap()
            .with_minimizer(Vector::basis(2, 0))
            .unwrap()
            .with_kkt_subgradient(Vector::new(vec![2.0, 0.0]).unwrap())
            .unwrap()
    }

    #[test]
    fn dual_witness_solves_range_equation() {
        let p = hyperplane_problem();
        let v = p.dual_witness(0.5).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
    }

    #[test]
    fn minimizer_must_be_feasible() {
        let p = hyperplane_problem();
        assert!(p.clone().with_minimizer(Vector::basis(2, 1)).is_err());
        assert_eq!(p.optimal_value(), Some(1.0));
        let m = p.metrics(&[1.0, 1.0]);
        assert_eq!(m.distance, Some(1.0));
        assert!(m.feasible);
    }

    #[test]
    fn off_range_subgradient_rejected() {
        let p = hyperplane_problem().with_kkt_subgradient(Vector::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert!(p.dual_witness(1.0).is_err());
    }
}
