use std::ops::Range;
use std::sync::Arc;

use super::{ProxTerm, SmoothTerm, INDICATOR_SLACK, LIPSCHITZ_FLOOR};
use crate::affine::AffineFneMap;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, symmetric_eigen, BlockLayout, SymOperator, SymmetricEigen, Vector, PSD_SLACK};

/// `f(x) = 1/2 <x_B, P x_B>` where `x_B` is one block of `x` (or all of it).
#[derive(Debug, Clone)]
pub struct Quadratic {
    p: SymOperator,
    lipschitz: f64,
    block: Range<usize>,
    total_dim: usize,
}

pub fn make_quadratic(p: SymOperator) -> Result<Quadratic> {
    let min = p.min_eigenvalue()?;
    if min < -PSD_SLACK {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    let n = p.dim();
    let lipschitz = p.spectral_norm()?.max(LIPSCHITZ_FLOOR);
    Ok(Quadratic {
        p,
        lipschitz,
        block: 0..n,
        total_dim: n,
    })
}

impl Quadratic {
    /// Re-embeds the term so it acts on block `block` of `layout`.
    pub fn on_block(mut self, layout: &BlockLayout, block: usize) -> Result<Self> {
        check_dim(self.p.dim(), layout.dims()[block])?;
        self.block = layout.range(block);
        self.total_dim = layout.total_dim();
        Ok(self)
    }

    pub fn matrix(&self) -> &SymOperator {
        &self.p
    }
}

impl SmoothTerm for Quadratic {
    fn dim(&self) -> usize {
        self.total_dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.p.quadratic_form(&x[self.block.clone()])
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        if self.block.len() != self.total_dim {
            out.fill(0.0);
        }
        self.p.apply_into(&x[self.block.clone()], &mut out[self.block.clone()]);
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// `f = 0` and `g = 0` at once.
#[derive(Debug, Clone, Copy)]
pub struct ZeroTerm {
    dim: usize,
}

pub fn make_zero_term(dim: usize) -> ZeroTerm {
    ZeroTerm { dim }
}

impl SmoothTerm for ZeroTerm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn gradient_into(&self, _: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn lipschitz(&self) -> f64 {
        LIPSCHITZ_FLOOR
    }

    fn is_zero(&self) -> bool {
        true
    }
}

impl ProxTerm for ZeroTerm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn prox_into(&self, _: f64, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn is_zero(&self) -> bool {
        true
    }

    fn is_lambda_invariant(&self) -> bool {
        true
    }
}

/// Indicator of the closed ball `B[center, radius]`.
#[derive(Debug, Clone)]
pub struct BallIndicator {
    center: Vector,
    radius: f64,
}

pub fn make_ball_indicator(center: Vector, radius: f64) -> Result<BallIndicator> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::param("radius", radius, "> 0"));
    }
    Ok(BallIndicator { center, radius })
}

impl ProxTerm for BallIndicator {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if dist(x, &self.center) <= self.radius + INDICATOR_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_into(&self, _: f64, x: &[f64], out: &mut [f64]) {
        let r = dist(x, &self.center);
        let s = self.radius / r.max(self.radius);
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(self.center.iter()) {
            *o = ci + (xi - ci) * s;
        }
    }

    fn finite_part(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn is_lambda_invariant(&self) -> bool {
        true
    }
}

/// `g(x) = 1/2 <x, P x>` accessed through its resolvent `(I + lambda P)^-1`.
#[derive(Debug, Clone)]
pub struct QuadraticProx {
    p: SymOperator,
    // Dense P is decomposed once so each prox is two matvecs.
    eigen: Option<SymmetricEigen>,
}

pub fn make_quadratic_prox(p: SymOperator) -> Result<QuadraticProx> {
    let min = p.min_eigenvalue()?;
    if min < -PSD_SLACK {
        return Err(Error::NotPsd { eigenvalue: min });
    }
    let eigen = match &p {
        SymOperator::Dense(m) => Some(symmetric_eigen(m)?),
        _ => None,
    };
    Ok(QuadraticProx { p, eigen })
}

impl QuadraticProx {
    pub fn matrix(&self) -> &SymOperator {
        &self.p
    }
}

impl ProxTerm for QuadraticProx {
    fn dim(&self) -> usize {
        self.p.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.p.quadratic_form(x)
    }

    fn prox_into(&self, lambda: f64, x: &[f64], out: &mut [f64]) {
        match (&self.p, &self.eigen) {
            (SymOperator::Diagonal(d), _) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o = xi / (1.0 + lambda * di);
                }
            }
            (_, Some(e)) => {
                let n = x.len();
                let v = &e.vectors;
                let coeffs: Vec<f64> = (0..n)
                    .map(|k| {
                        let c: f64 = (0..n).map(|i| v[(i, k)] * x[i]).sum();
                        c / (1.0 + lambda * e.values[k])
                    })
                    .collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = v.row(i).iter().zip(&coeffs).map(|(a, c)| a * c).sum();
                }
            }
            (p, None) => {
                let r = p
                    .spectral_map(|v| 1.0 / (1.0 + lambda * v))
                    .expect("structured resolvent");
                r.apply_into(x, out);
            }
        }
    }
}

/// Indicator of `Fix T` for a projection-type `T`; its prox is `T` itself.
#[derive(Debug, Clone)]
pub struct AffineSetIndicator {
    map: AffineFneMap,
}

impl AffineSetIndicator {
    pub fn new(map: AffineFneMap) -> Result<Self> {
        if !map.is_projection() {
            return Err(Error::UnsupportedProblem(
                "affine-set indicator requires a projection map".into(),
            ));
        }
        Ok(AffineSetIndicator { map })
    }
}

impl ProxTerm for AffineSetIndicator {
    fn dim(&self) -> usize {
        self.map.dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        if self.map.fixed_point_residual(x) <= INDICATOR_SLACK {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn prox_into(&self, _: f64, x: &[f64], out: &mut [f64]) {
        self.map.apply_into(x, out);
    }

    fn finite_part(&self, _: &[f64]) -> f64 {
        0.0
    }

    fn is_lambda_invariant(&self) -> bool {
        true
    }
}

/// `g(x) = sum_j g_j(x_j)` over the blocks of a layout.
#[derive(Debug, Clone)]
pub struct SeparableSum {
    terms: Vec<Arc<dyn ProxTerm>>,
    layout: BlockLayout,
}

pub fn make_separable_sum(terms: Vec<Arc<dyn ProxTerm>>, layout: BlockLayout) -> Result<SeparableSum> {
    check_dim(layout.num_blocks(), terms.len())?;
    for (t, &d) in terms.iter().zip(layout.dims()) {
        check_dim(d, t.dim())?;
    }
    Ok(SeparableSum { terms, layout })
}

impl SeparableSum {
    pub fn terms(&self) -> &[Arc<dyn ProxTerm>] {
        &self.terms
    }
}

impl ProxTerm for SeparableSum {
    fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, t)| t.value(self.layout.block(x, j)))
            .sum()
    }

    fn finite_part(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(j, t)| t.finite_part(self.layout.block(x, j)))
            .sum()
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        self.terms
            .iter()
            .enumerate()
            .all(|(j, t)| t.is_feasible(self.layout.block(x, j)))
    }

    fn prox_into(&self, lambda: f64, x: &[f64], out: &mut [f64]) {
        for (j, t) in self.terms.iter().enumerate() {
            let r = self.layout.range(j);
            t.prox_into(lambda, &x[r.clone()], &mut out[r]);
        }
    }

    fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.is_zero())
    }

    fn is_lambda_invariant(&self) -> bool {
        self.terms.iter().all(|t| t.is_lambda_invariant())
    }
}

/// `g(z) + ||x - z||^2 / (2 lambda)`, minimized over `z` by `prox_{lambda g}(x)`.
pub fn prox_objective(g: &dyn ProxTerm, lambda: f64, x: &[f64], z: &[f64]) -> f64 {
    let d = dist(x, z);
    g.value(z) + d * d / (2.0 * lambda)
}
