//! Synthetic test problems: the three-block quadratic with ball constraints
//! and the hyperplane-constrained quadratic, each in native and product-space form.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::affine::{make_consensus_projection, make_hyperplane_projection};
use crate::error::{Error, Result};
use crate::linalg::{BlockLayout, SymOperator, Vector};
use crate::objective::{
    make_ball_indicator, make_quadratic, make_quadratic_prox, make_separable_sum, make_zero_term, AffineSetIndicator,
    Problem, ProxTerm, Readout,
};

/// Largest diagonal entry of `P`, hence the Lipschitz constant of the smooth term.
pub const P_MAX: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// `min 1/2 x1' P x1` over `x1 = x2 = x3`, `x2 in B[2 e1, 1]`, `x3 in B[0, 2]`.
    Iiduka,
    /// `min 1/2 x' P x` over `e1' x = 1`.
    Hyperplane,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Iiduka => "iiduka",
            ProblemKind::Hyperplane => "hyperplane",
        }
    }

    pub fn default_iters(self) -> usize {
        match self {
            ProblemKind::Iiduka => 2000,
            ProblemKind::Hyperplane => 5000,
        }
    }
}

/// One random draw of a test problem in both formulations.
///
/// `native` keeps the quadratic as the smooth term. `recast` moves it into the
/// prox term (through the resolvent `(I + lambda P)^{-1}`) and leaves `f = 0`.
#[derive(Debug, Clone)]
pub struct BenchProblem {
    pub kind: ProblemKind,
    pub diagonal: Vec<f64>,
    pub native: Problem,
    pub recast: Problem,
}

fn check_params(d: usize, p11: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::param("d", d as f64, ">= 2"));
    }
    if !(p11 > 0.0 && p11 <= 1.0) {
        return Err(Error::param("p11", p11, "in (0, 1]"));
    }
    Ok(())
}

/// `P = diag(p11, u_2, ..., u_{d-1}, 10)` with `u_i` uniform in `(p11, 10)`.
pub fn draw_diagonal<R: Rng + ?Sized>(d: usize, p11: f64, rng: &mut R) -> Result<Vec<f64>> {
    check_params(d, p11)?;
    let mut p = Vec::with_capacity(d);
    p.push(p11);
    for _ in 1..d - 1 {
        let u = loop {
            let u = rng.random_range(p11..P_MAX);
            if u > p11 {
                break u;
            }
        };
        p.push(u);
    }
    p.push(P_MAX);
    Ok(p)
}

// `(c_1 e1, c_2 e1, ...)` with one block of length `d` per coefficient.
fn e1_blocks(d: usize, blocks: &[f64]) -> Result<Vector> {
    let mut s = vec![0.0; d * blocks.len()];
    for (b, &v) in blocks.iter().enumerate() {
        s[b * d] = v;
    }
    Vector::new(s)
}

fn lifted_e1(d: usize, blocks: usize) -> Result<Vector> {
    e1_blocks(d, &vec![1.0; blocks])
}

pub fn iiduka_from_diagonal(diagonal: Vec<f64>) -> Result<BenchProblem> {
    let d = diagonal.len();
    let p11 = diagonal[0];
    check_params(d, p11)?;
    let layout = BlockLayout::uniform(3, d)?;
    let p = SymOperator::diagonal(diagonal.clone())?;
    let t = make_consensus_projection(3, d)?;
    let ball1: Arc<dyn ProxTerm> = Arc::new(make_ball_indicator(e1_blocks(d, &[2.0])?, 1.0)?);
    let ball2: Arc<dyn ProxTerm> = Arc::new(make_ball_indicator(Vector::zeros(d), 2.0)?);
    let x_star = lifted_e1(d, 3)?;
    // grad f(x*) = (p11 e1, 0, 0); the normal cone of the first ball at e1 supplies -p11 e1.
    let s = e1_blocks(d, &[p11, -p11, 0.0])?;

    let f = make_quadratic(p.clone())?.on_block(&layout, 0)?;
    let g = make_separable_sum(vec![Arc::new(make_zero_term(d)), ball1.clone(), ball2.clone()], layout.clone())?;
    let native = Problem::new(Arc::new(f), Arc::new(g), t.clone(), layout.clone())?
        .with_minimizer(x_star.clone())?
        .with_kkt_subgradient(s.clone())?;

    let g = make_separable_sum(vec![Arc::new(make_quadratic_prox(p)?), ball1, ball2], layout.clone())?;
    let recast = Problem::new(Arc::new(make_zero_term(3 * d)), Arc::new(g), t, layout)?
        .with_minimizer(x_star)?
        .with_kkt_subgradient(s)?;
    Ok(BenchProblem { kind: ProblemKind::Iiduka, diagonal, native, recast })
}

pub fn hyperplane_from_diagonal(diagonal: Vec<f64>) -> Result<BenchProblem> {
    let d = diagonal.len();
    let p11 = diagonal[0];
    check_params(d, p11)?;
    let p = SymOperator::diagonal(diagonal.clone())?;
    let e1 = Vector::basis(d, 0);
    let v = make_hyperplane_projection(&e1, 1.0)?;
    let native = Problem::new(
        Arc::new(make_quadratic(p.clone())?),
        Arc::new(make_zero_term(d)),
        v.clone(),
        BlockLayout::single(d)?,
    )?
    .with_minimizer(e1)?
    .with_kkt_subgradient(e1_blocks(d, &[p11])?)?;
    let native = Arc::new(native);

    let layout = BlockLayout::uniform(2, d)?;
    let g = make_separable_sum(
        vec![Arc::new(make_quadratic_prox(p)?), Arc::new(AffineSetIndicator::new(v)?)],
        layout.clone(),
    )?;
    let recast = Problem::new(Arc::new(make_zero_term(2 * d)), Arc::new(g), make_consensus_projection(2, d)?, layout)?
        .with_minimizer(lifted_e1(d, 2)?)?
        .with_kkt_subgradient(e1_blocks(d, &[p11, -p11])?)?
        .with_readout(Readout { blocks: 2, native: native.clone() })?;
    let native = Arc::try_unwrap(native).unwrap_or_else(|a| (*a).clone());
    Ok(BenchProblem { kind: ProblemKind::Hyperplane, diagonal, native, recast })
}

/// Draws `P` from `rng` and builds both formulations of `kind`.
pub fn gen_instance<R: Rng + ?Sized>(kind: ProblemKind, d: usize, p11: f64, rng: &mut R) -> Result<BenchProblem> {
    let diagonal = draw_diagonal(d, p11, rng)?;
    match kind {
        ProblemKind::Iiduka => iiduka_from_diagonal(diagonal),
        ProblemKind::Hyperplane => hyperplane_from_diagonal(diagonal),
    }
}

/// [`gen_instance`] with `P` drawn from a ChaCha8 stream seeded with `seed`.
pub fn gen_instance_seeded(kind: ProblemKind, d: usize, p11: f64, seed: u64) -> Result<BenchProblem> {
    gen_instance(kind, d, p11, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn gen_problem_iiduka(d: usize, p11: f64, seed: u64) -> Result<Problem> {
    Ok(gen_instance_seeded(ProblemKind::Iiduka, d, p11, seed)?.native)
}

pub fn gen_problem_hyperplane(d: usize, p11: f64, seed: u64) -> Result<Problem> {
    Ok(gen_instance_seeded(ProblemKind::Hyperplane, d, p11, seed)?.native)
}

/// Lifts a native initial point to the recast problem's space (one copy per block).
pub fn lift(x0: &[f64], recast: &Problem) -> Vec<f64> {
    let copies = recast.dim() / x0.len();
    x0.repeat(copies)
}
