//! Maps whose fixed-point set is a least-squares solution set.
//!
//! `make_ls_map` targets `argmin ||A x - b||^2`; `make_constrained_ls_map`
//! targets the same problem restricted to `K = {x : A0 x = b0}`, either on the
//! lifted KKT system `L (x, mu) = e` or directly on `R^D`.

use super::{sandwich_compose, AffineFneMap, AffineMap};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, norm, pseudoinverse, DenseMatrix, Svd, SymOperator, Vector};

// Rows with norm at or below this are treated as zero.
const ZERO_ROW: f64 = 1e-14;

/// Construction used by [`make_ls_map`].
#[derive(Debug, Clone, PartialEq)]
pub enum LsVariant {
    /// `(I - (mu/rho) A^T A) x + (mu/rho) A^T b`; `rho` defaults to `||A||^2`.
    GradStep { rho: Option<f64>, mu: f64 },
    /// `(I - A^+ A) x + A^+ b`, the projection onto the solution set.
    KerProjection,
    /// `(I - G G^+) x + G^+ A^T b` with `G = A^T A`.
    GramProjection,
    /// `(I + gamma A^T A)^-1 (x + gamma A^T b)`.
    Resolvent { gamma: f64 },
    /// `(1 - beta) I + beta sum_m w_m P_{A_m}` over row hyperplanes, `w_m = ||a_m||^2 / ||A||_F^2`.
    RowHyperplaneAverage { beta: f64 },
    /// `(1 - theta) I + theta sum_d omega_d P_{G_d}` over the normal-equation
    /// hyperplanes; `weights` default to uniform.
    NormalHyperplaneAverage { theta: f64, weights: Option<Vec<f64>> },
}

/// Construction used by [`make_constrained_ls_map`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConstrainedLsVariant {
    LiftedGrad { rho: Option<f64>, mu: f64 },
    LiftedProjection,
    LiftedResolvent { gamma: f64 },
    LiftedHyperplaneAverage { theta: f64, weights: Option<Vec<f64>> },
    /// `(1 - beta) P_K + beta P_K (sum_m w_m P_{A_m}) P_K` on `R^D`.
    ProjectedComposition { beta: f64 },
}

pub fn make_ls_map(a: &DenseMatrix, b: &[f64], variant: &LsVariant) -> Result<AffineFneMap> {
    check_dim(a.rows(), b.len())?;
    let map = match variant {
        LsVariant::GradStep { rho, mu } => grad_step(a, b, *rho, *mu)?,
        LsVariant::KerProjection => ker_projection(a, b)?,
        LsVariant::GramProjection => {
            let g = a.gram();
            let g_pinv = pseudoinverse(&g)?;
            let q = DenseMatrix::identity(a.cols()).sub(&g.matmul(&g_pinv));
            AffineFneMap::new(sym(q)?, g_pinv.matvec(&a.tmatvec(b)))?
        }
        LsVariant::Resolvent { gamma } => resolvent(a, b, *gamma)?,
        LsVariant::RowHyperplaneAverage { beta } => row_average(a, b, *beta)?,
        LsVariant::NormalHyperplaneAverage { theta, weights } => {
            hyperplane_average(&a.gram(), &a.tmatvec(b), *theta, weights.as_deref())?
        }
    };
    let w = pseudoinverse(a)?.matvec(b);
    map.with_witness(Vector::new(w)?)
}

pub fn make_constrained_ls_map(
    a: &DenseMatrix,
    b: &[f64],
    a0: &DenseMatrix,
    b0: &[f64],
    variant: &ConstrainedLsVariant,
) -> Result<AffineFneMap> {
    check_dim(a.rows(), b.len())?;
    if a0.rows() == 0 {
        return Err(Error::Empty("constraint matrix A0"));
    }
    check_dim(a.cols(), a0.cols())?;
    check_dim(a0.rows(), b0.len())?;
    let a0_pinv = pseudoinverse(a0)?;
    let x_k = a0_pinv.matvec(b0);
    let residual = linalg::dist(&a0.matvec(&x_k), b0);
    if residual > 1e-8 * (1.0 + norm(b0)) {
        return Err(Error::InfeasibleConstraint { residual });
    }

    let (l, e) = lifted_system(a, b, a0, b0);
    let lifted_witness = pseudoinverse(&l)?.matvec(&e);
    let map = match variant {
        ConstrainedLsVariant::LiftedGrad { rho, mu } => grad_step(&l, &e, *rho, *mu)?,
        ConstrainedLsVariant::LiftedProjection => ker_projection(&l, &e)?,
        ConstrainedLsVariant::LiftedResolvent { gamma } => resolvent(&l, &e, *gamma)?,
        ConstrainedLsVariant::LiftedHyperplaneAverage { theta, weights } => {
            hyperplane_average(&l, &e, *theta, weights.as_deref())?
        }
        ConstrainedLsVariant::ProjectedComposition { beta } => {
            if !(*beta > 0.0 && *beta <= 1.0) {
                return Err(Error::param("beta", *beta, "in (0, 1]"));
            }
            let d = a.cols();
            let q_k = DenseMatrix::identity(d).sub(&a0_pinv.matmul(a0));
            let p_k = AffineFneMap::new(sym(q_k)?, x_k)?;
            let inner = row_average(a, b, 1.0)?;
            let composed = sandwich_compose(&inner, &[AffineMap::from(&p_k)])?;
            let map = if *beta == 1.0 {
                composed
            } else {
                AffineFneMap::convex_combine(&[p_k, composed], &[1.0 - beta, *beta])?
            };
            let w = lifted_witness[..d].to_vec();
            return map.with_witness(Vector::new(w)?);
        }
    };
    map.with_witness(Vector::new(lifted_witness)?)
}

/// `L = [[A^T A, A0^T], [A0, 0]]`, `e = (A^T b, b0)`.
fn lifted_system(a: &DenseMatrix, b: &[f64], a0: &DenseMatrix, b0: &[f64]) -> (DenseMatrix, Vec<f64>) {
    let d = a.cols();
    let m0 = a0.rows();
    let g = a.gram();
    let mut l = DenseMatrix::zeros(d + m0, d + m0);
    for i in 0..d {
        for j in 0..d {
            l[(i, j)] = g[(i, j)];
        }
    }
    for k in 0..m0 {
        for j in 0..d {
            l[(d + k, j)] = a0[(k, j)];
            l[(j, d + k)] = a0[(k, j)];
        }
    }
    let mut e = a.tmatvec(b);
    e.extend_from_slice(b0);
    (l, e)
}

fn sym(m: DenseMatrix) -> Result<SymOperator> {
    let mut m = m;
    m.symmetrize();
    SymOperator::dense(m)
}

fn grad_step(m: &DenseMatrix, rhs: &[f64], rho: Option<f64>, mu: f64) -> Result<AffineFneMap> {
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::param("mu", mu, "in (0, 1]"));
    }
    let norm_sq = Svd::new(m)?.max_singular_value().powi(2);
    let rho = match rho {
        Some(r) if r < norm_sq * (1.0 - 1e-12) || !(r > 0.0) => {
            return Err(Error::param("rho", r, format!(">= ||A||^2 = {norm_sq}")));
        }
        Some(r) => r,
        None => norm_sq,
    };
    let step = if rho > 0.0 { mu / rho } else { 0.0 };
    let q = m.gram().affine(-step, 1.0);
    AffineFneMap::new(sym(q)?, linalg::scale(&m.tmatvec(rhs), step))
}

fn ker_projection(m: &DenseMatrix, rhs: &[f64]) -> Result<AffineFneMap> {
    let pinv = pseudoinverse(m)?;
    let q = DenseMatrix::identity(m.cols()).sub(&pinv.matmul(m));
    AffineFneMap::new(sym(q)?, pinv.matvec(rhs))
}

fn resolvent(m: &DenseMatrix, rhs: &[f64], gamma: f64) -> Result<AffineFneMap> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", gamma, "> 0"));
    }
    let q = sym(m.gram().affine(gamma, 1.0))?.inverse()?;
    let pi = linalg::scale(&q.apply(&m.tmatvec(rhs)), gamma);
    AffineFneMap::new(q, pi)
}

fn row_average(a: &DenseMatrix, b: &[f64], beta: f64) -> Result<AffineFneMap> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::param("beta", beta, "in (0, 1]"));
    }
    let fro2 = a.frobenius_norm().powi(2);
    let mut maps = Vec::new();
    let mut weights = Vec::new();
    for (m, &bm) in b.iter().enumerate() {
        let row = a.row(m);
        let n2 = linalg::dot(row, row);
        if n2.sqrt() <= ZERO_ROW {
            continue;
        }
        maps.push(super::make_hyperplane_projection(row, bm)?);
        weights.push(n2 / fro2);
    }
    if maps.is_empty() {
        // A = 0: every point solves the least-squares problem.
        return Ok(AffineFneMap::identity(a.cols()));
    }
    let avg = AffineFneMap::convex_combine(&maps, &weights)?;
    relax(avg, beta)
}

/// `(1 - theta) I + theta sum_d omega_d P_d` over the hyperplanes `<row_d, x> = rhs_d`.
fn hyperplane_average(rows: &DenseMatrix, rhs: &[f64], theta: f64, weights: Option<&[f64]>) -> Result<AffineFneMap> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::param("theta", theta, "in (0, 1]"));
    }
    let count = rows.rows();
    let weights = match weights {
        Some(w) => {
            check_dim(count, w.len())?;
            if count > 1 {
                if let Some(&bad) = w.iter().find(|&&v| !(v > 0.0 && v < 1.0)) {
                    return Err(Error::param("omega", bad, "in (0, 1)"));
                }
            }
            w.to_vec()
        }
        None => vec![1.0 / count as f64; count],
    };
    let n = rows.cols();
    let mut maps = Vec::with_capacity(count);
    for d in 0..count {
        let row = rows.row(d);
        if norm(row) <= ZERO_ROW {
            // {x : 0 = rhs_d} is the whole space when consistent
            if rhs[d].abs() > ZERO_ROW {
                return Err(Error::InfeasibleConstraint { residual: rhs[d].abs() });
            }
            maps.push(AffineFneMap::identity(n));
        } else {
            maps.push(super::make_hyperplane_projection(row, rhs[d])?);
        }
    }
    let avg = AffineFneMap::convex_combine(&maps, &weights)?;
    relax(avg, theta)
}

fn relax(map: AffineFneMap, t: f64) -> Result<AffineFneMap> {
    if t == 1.0 {
        return Ok(map);
    }
    let id = AffineFneMap::identity(map.dim());
    AffineFneMap::convex_combine(&[id, map], &[1.0 - t, t])
}
