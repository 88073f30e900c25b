use super::{dot, norm, DenseMatrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;
const POWER_ITER_CAP: usize = 100_000;
const POWER_ITER_TOL: f64 = 1e-10;

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows x k`
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    /// `cols x k`
    pub v: DenseMatrix,
}

impl Svd {
    /// One-sided (Hestenes) Jacobi SVD.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if m.rows() >= m.cols() {
            one_sided_jacobi(m)
        } else {
            let t = one_sided_jacobi(&m.transpose())?;
            Ok(Svd {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            })
        }
    }

    pub fn max_singular_value(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }
}

// Requires rows >= cols. Orthogonalizes the columns of W = M V in place.
fn one_sided_jacobi(m: &DenseMatrix) -> Result<Svd> {
    let rows = m.rows();
    let cols = m.cols();
    let mut w: Vec<Vec<f64>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows.max(1) as f64).sqrt();
    // Columns this small are numerically zero; rotating against them never settles.
    let negligible = (rows as f64 * f64::EPSILON * m.frobenius_norm()).powi(2);

    let mut converged = cols < 2;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        converged = true;
        sweeps += 1;
        for p in 0..cols - 1 {
            for q in (p + 1)..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
    }
    if !converged {
        return Err(Error::EstimatorFailure {
            iterations: sweeps,
            last_estimate: f64::NAN,
        });
    }

    let mut sigma = Vec::with_capacity(cols);
    let mut u = DenseMatrix::zeros(rows, cols);
    let mut vm = DenseMatrix::zeros(cols, cols);
    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = w.iter().map(|c| norm(c)).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > 0.0 {
            for i in 0..rows {
                u[(i, k)] = w[j][i] / s;
            }
        }
        for i in 0..cols {
            vm[(i, k)] = v[j][i];
        }
    }
    Ok(Svd { u, sigma, v: vm })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let x = *a;
        let y = *b;
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

/// Moore-Penrose pseudoinverse via SVD.
///
/// Singular values at or below `||M||_F * max(rows, cols) * eps` are treated as
/// zero, matching the level below which the Jacobi sweep stops resolving columns.
pub fn pseudoinverse(m: &DenseMatrix) -> Result<DenseMatrix> {
    if let Some(index) = m.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let svd = Svd::new(m)?;
    let cutoff = m.frobenius_norm() * (m.rows().max(m.cols()) as f64) * f64::EPSILON;
    let mut out = DenseMatrix::zeros(m.cols(), m.rows());
    for (k, &s) in svd.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        let inv = 1.0 / s;
        for i in 0..m.cols() {
            let vik = svd.v[(i, k)] * inv;
            if vik == 0.0 {
                continue;
            }
            for j in 0..m.rows() {
                out[(i, j)] += vik * svd.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Spectral norm of a general matrix as `sqrt(lambda_max(M^T M))` by power iteration.
pub fn matrix_spectral_norm(m: &DenseMatrix) -> Result<f64> {
    let n = m.cols();
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    // Deterministic start with mass on every coordinate.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut estimate = 0.0;
    for _ in 0..POWER_ITER_CAP {
        let y = m.tmatvec(&m.matvec(&x));
        let rayleigh = dot(&x, &y);
        let ny = norm(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        let next: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let change = (rayleigh - estimate).abs();
        estimate = rayleigh;
        let residual = super::dist(&next, &x);
        x = next;
        if change <= POWER_ITER_TOL * estimate.abs() && residual <= 1e-6 {
            return Ok(estimate.max(0.0).sqrt());
        }
    }
    Err(Error::EstimatorFailure {
        iterations: POWER_ITER_CAP,
        last_estimate: estimate.max(0.0).sqrt(),
    })
}
