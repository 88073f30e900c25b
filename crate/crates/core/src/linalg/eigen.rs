use super::DenseMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `M = V diag(values) V^T` of a symmetric matrix.
///
/// Eigenvalues are sorted ascending; column `k` of `vectors` pairs with `values[k]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// Rebuilds `V diag(h(values)) V^T`.
    pub fn reconstruct_with(&self, h: impl Fn(f64) -> f64) -> DenseMatrix {
        let n = self.values.len();
        let mapped: Vec<f64> = self.values.iter().map(|&v| h(v)).collect();
        let mut out = DenseMatrix::zeros(n, n);
        for k in 0..n {
            let s = mapped[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * s;
                if vik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)];
                }
            }
        }
        out.symmetrize();
        out
    }
}

/// Cyclic Jacobi eigenvalue algorithm for a dense symmetric matrix.
///
/// Rotations are applied until the off-diagonal Frobenius mass falls below
/// `eps * ||M||_F`. Fails with [`Error::EstimatorFailure`] after `MAX_SWEEPS`.
pub fn symmetric_eigen(m: &DenseMatrix) -> Result<SymmetricEigen> {
    assert!(m.is_square(), "eigendecomposition requires a square matrix");
    let n = m.rows();
    let mut a = m.clone();
    a.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let scale = a.frobenius_norm();
    if n == 1 || scale == 0.0 {
        return Ok(sorted(a, v));
    }
    let target = f64::EPSILON * scale;

    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= target {
            return Ok(sorted(a, v));
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let off = off_diagonal_norm(&a);
    if off <= 1e3 * target {
        return Ok(sorted(a, v));
    }
    Err(Error::EstimatorFailure {
        iterations: MAX_SWEEPS,
        last_estimate: off,
    })
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)] * a[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn sorted(a: DenseMatrix, v: DenseMatrix) -> SymmetricEigen {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = DenseMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new)] = v[(k, old)];
        }
    }
    SymmetricEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let e = symmetric_eigen(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
        let back = e.reconstruct_with(|v| v);
        assert!(back.sub(&m).max_abs() < 1e-14);
    }

    #[test]
    fn diagonal_is_fixed() {
        let m = DenseMatrix::from_diagonal(&[9.0, 1.0, 4.0]);
        let e = symmetric_eigen(&m).unwrap();
        assert_eq!(e.values, vec![1.0, 4.0, 9.0]);
    }
}
