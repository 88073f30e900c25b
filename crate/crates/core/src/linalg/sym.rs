use super::{dot, symmetric_eigen, DenseMatrix};
use crate::error::{check_dim, Error, Result};

/// Eigenvalues in `[-PSD_SLACK, 0)` are clamped to zero when taking square roots.
pub const PSD_SLACK: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;
const IDEMPOTENT_TOL: f64 = 1e-10;
/// Largest dimension for which structured forms are materialized during algebra.
pub(crate) const DENSE_LIMIT: usize = 4096;

/// A self-adjoint linear operator stored in the cheapest faithful form.
///
/// The structured forms never materialize an `n x n` matrix, so they remain
/// usable at `n` in the tens of thousands.
#[derive(Debug, Clone, PartialEq)]
pub enum SymOperator {
    Dense(DenseMatrix),
    Diagonal(Vec<f64>),
    ScaledIdentity { dim: usize, scale: f64 },
    /// `shift * I + scale * u u^T` with `u` of unit norm.
    RankOne { shift: f64, scale: f64, dir: Vec<f64> },
    /// `shift * I + scale * P_S`, `P_S` replicating the block mean into every block.
    BlockAverage {
        blocks: usize,
        block_dim: usize,
        shift: f64,
        scale: f64,
    },
}

impl SymOperator {
    pub fn identity(dim: usize) -> Self {
        SymOperator::ScaledIdentity { dim, scale: 1.0 }
    }

    pub fn zero(dim: usize) -> Self {
        SymOperator::ScaledIdentity { dim, scale: 0.0 }
    }

    /// Validates a dense matrix as symmetric to within `1e-12` relative and
    /// stores its exact symmetrization.
    pub fn dense(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                expected: m.rows(),
                found: m.cols(),
            });
        }
        let tol = SYMMETRY_TOL * m.max_abs().max(1.0);
        if m.asymmetry() > tol {
            return Err(Error::Malformed(format!(
                "matrix is not symmetric (asymmetry {:e})",
                m.asymmetry()
            )));
        }
        let mut m = m;
        m.symmetrize();
        Ok(SymOperator::Dense(m))
    }

    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Empty("diagonal"));
        }
        if let Some(index) = d.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(SymOperator::Diagonal(d))
    }

    /// `shift * I + scale * a a^T / ||a||^2`.
    pub fn rank_one(shift: f64, scale: f64, a: &[f64]) -> Result<Self> {
        let n = super::norm(a);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Malformed("rank-one direction must be nonzero".into()));
        }
        Ok(SymOperator::RankOne {
            shift,
            scale,
            dir: a.iter().map(|v| v / n).collect(),
        })
    }

    /// Orthogonal projection onto the consensus subspace of `blocks` blocks.
    pub fn block_average(blocks: usize, block_dim: usize) -> Self {
        SymOperator::BlockAverage {
            blocks,
            block_dim,
            shift: 0.0,
            scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SymOperator::Dense(m) => m.rows(),
            SymOperator::Diagonal(d) => d.len(),
            SymOperator::ScaledIdentity { dim, .. } => *dim,
            SymOperator::RankOne { dir, .. } => dir.len(),
            SymOperator::BlockAverage {
                blocks, block_dim, ..
            } => blocks * block_dim,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.apply_into(x, &mut out);
        out
    }

    /// `out = self * x`; `out` must not alias `x`.
    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            SymOperator::Dense(m) => m.matvec_into(x, out),
            SymOperator::Diagonal(d) => {
                for ((o, di), xi) in out.iter_mut().zip(d).zip(x) {
                    *o = di * xi;
                }
            }
            SymOperator::ScaledIdentity { scale, .. } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = scale * xi;
                }
            }
            SymOperator::RankOne { shift, scale, dir } => {
                let c = scale * dot(dir, x);
                for ((o, xi), ui) in out.iter_mut().zip(x).zip(dir) {
                    *o = shift * xi + c * ui;
                }
            }
            SymOperator::BlockAverage {
                blocks,
                block_dim,
                shift,
                scale,
            } => {
                let (b, d) = (*blocks, *block_dim);
                let inv = 1.0 / b as f64;
                for k in 0..d {
                    let mut s = 0.0;
                    for i in 0..b {
                        s += x[i * d + k];
                    }
                    let mean = s * inv * scale;
                    for i in 0..b {
                        out[i * d + k] = shift * x[i * d + k] + mean;
                    }
                }
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.dim();
        match self {
            SymOperator::Dense(m) => m.clone(),
            SymOperator::Diagonal(d) => DenseMatrix::from_diagonal(d),
            SymOperator::ScaledIdentity { scale, .. } => DenseMatrix::identity(n).scaled(*scale),
            SymOperator::RankOne { shift, scale, dir } => {
                let mut m = DenseMatrix::identity(n).scaled(*shift);
                for i in 0..n {
                    for j in 0..n {
                        m[(i, j)] += scale * dir[i] * dir[j];
                    }
                }
                m
            }
            SymOperator::BlockAverage {
                blocks,
                block_dim,
                shift,
                scale,
            } => {
                let mut m = DenseMatrix::identity(n).scaled(*shift);
                let w = scale / *blocks as f64;
                for i in 0..*blocks {
                    for j in 0..*blocks {
                        for k in 0..*block_dim {
                            m[(i * block_dim + k, j * block_dim + k)] += w;
                        }
                    }
                }
                m
            }
        }
    }

    /// `a * self + b * I`, staying in the same structured form.
    pub fn affine(&self, a: f64, b: f64) -> SymOperator {
        match self {
            SymOperator::Dense(m) => SymOperator::Dense(m.affine(a, b)),
            SymOperator::Diagonal(d) => SymOperator::Diagonal(d.iter().map(|v| a * v + b).collect()),
            SymOperator::ScaledIdentity { dim, scale } => SymOperator::ScaledIdentity {
                dim: *dim,
                scale: a * scale + b,
            },
            SymOperator::RankOne { shift, scale, dir } => SymOperator::RankOne {
                shift: a * shift + b,
                scale: a * scale,
                dir: dir.clone(),
            },
            SymOperator::BlockAverage {
                blocks,
                block_dim,
                shift,
                scale,
            } => SymOperator::BlockAverage {
                blocks: *blocks,
                block_dim: *block_dim,
                shift: a * shift + b,
                scale: a * scale,
            },
        }
    }

    /// Weighted sum `sum_j w_j S_j`, kept structured when all terms share a form.
    pub fn weighted_sum(terms: &[(f64, &SymOperator)]) -> Result<SymOperator> {
        let first = terms.first().ok_or(Error::Empty("operator sum"))?.1;
        let n = first.dim();
        for (_, t) in terms {
            check_dim(n, t.dim())?;
        }
        if let Some(s) = structured_sum(terms) {
            return Ok(s);
        }
        guard_dense(n)?;
        let mut acc = DenseMatrix::zeros(n, n);
        for (w, t) in terms {
            acc = acc.add(&t.to_dense().scaled(*w));
        }
        acc.symmetrize();
        Ok(SymOperator::Dense(acc))
    }

    /// `outer * self * outer`, the symmetric sandwich product.
    pub fn sandwich(&self, outer: &SymOperator) -> Result<SymOperator> {
        check_dim(self.dim(), outer.dim())?;
        if let SymOperator::ScaledIdentity { scale, .. } = outer {
            return Ok(self.affine(scale * scale, 0.0));
        }
        if let SymOperator::ScaledIdentity { scale, .. } = self {
            // outer * (s I) * outer = s * outer^2
            return Ok(outer.square()?.affine(*scale, 0.0));
        }
        guard_dense(self.dim())?;
        let o = outer.to_dense();
        let mut m = o.matmul(&self.to_dense()).matmul(&o);
        m.symmetrize();
        Ok(SymOperator::Dense(m))
    }

    /// `self * self`.
    pub fn square(&self) -> Result<SymOperator> {
        Ok(match self {
            SymOperator::Diagonal(d) => SymOperator::Diagonal(d.iter().map(|v| v * v).collect()),
            SymOperator::ScaledIdentity { dim, scale } => SymOperator::ScaledIdentity {
                dim: *dim,
                scale: scale * scale,
            },
            // (sI + cP)^2 = s^2 I + (2sc + c^2) P for an orthogonal projection P.
            SymOperator::RankOne { shift, scale, dir } => SymOperator::RankOne {
                shift: shift * shift,
                scale: 2.0 * shift * scale + scale * scale,
                dir: dir.clone(),
            },
            SymOperator::BlockAverage {
                blocks,
                block_dim,
                shift,
                scale,
            } => SymOperator::BlockAverage {
                blocks: *blocks,
                block_dim: *block_dim,
                shift: shift * shift,
                scale: 2.0 * shift * scale + scale * scale,
            },
            SymOperator::Dense(m) => {
                let mut sq = m.matmul(m);
                sq.symmetrize();
                SymOperator::Dense(sq)
            }
        })
    }

    /// Eigenvalues (ascending, with multiplicity for structured forms).
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = match self {
            SymOperator::Dense(m) => symmetric_eigen(m)?.values,
            SymOperator::Diagonal(d) => d.clone(),
            SymOperator::ScaledIdentity { dim, scale } => vec![*scale; *dim],
            _ => {
                let (range, complement, range_mult) = self.projection_spectrum().unwrap();
                let n = self.dim();
                let mut v = vec![range; range_mult];
                v.extend(std::iter::repeat_n(complement, n - range_mult));
                v
            }
        };
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    /// `(eigenvalue on range P, eigenvalue on range(P)^perp, dim range P)` for the
    /// `shift * I + scale * P` forms.
    fn projection_spectrum(&self) -> Option<(f64, f64, usize)> {
        match self {
            SymOperator::RankOne { shift, scale, .. } => Some((shift + scale, *shift, 1)),
            SymOperator::BlockAverage {
                block_dim,
                shift,
                scale,
                ..
            } => Some((shift + scale, *shift, *block_dim)),
            _ => None,
        }
    }

    fn extreme_eigenvalues(&self) -> Result<(f64, f64)> {
        match self {
            SymOperator::Diagonal(d) => Ok(d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })),
            SymOperator::ScaledIdentity { scale, .. } => Ok((*scale, *scale)),
            SymOperator::Dense(m) => {
                let vals = symmetric_eigen(m)?.values;
                Ok((vals[0], vals[vals.len() - 1]))
            }
            _ => {
                let (r, c, mult) = self.projection_spectrum().unwrap();
                if mult == self.dim() {
                    Ok((r, r))
                } else {
                    Ok((r.min(c), r.max(c)))
                }
            }
        }
    }

    /// Largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Result<f64> {
        let (lo, hi) = self.extreme_eigenvalues()?;
        Ok(lo.abs().max(hi.abs()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.extreme_eigenvalues()?.0)
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.extreme_eigenvalues()?.1)
    }

    /// Whether `self * self == self` (to `1e-10`).
    pub fn is_idempotent(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= IDEMPOTENT_TOL;
        let is01 = |v: f64| close(v, 0.0) || close(v, 1.0);
        match self {
            SymOperator::Diagonal(d) => d.iter().all(|&v| is01(v)),
            SymOperator::ScaledIdentity { scale, .. } => is01(*scale),
            SymOperator::Dense(m) => {
                let sq = m.matmul(m);
                sq.sub(m).max_abs() <= IDEMPOTENT_TOL * m.max_abs().max(1.0)
            }
            _ => {
                let (r, c, mult) = self.projection_spectrum().unwrap();
                is01(r) && (mult == self.dim() || is01(c))
            }
        }
    }

    /// Positive square root `U` with `U * U = self`.
    ///
    /// Idempotent inputs short-circuit to `U = self`. Eigenvalues below
    /// `-PSD_SLACK` are rejected; those within the slack are clamped to zero.
    pub fn psd_sqrt(&self) -> Result<SymOperator> {
        if self.is_idempotent() {
            return Ok(self.clone());
        }
        let root = |v: f64| -> Result<f64> {
            if v < -PSD_SLACK {
                Err(Error::NotPsd { eigenvalue: v })
            } else {
                Ok(v.max(0.0).sqrt())
            }
        };
        Ok(match self {
            SymOperator::Diagonal(d) => {
                SymOperator::Diagonal(d.iter().map(|&v| root(v)).collect::<Result<_>>()?)
            }
            SymOperator::ScaledIdentity { dim, scale } => SymOperator::ScaledIdentity {
                dim: *dim,
                scale: root(*scale)?,
            },
            SymOperator::Dense(m) => {
                let eig = symmetric_eigen(m)?;
                for &v in &eig.values {
                    root(v)?;
                }
                SymOperator::Dense(eig.reconstruct_with(|v| v.max(0.0).sqrt()))
            }
            _ => {
                let (r, c, mult) = self.projection_spectrum().unwrap();
                let rr = root(r)?;
                let rc = if mult == self.dim() { 0.0 } else { root(c)? };
                self.with_projection_spectrum(rr, rc)
            }
        })
    }

    /// Applies a spectral function to a `shift * I + scale * P` form.
    fn with_projection_spectrum(&self, on_range: f64, on_complement: f64) -> SymOperator {
        match self {
            SymOperator::RankOne { dir, .. } => SymOperator::RankOne {
                shift: on_complement,
                scale: on_range - on_complement,
                dir: dir.clone(),
            },
            SymOperator::BlockAverage {
                blocks, block_dim, ..
            } => SymOperator::BlockAverage {
                blocks: *blocks,
                block_dim: *block_dim,
                shift: on_complement,
                scale: on_range - on_complement,
            },
            _ => unreachable!("not a projection-structured form"),
        }
    }

    /// Spectral map `h(self)`; eigenvalues outside the domain of `h` are the
    /// caller's responsibility.
    pub fn spectral_map(&self, h: impl Fn(f64) -> f64) -> Result<SymOperator> {
        Ok(match self {
            SymOperator::Diagonal(d) => SymOperator::Diagonal(d.iter().map(|&v| h(v)).collect()),
            SymOperator::ScaledIdentity { dim, scale } => SymOperator::ScaledIdentity {
                dim: *dim,
                scale: h(*scale),
            },
            SymOperator::Dense(m) => SymOperator::Dense(symmetric_eigen(m)?.reconstruct_with(h)),
            _ => {
                let (r, c, _) = self.projection_spectrum().unwrap();
                self.with_projection_spectrum(h(r), h(c))
            }
        })
    }

    /// Inverse of a positive definite (or merely nonsingular) operator.
    pub fn inverse(&self) -> Result<SymOperator> {
        let vals = self.extreme_eigenvalues()?;
        if vals.0 <= 0.0 && vals.1 >= 0.0 {
            let eigs = self.eigenvalues()?;
            if eigs.contains(&0.0) {
                return Err(Error::NotStronglyPositive {
                    min_eigenvalue: vals.0,
                    delta: 0.0,
                });
            }
        }
        self.spectral_map(|v| 1.0 / v)
    }

    /// Moore-Penrose pseudoinverse of a symmetric operator; eigenvalues with
    /// magnitude below `tol * max|eig|` are treated as zero.
    pub fn pseudo_inverse(&self, tol: f64) -> Result<SymOperator> {
        let scale = self.spectral_norm()?;
        let cutoff = tol * scale.max(f64::MIN_POSITIVE);
        self.spectral_map(|v| if v.abs() <= cutoff { 0.0 } else { 1.0 / v })
    }

    /// Quadratic form `<x, self x>`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }
}

fn guard_dense(n: usize) -> Result<()> {
    if n > DENSE_LIMIT {
        Err(Error::UnsupportedProblem(format!(
            "operator algebra would materialize a dense {n}x{n} matrix"
        )))
    } else {
        Ok(())
    }
}

fn structured_sum(terms: &[(f64, &SymOperator)]) -> Option<SymOperator> {
    let n = terms[0].1.dim();
    // Scaled identities mix with anything of a single structured family.
    let mut id_part = 0.0;
    let mut base: Option<SymOperator> = None;
    for (w, t) in terms {
        match t {
            SymOperator::ScaledIdentity { scale, .. } => id_part += w * scale,
            other => match &mut base {
                None => base = Some(other.affine(*w, 0.0)),
                Some(acc) => *acc = add_same_form(acc, &other.affine(*w, 0.0))?,
            },
        }
    }
    Some(match base {
        None => SymOperator::ScaledIdentity { dim: n, scale: id_part },
        Some(b) => b.affine(1.0, id_part),
    })
}

fn add_same_form(a: &SymOperator, b: &SymOperator) -> Option<SymOperator> {
    match (a, b) {
        (SymOperator::Diagonal(x), SymOperator::Diagonal(y)) => {
            Some(SymOperator::Diagonal(x.iter().zip(y).map(|(p, q)| p + q).collect()))
        }
        (
            SymOperator::RankOne {
                shift: s1,
                scale: c1,
                dir: d1,
            },
            SymOperator::RankOne {
                shift: s2,
                scale: c2,
                dir: d2,
            },
        ) if same_direction(d1, d2).is_some() => Some(SymOperator::RankOne {
            shift: s1 + s2,
            scale: c1 + c2,
            dir: d1.clone(),
        }),
        (
            SymOperator::BlockAverage {
                blocks: b1,
                block_dim: k1,
                shift: s1,
                scale: c1,
            },
            SymOperator::BlockAverage {
                blocks: b2,
                block_dim: k2,
                shift: s2,
                scale: c2,
            },
        ) if b1 == b2 && k1 == k2 => Some(SymOperator::BlockAverage {
            blocks: *b1,
            block_dim: *k1,
            shift: s1 + s2,
            scale: c1 + c2,
        }),
        _ => None,
    }
}

// u u^T is sign invariant, so +/-u both count as the same direction.
fn same_direction(a: &[f64], b: &[f64]) -> Option<()> {
    let c = dot(a, b).abs();
    ((c - 1.0).abs() <= 1e-14).then_some(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn spectral_norm_examples() {
        let d = SymOperator::diagonal(vec![1.0, 4.0, 9.0]).unwrap();
        assert!(close(d.spectral_norm().unwrap(), 9.0, 1e-8));
        assert!(close(SymOperator::identity(5).spectral_norm().unwrap(), 1.0, 1e-8));
        let m = SymOperator::dense(DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
        assert!(close(m.spectral_norm().unwrap(), 3.0, 1e-8));
    }

    #[test]
    fn min_eigenvalue_examples() {
        let d = SymOperator::diagonal(vec![1.0, 4.0, 9.0]).unwrap();
        assert!((d.min_eigenvalue().unwrap() - 1.0).abs() < 1e-8);
        let m = SymOperator::dense(DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
        assert!((m.min_eigenvalue().unwrap() - 1.0).abs() < 1e-8);
        let p = SymOperator::rank_one(1.0, -1.0, &[1.0, 0.0]).unwrap();
        assert!(p.min_eigenvalue().unwrap().abs() < 1e-8);
    }

    #[test]
    fn psd_sqrt_examples() {
        let d = SymOperator::diagonal(vec![4.0, 9.0]).unwrap();
        assert_eq!(d.psd_sqrt().unwrap(), SymOperator::Diagonal(vec![2.0, 3.0]));

        let p = SymOperator::rank_one(1.0, -1.0, &[1.0, 2.0]).unwrap();
        assert_eq!(p.psd_sqrt().unwrap(), p);

        let m = SymOperator::dense(DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()).unwrap();
        let u = m.psd_sqrt().unwrap().to_dense();
        let s3 = 3f64.sqrt();
        let expected = [(s3 + 1.0) / 2.0, (s3 - 1.0) / 2.0, (s3 - 1.0) / 2.0, (s3 + 1.0) / 2.0];
        for (a, b) in u.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let d = SymOperator::diagonal(vec![1.0, -1e-3]).unwrap();
        assert!(matches!(d.psd_sqrt(), Err(Error::NotPsd { .. })));
        // within slack: clamped
        let d = SymOperator::diagonal(vec![0.25, -1e-12]).unwrap();
        assert_eq!(d.psd_sqrt().unwrap(), SymOperator::Diagonal(vec![0.5, 0.0]));
    }

    #[test]
    fn dense_rejects_asymmetric() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap();
        assert!(SymOperator::dense(m).is_err());
    }

    #[test]
    fn block_average_spectrum() {
        let p = SymOperator::block_average(3, 2);
        assert_eq!(p.eigenvalues().unwrap(), vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        assert!(p.is_idempotent());
        let q = p.affine(0.5, 0.5);
        assert!(!q.is_idempotent());
        assert!((q.min_eigenvalue().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn structured_sums_stay_structured() {
        let p = SymOperator::block_average(2, 3);
        let s = SymOperator::weighted_sum(&[(0.5, &p), (0.5, &SymOperator::identity(6))]).unwrap();
        assert!(matches!(s, SymOperator::BlockAverage { .. }));
        let a = SymOperator::rank_one(1.0, -1.0, &[1.0, 0.0]).unwrap();
        let b = SymOperator::rank_one(1.0, -1.0, &[0.0, 1.0]).unwrap();
        let s = SymOperator::weighted_sum(&[(0.5, &a), (0.5, &b)]).unwrap();
        assert!(matches!(s, SymOperator::Dense(_)));
        assert!(s.to_dense().sub(&DenseMatrix::identity(2).scaled(0.5)).max_abs() < 1e-15);
    }
}
