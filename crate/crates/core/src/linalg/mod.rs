//! Dense and structured linear algebra shared by every other module.
//!
//! Vectors are plain `f64` slices in the hot paths; [`Vector`] is the validated
//! owned form used for stored data (offsets, witnesses, minimizers).

mod check;
mod dense;
mod eigen;
mod svd;
mod sym;

use std::ops::{Deref, DerefMut};

use crate::error::{check_dim, Error, Result};

pub use check::{check_strongly_positive_inverse, StrongPositivityReport};
pub use dense::DenseMatrix;
pub use eigen::{symmetric_eigen, SymmetricEigen};
pub use svd::{matrix_spectral_norm, pseudoinverse, Svd};
pub use sym::{SymOperator, PSD_SLACK};

/// Owned vector with finite entries and dimension at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("vector"));
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Vector(entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim])
    }

    /// Standard basis vector `e_index` of the given dimension.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Vector(v)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Vector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Block structure of a product space `X_0^(1) x ... x X_0^(I)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl BlockLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Empty("block layout"));
        }
        if dims.contains(&0) {
            return Err(Error::Malformed("block dimensions must be positive".into()));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in &dims {
            acc += d;
            offsets.push(acc);
        }
        Ok(BlockLayout { dims, offsets })
    }

    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn uniform(blocks: usize, block_dim: usize) -> Result<Self> {
        Self::new(vec![block_dim; blocks])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_blocks(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn range(&self, block: usize) -> std::ops::Range<usize> {
        self.offsets[block]..self.offsets[block + 1]
    }

    pub fn block<'a>(&self, x: &'a [f64], block: usize) -> &'a [f64] {
        &x[self.range(block)]
    }
}

/// A vector viewed as an ordered list of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockVector {
    layout: BlockLayout,
    data: Vec<f64>,
}

impl BlockVector {
    pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
        let layout = BlockLayout::new(blocks.iter().map(Vec::len).collect())?;
        let data: Vec<f64> = blocks.into_iter().flatten().collect();
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(BlockVector { layout, data })
    }

    pub fn from_flat(layout: BlockLayout, data: Vec<f64>) -> Result<Self> {
        check_dim(layout.total_dim(), data.len())?;
        Ok(BlockVector { layout, data })
    }

    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    pub fn block(&self, i: usize) -> &[f64] {
        self.layout.block(&self.data, i)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.data
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `y += s * x`
pub fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vector_rejects_nan_and_empty() {
        assert!(matches!(Vector::new(vec![]), Err(Error::Empty(_))));
        assert!(matches!(
            Vector::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1 })
        ));
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn block_layout_offsets() {
        let layout = BlockLayout::new(vec![1, 3, 2]).unwrap();
        assert_eq!(layout.total_dim(), 6);
        assert_eq!(layout.range(1), 1..4);
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(layout.block(&x, 2), &[4.0, 5.0]);
        assert!(BlockLayout::new(vec![2, 0]).is_err());
    }

    #[test]
    fn block_vector_roundtrip() {
        let bv = BlockVector::from_blocks(vec![vec![1.0], vec![2.0, 3.0]]).unwrap();
        assert_eq!(bv.block(1), &[2.0, 3.0]);
        assert_eq!(bv.layout().dims(), &[1, 2]);
        assert_eq!(bv.into_flat(), vec![1.0, 2.0, 3.0]);
    }
}
