use super::AffineFneMap;
use crate::error::{Error, Result};
use crate::linalg::{norm, scale, SymOperator, Vector};

/// Projection onto the consensus subspace `{(x, ..., x)}` of `num_blocks`
/// blocks of dimension `block_dim`: every block is replaced by the block mean.
pub fn make_consensus_projection(num_blocks: usize, block_dim: usize) -> Result<AffineFneMap> {
    if num_blocks == 0 || block_dim == 0 {
        return Err(Error::Malformed("consensus projection needs positive block count and dimension".into()));
    }
    let dim = num_blocks * block_dim;
    if num_blocks == 1 {
        return Ok(AffineFneMap::identity(dim));
    }
    AffineFneMap::new(SymOperator::block_average(num_blocks, block_dim), vec![0.0; dim])?
        .with_witness(Vector::zeros(dim))
}

/// Projection onto the hyperplane `{x : <a, x> = b}`.
pub fn make_hyperplane_projection(a: &[f64], b: f64) -> Result<AffineFneMap> {
    let na = norm(a);
    if na == 0.0 {
        return Err(Error::Malformed("hyperplane normal must be nonzero".into()));
    }
    if !na.is_finite() || !b.is_finite() {
        return Err(Error::Malformed("hyperplane data must be finite".into()));
    }
    let w = scale(a, b / (na * na));
    let q = SymOperator::rank_one(1.0, -1.0, a)?;
    AffineFneMap::new(q, w.clone())?.with_witness(Vector::new(w)?)
}
