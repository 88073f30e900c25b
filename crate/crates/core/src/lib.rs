pub mod affine;
pub mod bench;
pub mod certificate;
pub mod error;
pub mod linalg;
pub mod objective;
pub mod solver;

pub use error::{Error, Result};
