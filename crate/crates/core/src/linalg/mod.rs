//! Sparse storage, a sparse direct SPD solver and dense matrix functions.

pub mod expm;
pub mod skyline;
pub mod sparse;

pub use expm::{expm, expm_phi1};
pub use skyline::SkylineCholesky;
pub use sparse::CsrMatrix;

/// Euclidean norm.
pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
