//! Finite-element barotropic ocean model with tangent-linear topographic
//! sensitivity analysis.

// Negated comparisons are used so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fem;
pub mod grid;
pub mod linalg;
pub mod mesh;
pub mod sensitivity;
pub mod tangent;

pub use error::{Error, Result};
