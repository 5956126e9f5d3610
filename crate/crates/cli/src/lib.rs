//! Experiment driver for the topomode sensitivity toolkit: configuration,
//! reproducible artifact directories and the experiment campaigns behind the
//! `topomode` binary.

// Negated comparisons are used so that NaN inputs fail validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basin;
pub mod campaign;
pub mod config;
pub mod error;
pub mod fields;
pub mod manifest;
pub mod matrix_io;
pub mod setup;
