#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod conditions;
pub mod error;
pub mod hypercomplex;
pub mod jc;
pub mod matrix;
pub mod oscillator;
pub mod presets;
pub mod quadrature;
pub mod report;
pub mod resolution;
pub mod special;
pub mod states;
pub mod weights;

pub use error::{Error, Result};
pub use matrix::ComplexMatrix;
