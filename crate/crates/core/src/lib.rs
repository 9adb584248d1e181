// Negated comparisons are used on purpose so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod jet;
pub mod residuals;
pub mod scenario;
pub mod states;

pub use error::{Error, Result};
