// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod forcing;
pub mod harness;
pub mod spectral;
pub mod statistics;

pub use error::{Error, Result};
