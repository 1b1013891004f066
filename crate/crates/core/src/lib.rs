// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dg;
pub mod error;
pub mod frac_space;
pub mod frac_time;
pub mod harness;
pub mod manufactured;
pub mod solvers;
pub mod special;

pub use error::{Error, Result};
