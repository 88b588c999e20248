//! Periodic orbits of `z^2 + c`, the log-derivatives of their multipliers,
//! and the atlases built from them.

// `!(x > 0.0)` is used on purpose so NaN is rejected along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod dynamics;
pub mod error;
pub mod hull;
pub mod multiplier;
pub mod orbit;
pub mod param;

pub use error::{Error, Result};
pub use param::ComplexParam;
