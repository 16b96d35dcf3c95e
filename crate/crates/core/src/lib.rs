//! Thermo-mechanical systems as second-order constrained Lagrangian systems.
// Comparisons written as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod numeric;
pub mod oracles;
pub mod scenarios;
pub mod socs;
pub mod thermo;

pub use error::{Error, Result};
