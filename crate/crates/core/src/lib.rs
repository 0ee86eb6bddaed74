//! Lévy random bridges: special functions, increment and bridge laws, the
//! generic bridge engine, exact path samplers, and the pricing and claims
//! reserving applications built on them.

// `!(x > 0.0)` is the NaN-rejecting guard used throughout; published
// tabulated constants keep their full digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bridges;
pub mod cli;
pub mod error;
pub mod lrb;
pub mod marginals;
pub mod pricing;
pub mod quad;
pub mod reserving;
pub mod simulate;
pub mod specfn;

pub use error::{LrbError, Result};
