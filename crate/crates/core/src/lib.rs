//! Red-alert unequal error protection on AWGN and binary symmetric channels.
//!
//! The crate computes closed-form exponents and decoder geometry, builds
//! random codebooks with one high-priority codeword, simulates transmission,
//! and evaluates missed-detection probabilities exactly in the log domain.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod codec;
pub mod error;
pub mod estimate;
pub mod exponents;
pub mod geometry;
pub mod ldp;
mod rng;
pub mod special;

pub use error::{Error, Result};
