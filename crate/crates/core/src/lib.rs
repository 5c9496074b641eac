//! Asymptotic secret-key rates for two-way continuous-variable QKD whose
//! Gaussian sources are enhanced by virtual photon subtraction, together with
//! the one-way coherent-state baseline and the sweeps used to compare them.

// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod gaussian;
pub mod protocols;
pub mod sources;

pub use error::{Error, Result};
