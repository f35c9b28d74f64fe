//! Phase-tokenized forecasting: a small routing transformer that attends
//! across the phases of a periodic series, with training, data handling and
//! diagnostics of phase versus patch token spaces.
//!
//! Every module works on plain `f64` matrices ([`numerics::Matrix`]) and is
//! deterministic given its seeds.

pub mod cli;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod numerics;
pub mod preprocessing;
pub mod training;

pub use error::{Error, Result};
