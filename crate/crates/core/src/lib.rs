//! Simulation and verification of continuous-variable entanglement between
//! bright light beams.
//!
//! * [`gaussian`]: linearized Gaussian states, passive optics, loss, sampling.
//! * [`entanglement`]: entangled-pair generation and non-separability witnesses.
//! * [`detection`]: the three interferometric measurement schemes.
//! * [`harness`]: scenario files, sweeps and method comparison.

// `!(x > 0.0)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detection;
pub mod entanglement;
pub mod error;
pub mod gaussian;
pub mod harness;

pub use error::{Error, Result};
