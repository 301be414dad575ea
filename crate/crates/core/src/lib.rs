//! Multi-fidelity quantile regression.
//!
//! Estimates conditional quantiles of a scarce high-fidelity (HF) response by
//! wrapping HF observations through an estimated low-fidelity (LF) conditional
//! CDF; the fitted level function is mapped back through the LF quantile map.
//! Corrections toward the HF quantile equation are tuned by cross-fitting, and
//! quantile pairs are calibrated with split conformal prediction.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the experiment
//! runner and the CLI live in the `mfqr` companion crate.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod conformal;
pub mod data;
pub mod dist;
pub mod error;
pub mod experiment;
pub mod forest;
pub mod gp;
pub mod kernel;
mod linalg;
pub mod local;
pub mod metrics;
pub mod mfqr;
pub mod model;
pub mod rng;
pub mod synthetic;

pub use error::{Error, Result};
