//! Simulation core for channel-impulse-response (CIR) based distributed
//! physical-layer authentication.
//!
//! A set of sensor nodes ("Bobs") measure the CIR of whoever occupies a
//! shared channel and report either raw measurements or local hard
//! decisions to a fusion center, optionally through a compressed-sensing
//! reporting link. This crate holds the pure algorithmic pieces:
//!
//! - [`numerics`]: counter-based RNG streams, complex Gaussian sampling,
//!   chi-squared distribution functions, dense Hermitian linear algebra.
//! - [`channel`]: exponentially correlated channel ensembles and noisy
//!   CIR measurements.
//! - [`detect`]: Neyman-Pearson tests at the nodes and the fusion center,
//!   threshold calibration and hard-decision fusion.
//! - [`sparse`]: random projections, orthonormal bases and orthogonal
//!   matching pursuit.
//! - [`simkit`]: the Monte Carlo engine producing detection curves.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! multi-threaded execution live in the `distauth` crate.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod channel;
pub mod detect;
mod error;
pub mod numerics;
pub mod simkit;
pub mod sparse;

pub use error::{Error, Result};
pub use num_complex::Complex64;
