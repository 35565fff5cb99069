//! Conformal prediction for parameterized quantum circuits.
//!
//! A trained circuit is treated as an implicit sampler: each shot is one
//! Born-rule draw, optionally corrupted by gate noise, drift and a classical
//! readout channel. The [`conformal`] module turns the shots into prediction
//! sets with finite-sample coverage, and [`harness`] runs the Monte Carlo
//! coverage studies on top of it.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices and a Hermitian Jacobi eigensolver
//! - [`qcore`]: gates, states, observables, Born probabilities, shot sampling
//! - [`ansatz`]: hardware-efficient ansatz with data re-uploading encoders
//! - [`noise`]: gate-noise mixing, shot drift and readout confusion
//! - [`train`]: losses, parameter-shift gradients and Adam
//! - [`conformal`]: scores, quantiles and set predictors (CP / PCP / QCP)
//! - [`qdata`]: Gibbs ensembles, pretty good measurement, POVM sampling
//! - [`harness`]: experiment configs, trial runner, coverage statistics

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod conformal;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod noise;
pub mod qcore;
pub mod qdata;
pub mod special;
pub mod train;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Seeded random stream used throughout the crate.
pub type Rng = rand_chacha::ChaCha8Rng;
