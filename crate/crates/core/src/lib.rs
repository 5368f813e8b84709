//! Adaptive nonparametric density estimation in the pile-up model.
//!
//! In time-correlated single-photon counting (TCSPC) and related acquisition
//! schemes, each recorded event is the *minimum* of a random number `N` of
//! i.i.d. draws from the target distribution, optionally shifted by additive
//! instrument noise. This crate recovers the target density from such
//! distorted samples:
//!
//! - [`pileup`] — generating-function machinery for the count distribution
//!   `N` and the rank weights that de-bias order statistics,
//! - [`samplers`] — target distributions, pile-up sample generation and the
//!   empirical CDF,
//! - [`projection`] — the noise-free projection estimator on the
//!   trigonometric basis with penalized model selection,
//! - [`noise`] — parametric and empirical noise models, their Fourier
//!   transforms and the deconvolution variance factor,
//! - [`deconvolution`] — the sinc-basis deconvolution estimator with
//!   penalized cutoff selection,
//! - [`harness`] — MISE benchmarks and replicated simulation runs.

pub mod deconvolution;
pub mod error;
pub mod harness;
pub mod io;
pub mod noise;
pub mod pileup;
pub mod projection;
pub mod quad;
pub mod rng;
pub mod samplers;

pub use error::{CoreError, Result};
pub use noise::NoiseModel;
pub use pileup::{GeneratingModel, WeightProfile};
pub use samplers::{Sample, TargetDistribution};
