//! Mexican needlet frames on the unit circle and the adaptive thresholding
//! density estimator built on them.
//!
//! The crate is organised bottom-up:
//!
//! - [`special_fn`]: the Mexican weight `w_s(x) = x^s e^{-x}`, incomplete gamma
//!   functions, Calderón partial sums and frequency tail bounds.
//! - [`circle_fourier`]: Fourier analysis under the normalised measure
//!   `dθ / 2π`.
//! - [`frame`]: partitions, atoms, analysis/synthesis, tightness and bias
//!   diagnostics.
//! - [`sampling`]: circular target densities and seeded inverse-CDF sampling.
//! - [`estimator`]: tuning, empirical coefficients, hard thresholding and
//!   Monte-Carlo risk.
//! - [`experiments`]: the config-driven commands behind the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod circle_fourier;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod frame;
pub mod rng;
pub mod sampling;
pub mod special_fn;

pub use error::{Error, Result};
