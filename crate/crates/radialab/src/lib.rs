//! Magnitude laws of radial densities in high dimension.
//!
//! A radial density on R^{d+1} is determined by its profile psi through
//! f(x) = c_d * psi(|x|); the Euclidean norm of a draw then has density
//! c_d * u^d * psi(u) on the half-line. This crate computes that magnitude
//! law exactly (normalizing constant, CDF, quantiles), locates where it
//! concentrates, compares it against its Gamma or Gaussian limit shape, and
//! samples from it reproducibly, in parallel, for empirical studies. The
//! `experiments` module and the `radialab` binary wrap all of it into
//! repeatable report-producing runs.

pub mod distributions;
pub mod error;
pub mod exec;
pub mod experiments;
pub(crate) mod fmtnum;
pub mod numerics;
pub mod sampling;
pub mod shapes;

pub use error::{Error, Result};
