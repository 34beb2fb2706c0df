//! Maximum-likelihood data-driven modeling with signal matrices.
//!
//! The crate is organized bottom-up:
//!
//! - [`lti`]: discrete-time state-space systems, simulation and data generation.
//! - [`signal_matrix`]: Hankel/Page data matrices, rank checks and SVD compression.
//! - [`estimator`]: the pseudoinverse predictor, the output covariance and the
//!   signal matrix model (SMM) computed by sequential quadratic programming.
//! - [`kernel`]: FIR identification by least squares or SMM simulation, combined
//!   with a tuned/correlated kernel prior chosen by empirical Bayes.
//! - [`control`]: receding-horizon controllers (subspace predictive control,
//!   regularized DeePC, SMM predictive control, ideal MPC) and closed-loop runs.

pub mod control;
pub mod error;
pub mod estimator;
pub mod kernel;
pub mod linalg;
pub mod lti;
pub mod rng;
pub mod signal_matrix;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
