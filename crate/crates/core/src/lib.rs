//! Recursive (Wolverton-Wagner) kernel density estimation with data-driven
//! selection of the bandwidth exponent.
//!
//! The estimator after `n` observations is `(1/n) Σ_k K_{h_k}(X_k − x)` with
//! `h_k = k^{−γ}`, so one more observation updates it in `O(1)` per grid point.
//! Kernels are signed mixtures of centered normal densities, which makes
//! convolutions and L2 inner products closed-form. The exponent is chosen by
//! penalized comparison to the most overfitting candidate (LMR) or by the
//! Goldenshluger-Lepski rule (GL).
//!
//! * [`kernels`]: Gaussian-mixture kernels `K1`…`K7` and their algebra.
//! * [`bandwidths`]: schedules, candidate grids and rate diagnostics.
//! * [`estimator`]: batch evaluation, L2 distances and the streaming matrix.
//! * [`selection`]: LMR and GL criteria.
//! * [`densities`]: the benchmark densities and seeded sampling.
//! * [`experiments`]: Monte-Carlo MISE, frozen-exponent and online protocols.
//! * [`io`] and [`cli`]: file formats and the `wwkde` command line.

pub mod bandwidths;
pub mod cli;
pub mod densities;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod io;
pub mod kernels;
pub mod quadrature;
pub mod selection;

pub use error::{Error, Result};
