//! Normalizing-constant estimation for log-concave densities.
//!
//! Given a potential `U` with `e^{-U}` integrable and log-concave, the
//! library estimates `Z = ∫ e^{-U(x)} dx` by annealing a Gaussian reference
//! through a geometric-like variance schedule and averaging importance
//! weights along unadjusted Langevin chains, one chain per phase. The
//! per-phase ratios multiply (add, in log space) into `log Z` together with
//! the closed-form mass of the initial Gaussian.
//!
//! Modules:
//! - [`potential`]: target definitions, mode centering, built-in models
//! - [`schedule`]: variance sequence, tilt exponents, step-size/horizon tuning
//! - [`sampler`]: Langevin kernels and seeded RNG streams
//! - [`estimator`]: ratio accumulation, assembly, median-of-replicates
//! - [`diagnostics`]: non-asymptotic bias/variance certificates, replicate stats
//! - [`oracle`]: closed-form and quadrature references for validation
//! - [`config`]: TOML run configuration shared with the `logz` binary

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod oracle;
pub mod potential;
pub mod sampler;
pub mod schedule;

pub use error::{LogzError, Result};
