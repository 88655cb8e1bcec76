//! Parameter estimation for the Jelinski-Moranda software reliability model.
//!
//! The crate fits the inherent error count `N0` and the per-error hazard
//! constant `Phi` by maximum likelihood, nonlinear least squares and
//! weighted nonlinear least squares (empirical, optimal and
//! heteroscedasticity-driven weights), and evaluates the fits with the
//! relative-error criteria used in the software reliability literature.
//!
//! ```
//! use jm_core::dataset::builtin_dataset;
//! use jm_core::estimators::{estimate, EstimatorConfig, Method};
//! use jm_core::solver::SolutionMode;
//!
//! let ntds = builtin_dataset("ntds").unwrap().prefix(26).unwrap();
//! let fit = estimate(&ntds, &Method::Mle, SolutionMode::Reasonable, &EstimatorConfig::default()).unwrap();
//! assert!((fit.params.n0() - 31.2159).abs() < 1e-3);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod golden;
pub mod heteroscedasticity;
pub mod model;
pub mod report;
pub mod solver;
pub mod weights;

pub use error::{JmError, Result};
