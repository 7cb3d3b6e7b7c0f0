//! Numerical analysis of the annealed dilute Curie–Weiss model.
//!
//! The crate computes the model three independent ways and cross-checks them:
//!
//! * [`exact`]: the collapsed finite-`N` partition sum and the exact law of
//!   the magnetization, in extended precision;
//! * [`saddle`]: the complex saddle point of the Hubbard–Stratonovich
//!   integral, its asymptotic pressure, and direct quadrature of the integral;
//! * [`cumulants`]: cumulants as Cauchy integrals of the pressure around a
//!   circle inside the holomorphy strip.
//!
//! [`limits`] turns exact laws into diagnostics for the limit theorems
//! (Berry–Esseen, concentration, Cramér corrections, moderate deviations,
//! mod-Gaussian convergence) and [`verify`] bundles every check into suites.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod cumulants;
pub mod error;
pub mod exact;
pub mod export;
pub mod limits;
pub mod params;
pub mod saddle;
pub mod verify;
pub mod xprec;

pub use error::{Error, Result};
pub use params::{effective_params, validate_params, EffectiveParams, ModelParams};
pub use xprec::Precision;
