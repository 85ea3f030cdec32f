//! Concentrated Monte Carlo sampling (CMCS) of local observables in open
//! one-dimensional quantum spin chains.
//!
//! The crate bundles everything needed to compare CMCS against a plain
//! Metropolis baseline:
//!
//! - [`lattice`]: configurations, mixed-radix indices, local regions.
//! - [`hamiltonian`] and [`observable`]: matrix-free operators.
//! - [`exact`]: Lanczos ground states, block-dense thermal spectra and the
//!   weight oracles both samplers draw from.
//! - [`mcmc`]: single-site Metropolis chains and the plain estimator.
//! - [`cmcs`]: ensemble reconstruction, renormalization and estimation.
//! - [`experiment`]: replicated error studies written out as CSV.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the common choices.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod cmcs;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod hamiltonian;
pub mod lattice;
pub mod mcmc;
pub mod observable;
pub mod operator;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TimParams64 = hamiltonian::TimParams<f64>;
pub type TimParams32 = hamiltonian::TimParams<f32>;
pub type BlbqParams64 = hamiltonian::BlbqParams<f64>;
pub type BlbqParams32 = hamiltonian::BlbqParams<f32>;
pub type GroundState64 = exact::GroundState<f64>;
pub type GroundState32 = exact::GroundState<f32>;
pub type ThermalSpectrum64 = exact::ThermalSpectrum<f64>;
pub type ThermalSpectrum32 = exact::ThermalSpectrum<f32>;
pub type ObservableSpec64 = observable::ObservableSpec<f64>;
pub type ObservableSpec32 = observable::ObservableSpec<f32>;
pub type Ensemble64 = cmcs::ConcentratedEnsemble<f64>;
pub type Ensemble32 = cmcs::ConcentratedEnsemble<f32>;
pub type ErrorReport64 = experiment::ErrorReport<f64>;
pub type ErrorReport32 = experiment::ErrorReport<f32>;
