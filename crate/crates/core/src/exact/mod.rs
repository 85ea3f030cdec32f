//! Exact ground truth: Lanczos ground states, block-dense thermal spectra,
//! weight oracles for the samplers, and full-basis expectation values.

mod lanczos;
mod oracle;
pub mod snapshot;
mod spectrum;

pub use lanczos::{lanczos_ground, GroundState, LanczosSettings};
pub use oracle::{exact_expectation, GroundOracle, OracleMode, TableOracle, ThermalOracle, WeightOracle};
pub use spectrum::{dense_spectrum, thermal_weight, SpectralBlock, ThermalSpectrum, DEFAULT_DENSE_CAP};
