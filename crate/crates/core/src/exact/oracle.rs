//! Unnormalized configuration weights for the samplers, and exact expectations.

use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;

use super::lanczos::GroundState;
use super::spectrum::ThermalSpectrum;
use crate::error::{Error, Result};
use crate::lattice::ChainSpace;
use crate::observable::ObservableSpec;
use crate::operator::Operator;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMode {
    /// Weights are squared amplitudes of a pure state; amplitudes are available.
    Ground,
    /// Weights are diagonal elements of a density matrix; no amplitudes.
    Thermal,
}

/// Evaluates the unnormalized weight `P(x)` of any basis configuration.
///
/// Only ratios of weights are meaningful. Implementations must be pure.
pub trait WeightOracle<T: Scalar>: Sync {
    fn space(&self) -> &ChainSpace;

    fn mode(&self) -> OracleMode;

    fn weight(&self, index: usize) -> T;

    /// Wavefunction amplitude `ψ(x)` in ground mode.
    fn amplitude(&self, _index: usize) -> Option<T> {
        None
    }
}

/// `P(x) = ψ(x)²` for a stored ground state.
#[derive(Clone, Debug)]
pub struct GroundOracle<T> {
    state: Arc<GroundState<T>>,
}

impl<T: Scalar> GroundOracle<T> {
    pub fn new(state: Arc<GroundState<T>>) -> Self {
        Self { state }
    }

    pub fn state(&self) -> &GroundState<T> {
        &self.state
    }
}

impl<T: Scalar> WeightOracle<T> for GroundOracle<T> {
    fn space(&self) -> &ChainSpace {
        &self.state.space
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Ground
    }

    fn weight(&self, index: usize) -> T {
        let a = self.state.amplitudes[index];
        a * a
    }

    fn amplitude(&self, index: usize) -> Option<T> {
        Some(self.state.amplitudes[index])
    }
}

/// `P_β(m) = ⟨m| e^{-β (H - E_0)} |m⟩`, memoized per configuration index.
#[derive(Debug)]
pub struct ThermalOracle<T> {
    spectrum: Arc<ThermalSpectrum<T>>,
    beta: T,
    factors: Vec<Vec<T>>,
    cache: DashMap<usize, T>,
}

impl<T: Scalar> ThermalOracle<T> {
    pub fn new(spectrum: Arc<ThermalSpectrum<T>>, beta: T) -> Result<Self> {
        if !(beta >= T::zero()) || !beta.is_finite() {
            return Err(Error::OutOfRange(format!("inverse temperature must be finite and >= 0, got {beta}")));
        }
        let factors = spectrum.boltzmann_factors(beta);
        Ok(Self {
            spectrum,
            beta,
            factors,
            cache: DashMap::new(),
        })
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn spectrum(&self) -> &ThermalSpectrum<T> {
        &self.spectrum
    }

    pub fn cached_len(&self) -> usize {
        self.cache.len()
    }
}

impl<T: Scalar> WeightOracle<T> for ThermalOracle<T> {
    fn space(&self) -> &ChainSpace {
        self.spectrum.space()
    }

    fn mode(&self) -> OracleMode {
        OracleMode::Thermal
    }

    fn weight(&self, index: usize) -> T {
        if let Some(w) = self.cache.get(&index) {
            return *w;
        }
        let w = self.spectrum.weight_with(&self.factors, index);
        self.cache.insert(index, w);
        w
    }
}

/// Explicit weight table, optionally with amplitudes.
#[derive(Clone, Debug)]
pub struct TableOracle<T> {
    space: ChainSpace,
    weights: Vec<T>,
    amplitudes: Option<Vec<T>>,
}

impl<T: Scalar> TableOracle<T> {
    pub fn from_weights(space: ChainSpace, weights: Vec<T>) -> Result<Self> {
        if weights.len() != space.dim() {
            return Err(Error::OutOfRange(format!(
                "{} weights for a basis of {}",
                weights.len(),
                space.dim()
            )));
        }
        if weights.iter().any(|w| !(*w >= T::zero())) {
            return Err(Error::OutOfRange("weights must be nonnegative".into()));
        }
        Ok(Self {
            space,
            weights,
            amplitudes: None,
        })
    }

    pub fn from_amplitudes(space: ChainSpace, amplitudes: Vec<T>) -> Result<Self> {
        let weights = amplitudes.iter().map(|&a| a * a).collect();
        let mut oracle = Self::from_weights(space, weights)?;
        oracle.amplitudes = Some(amplitudes);
        Ok(oracle)
    }

    pub fn uniform(space: ChainSpace) -> Self {
        let n = space.dim();
        Self {
            space,
            weights: vec![T::one(); n],
            amplitudes: None,
        }
    }
}

impl<T: Scalar> WeightOracle<T> for TableOracle<T> {
    fn space(&self) -> &ChainSpace {
        &self.space
    }

    fn mode(&self) -> OracleMode {
        if self.amplitudes.is_some() {
            OracleMode::Ground
        } else {
            OracleMode::Thermal
        }
    }

    fn weight(&self, index: usize) -> T {
        self.weights[index]
    }

    fn amplitude(&self, index: usize) -> Option<T> {
        self.amplitudes.as_ref().map(|a| a[index])
    }
}

/// Exact `⟨O⟩` over the full basis.
///
/// Ground mode accepts any observable, `Σ ψ(x) O[x, x'] ψ(x') / Σ ψ²`;
/// thermal mode requires a diagonal observable, `Σ P(m) O(m) / Σ P`.
pub fn exact_expectation<T: Scalar, W: WeightOracle<T> + ?Sized>(
    observable: &ObservableSpec<T>,
    oracle: &W,
) -> Result<T> {
    let dim = oracle.space().dim();
    if observable.space() != oracle.space() {
        return Err(Error::OutOfRange("observable and oracle live on different chains".into()));
    }
    match oracle.mode() {
        OracleMode::Ground => {
            let amp = |i| {
                oracle
                    .amplitude(i)
                    .ok_or_else(|| Error::UnsupportedObservable("ground-mode oracle without amplitudes".into()))
            };
            amp(0)?;
            let terms: Vec<(T, T)> = (0..dim)
                .into_par_iter()
                .with_min_len(4096)
                .map_init(Vec::new, |row, x| {
                    let psi = oracle.amplitude(x).unwrap_or_else(T::zero);
                    row.clear();
                    observable.row_into(x, row);
                    let local: T = row
                        .iter()
                        .map(|&(y, a)| a * oracle.amplitude(y).unwrap_or_else(T::zero))
                        .sum();
                    (psi * local, psi * psi)
                })
                .collect();
            let (num, den) = terms
                .into_iter()
                .fold((T::zero(), T::zero()), |(n, d), (a, b)| (n + a, d + b));
            if den == T::zero() {
                return Err(Error::EmptySupport);
            }
            Ok(num / den)
        }
        OracleMode::Thermal => {
            if !observable.is_diagonal() {
                return Err(Error::UnsupportedObservable(format!(
                    "{} is off-diagonal; thermal expectations support diagonal observables only",
                    observable.kind()
                )));
            }
            let weights: Vec<T> = (0..dim).into_par_iter().with_min_len(256).map(|m| oracle.weight(m)).collect();
            let den: T = weights.iter().copied().sum();
            if den == T::zero() {
                return Err(Error::EmptySupport);
            }
            let num: T = weights
                .iter()
                .enumerate()
                .map(|(m, &w)| w * observable.diagonal_value(m).expect("diagonal"))
                .sum();
            Ok(num / den)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::lanczos::{lanczos_ground, LanczosSettings};
    use crate::exact::spectrum::{dense_spectrum, DEFAULT_DENSE_CAP};
    use crate::hamiltonian::{BlbqParams, TimParams};
    use crate::observable::{observable_factory, ObservableKind};

    fn ground(len: usize, j: f64, hx: f64, hz: f64) -> GroundOracle<f64> {
        let p = TimParams::new(len, j, hx, hz).unwrap();
        GroundOracle::new(Arc::new(lanczos_ground(&p, &LanczosSettings::default()).unwrap()))
    }

    #[test]
    fn all_up_basis_state() {
        let s = ChainSpace::spin_half(3).unwrap();
        let mut amps = vec![0.0; 8];
        amps[7] = 1.0;
        let o = TableOracle::from_amplitudes(s.clone(), amps).unwrap();
        let sz = observable_factory(ObservableKind::SigmaZ(1), &s).unwrap();
        assert_eq!(exact_expectation(&sz, &o).unwrap(), 1.0);
    }

    #[test]
    fn paramagnet_magnetization_small_nonzero() {
        let o = ground(8, 1.0, 10.0, 0.5);
        let sz = observable_factory(ObservableKind::SigmaZ(3), o.space()).unwrap();
        let v = exact_expectation(&sz, &o).unwrap();
        assert!(v.abs() > 1e-4 && v.abs() < 0.1, "{v}");
    }

    #[test]
    fn spin_flip_symmetry_without_longitudinal_field() {
        let o = ground(8, 1.0, 10.0, 0.0);
        for i in 0..8 {
            let sz = observable_factory(ObservableKind::SigmaZ(i), o.space()).unwrap();
            assert!(exact_expectation(&sz, &o).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn expectation_scale_invariant() {
        let o = ground(6, 1.0, 0.5, 0.5);
        let scaled = TableOracle::from_amplitudes(
            o.space().clone(),
            o.state().amplitudes.iter().map(|a| 3.7 * a).collect(),
        )
        .unwrap();
        for kind in [ObservableKind::SigmaZZ(2, 3), ObservableKind::SigmaX(1)] {
            let obs = observable_factory(kind, o.space()).unwrap();
            let a = exact_expectation(&obs, &o).unwrap();
            let b = exact_expectation(&obs, &scaled).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_temperature_connected_correlator_vanishes() {
        let p = BlbqParams::new(4, 1.0f64, 0.2).unwrap();
        let s = Arc::new(dense_spectrum(&p, DEFAULT_DENSE_CAP).unwrap());
        let o = ThermalOracle::new(s, 0.0).unwrap();
        let space = o.space().clone();
        let e = |k| exact_expectation(&observable_factory(k, &space).unwrap(), &o).unwrap();
        let c = e(ObservableKind::Spin1SzSz(1, 2)) - e(ObservableKind::Spin1Sz(1)) * e(ObservableKind::Spin1Sz(2));
        assert!(c.abs() < 1e-12);
    }

    #[test]
    fn thermal_rejects_off_diagonal() {
        let p = TimParams::new(4, 1.0, 0.5, 0.5).unwrap();
        let s = Arc::new(dense_spectrum(&p, DEFAULT_DENSE_CAP).unwrap());
        let o = ThermalOracle::new(s, 1.0).unwrap();
        let sx = observable_factory(ObservableKind::SigmaX(0), o.space()).unwrap();
        assert!(matches!(exact_expectation(&sx, &o), Err(Error::UnsupportedObservable(_))));
        assert!(o.cached_len() == 0);
    }

    #[test]
    fn thermal_cache_fills() {
        let p = TimParams::new(4, 1.0, 0.5, 0.5).unwrap();
        let s = Arc::new(dense_spectrum(&p, DEFAULT_DENSE_CAP).unwrap());
        let o = ThermalOracle::new(s, 1.0).unwrap();
        let w = o.weight(5);
        assert_eq!(o.weight(5), w);
        assert_eq!(o.cached_len(), 1);
        assert!(ThermalOracle::new(o.spectrum.clone(), -1.0).is_err());
    }
}
