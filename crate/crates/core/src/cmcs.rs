//! Concentrated Monte Carlo sampling.
//!
//! Every sampled configuration is split into a local region and its
//! environment. The distinct environments are paired with all `d^ℓ` local
//! configurations, the weights are renormalized over that ensemble, and local
//! observables are averaged with the renormalized weights:
//!
//! ```text
//! U     = { (u_loc, u_env) : u_loc ∈ all local states, u_env ∈ unique sampled environments }
//! P̃(u)  = P(u) / Σ_{y∈U} P(y)
//! ⟨O⟩   ≈ Σ_{u∈U} P̃(u) Σ_{u'} O[u, u'] ψ(u') / ψ(u)
//! ```
//!
//! Off-diagonal observables must act inside the region, so every connected
//! `u'` only changes local sites and is itself a member of `U`.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::WeightOracle;
use crate::lattice::{enumerate_local, ChainSpace, LocalRegion, DEFAULT_ENUMERATION_CAP};
use crate::mcmc::SampleSet;
use crate::observable::{z_value, ObservableSpec};
use crate::operator::Operator;
use crate::scalar::Scalar;

/// Environment digits of `index` (sites outside the region, ascending) as a
/// mixed-radix integer, least-significant site first.
fn environment_key(space: &ChainSpace, region: &LocalRegion, index: usize) -> usize {
    let d = space.local_dim();
    let mut key = 0usize;
    let mut place = 1usize;
    for site in region.environment_sites() {
        key += space.digit(index, site) as usize * place;
        place *= d;
    }
    key
}

/// Global index with the region's sites cleared.
fn environment_offset(space: &ChainSpace, region: &LocalRegion, index: usize) -> usize {
    region
        .sites()
        .fold(index, |acc, site| space.with_digit(acc, site, 0))
}

/// Distinct environments of the samples, in first-occurrence order.
pub fn unique_environments(samples: &SampleSet, region: &LocalRegion) -> Result<Vec<Vec<u8>>> {
    let space = samples.space();
    Ok(unique_environment_offsets(samples, region)?
        .into_iter()
        .map(|offset| region.environment_sites().map(|s| space.digit(offset, s)).collect())
        .collect())
}

fn unique_environment_offsets(samples: &SampleSet, region: &LocalRegion) -> Result<Vec<usize>> {
    let space = samples.space();
    if samples.is_empty() {
        return Err(Error::OutOfRange("empty sample set".into()));
    }
    if region.chain_len() != space.len() || region.local_dim() != space.local_dim() {
        return Err(Error::OutOfRange("region does not belong to the sampled chain".into()));
    }
    let mut seen = HashMap::new();
    let mut offsets = Vec::new();
    for &i in samples.indices() {
        let key = environment_key(space, region, i);
        seen.entry(key).or_insert_with(|| {
            offsets.push(environment_offset(space, region, i));
        });
    }
    Ok(offsets)
}

/// The reconstructed ensemble `U` with renormalized weights.
#[derive(Clone, Debug)]
pub struct ConcentratedEnsemble<T> {
    space: ChainSpace,
    region: LocalRegion,
    local_basis: Vec<Vec<u8>>,
    /// Global-index contribution of each local configuration.
    local_offsets: Vec<usize>,
    /// Global index of each environment with the region cleared.
    env_offsets: Vec<usize>,
    /// `P̃`, local-index-major: entry `i * N_e + j`.
    weights: Vec<T>,
}

pub fn build_ensemble<T: Scalar, W: WeightOracle<T> + ?Sized>(
    samples: &SampleSet,
    region: &LocalRegion,
    oracle: &W,
) -> Result<ConcentratedEnsemble<T>> {
    let space = samples.space().clone();
    if oracle.space() != &space {
        return Err(Error::OutOfRange("oracle and samples live on different chains".into()));
    }
    let env_offsets = unique_environment_offsets(samples, region)?;
    let local_basis = enumerate_local(region, DEFAULT_ENUMERATION_CAP)?;
    let local_offsets: Vec<usize> = local_basis
        .iter()
        .map(|local| {
            local
                .iter()
                .enumerate()
                .map(|(k, &v)| v as usize * space.power(region.start() + k))
                .sum()
        })
        .collect();

    let n_e = env_offsets.len();
    let raw: Vec<T> = (0..local_offsets.len() * n_e)
        .into_par_iter()
        .with_min_len(256)
        .map(|u| oracle.weight(local_offsets[u / n_e] + env_offsets[u % n_e]))
        .collect();
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::EmptySupport);
    }
    let weights = raw.into_iter().map(|w| w / total).collect();

    Ok(ConcentratedEnsemble {
        space,
        region: *region,
        local_basis,
        local_offsets,
        env_offsets,
        weights,
    })
}

/// A CMCS estimate, flagged when a diagonal observable reaches outside the region.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CmcsEstimate<T> {
    pub value: T,
    pub outside_region: bool,
}

impl<T: Scalar> ConcentratedEnsemble<T> {
    pub fn region(&self) -> &LocalRegion {
        &self.region
    }

    pub fn space(&self) -> &ChainSpace {
        &self.space
    }

    /// `N_e`.
    pub fn environment_count(&self) -> usize {
        self.env_offsets.len()
    }

    /// `N_u = N_ℓ · N_e`.
    pub fn unique_count(&self) -> usize {
        self.weights.len()
    }

    pub fn local_basis(&self) -> &[Vec<u8>] {
        &self.local_basis
    }

    pub fn environments(&self) -> Vec<Vec<u8>> {
        self.env_offsets
            .iter()
            .map(|&o| self.region.environment_sites().map(|s| self.space.digit(o, s)).collect())
            .collect()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Global configuration index of ensemble member `(local i, environment j)`.
    #[inline]
    pub fn member(&self, local: usize, env: usize) -> usize {
        self.local_offsets[local] + self.env_offsets[env]
    }

    /// Ensemble members with their renormalized weights, local-index-major.
    pub fn members(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        let n_e = self.env_offsets.len();
        self.weights
            .iter()
            .enumerate()
            .map(move |(u, &w)| (self.member(u / n_e, u % n_e), w))
    }

    /// `Σ P̃(u) f(u)` for a diagonal function of the configuration.
    pub fn average(&self, f: impl Fn(usize) -> T) -> T {
        self.members().map(|(u, w)| w * f(u)).sum()
    }

    fn check_observable(&self, observable: &ObservableSpec<T>) -> Result<bool> {
        if observable.space() != &self.space {
            return Err(Error::OutOfRange("observable and ensemble live on different chains".into()));
        }
        Ok(observable.support().iter().any(|&s| !self.region.contains(s)))
    }
}

pub fn cmcs_estimate<T: Scalar, W: WeightOracle<T> + ?Sized>(
    observable: &ObservableSpec<T>,
    ensemble: &ConcentratedEnsemble<T>,
    oracle: &W,
) -> Result<CmcsEstimate<T>> {
    let outside = ensemble.check_observable(observable)?;
    if observable.is_diagonal() {
        if outside {
            log::warn!(
                "{} on sites {:?} reaches outside region [{}, {})",
                observable.kind(),
                observable.support(),
                ensemble.region.start(),
                ensemble.region.end()
            );
        }
        let value = ensemble.average(|u| observable.diagonal_value(u).expect("diagonal"));
        return Ok(CmcsEstimate {
            value,
            outside_region: outside,
        });
    }
    if outside {
        return Err(Error::UnsupportedSupport(format!(
            "off-diagonal {} on sites {:?} must lie inside region [{}, {})",
            observable.kind(),
            observable.support(),
            ensemble.region.start(),
            ensemble.region.end()
        )));
    }
    let mut row = Vec::new();
    let mut value = T::zero();
    for (u, w) in ensemble.members() {
        if w == T::zero() {
            continue;
        }
        let amp = |i| {
            oracle.amplitude(i).ok_or_else(|| {
                Error::UnsupportedObservable(format!(
                    "{} needs wavefunction amplitudes; oracle provides weights only",
                    observable.kind()
                ))
            })
        };
        let psi = amp(u)?;
        if psi == T::zero() {
            return Err(Error::InternalConsistency(format!(
                "member {u} has positive renormalized weight but zero amplitude"
            )));
        }
        row.clear();
        observable.row_into(u, &mut row);
        let mut local = T::zero();
        for &(v, a) in &row {
            local = local + a * amp(v)? / psi;
        }
        value = value + w * local;
    }
    Ok(CmcsEstimate {
        value,
        outside_region: false,
    })
}

/// `⟨S^z_i S^z_j⟩` for all pairs of region sites (Pauli σ^z for spin-1/2).
pub fn correlation_matrix<T: Scalar>(ensemble: &ConcentratedEnsemble<T>) -> Vec<Vec<T>> {
    let space = &ensemble.space;
    let d = space.local_dim();
    let sites: Vec<usize> = ensemble.region.sites().collect();
    let n = sites.len();
    let mut m = vec![vec![T::zero(); n]; n];
    for (u, w) in ensemble.members() {
        let z: Vec<i32> = sites.iter().map(|&s| z_value(d, space.digit(u, s))).collect();
        for a in 0..n {
            for b in a..n {
                m[a][b] = m[a][b] + w * T::of((z[a] * z[b]) as f64);
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            m[a][b] = m[b][a];
        }
    }
    m
}

/// `⟨S^z_i S^z_j⟩ - ⟨S^z_i⟩⟨S^z_j⟩`, all three terms from one ensemble.
pub fn connected_correlator<T: Scalar>(ensemble: &ConcentratedEnsemble<T>, i: usize, j: usize) -> Result<T> {
    for s in [i, j] {
        if !ensemble.region.contains(s) {
            return Err(Error::UnsupportedSupport(format!(
                "site {s} outside region [{}, {})",
                ensemble.region.start(),
                ensemble.region.end()
            )));
        }
    }
    let space = &ensemble.space;
    let d = space.local_dim();
    let (mut zi, mut zj, mut zz) = (T::zero(), T::zero(), T::zero());
    for (u, w) in ensemble.members() {
        let a = T::of(z_value(d, space.digit(u, i)) as f64);
        let b = T::of(z_value(d, space.digit(u, j)) as f64);
        zi = zi + w * a;
        zj = zj + w * b;
        zz = zz + w * a * b;
    }
    Ok(zz - zi * zj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_expectation, TableOracle};
    use crate::lattice::{partition, Configuration};
    use crate::observable::{observable_factory, ObservableKind};

    fn sample_set(space: &ChainSpace, configs: &[&[u8]]) -> SampleSet {
        let idx = configs
            .iter()
            .map(|c| space.encode(&Configuration::new(c.to_vec())).unwrap())
            .collect();
        SampleSet::from_indices(space.clone(), idx).unwrap()
    }

    #[test]
    fn single_environment() {
        let space = ChainSpace::spin_half(6).unwrap();
        let region = LocalRegion::new(&space, 2, 2).unwrap();
        let s = sample_set(&space, &[&[1, 0, 0, 0, 1, 1], &[1, 0, 1, 1, 1, 1], &[1, 0, 1, 0, 1, 1]]);
        assert_eq!(unique_environments(&s, &region).unwrap(), vec![vec![1, 0, 1, 1]]);
    }

    #[test]
    fn three_of_four_environments_distinct() {
        // four samples over six sites, two central local sites
        let space = ChainSpace::spin_half(6).unwrap();
        let region = LocalRegion::new(&space, 2, 2).unwrap();
        let s = sample_set(
            &space,
            &[
                &[1, 0, 1, 0, 1, 0],
                &[0, 1, 0, 1, 0, 1],
                &[1, 0, 0, 1, 1, 0],
                &[1, 1, 1, 0, 0, 0],
            ],
        );
        let envs = unique_environments(&s, &region).unwrap();
        assert_eq!(envs, vec![vec![1, 0, 1, 0], vec![0, 1, 0, 1], vec![1, 1, 0, 0]]);
    }

    #[test]
    fn full_region_single_empty_environment() {
        let space = ChainSpace::spin_one(3).unwrap();
        let region = LocalRegion::full(&space);
        let s = SampleSet::from_indices(space.clone(), vec![0, 5, 26]).unwrap();
        assert_eq!(unique_environments(&s, &region).unwrap(), vec![Vec::<u8>::new()]);
        let e = build_ensemble(&s, &region, &TableOracle::<f64>::uniform(space)).unwrap();
        assert_eq!(e.unique_count(), 27);
    }

    #[test]
    fn uniform_weights() {
        let space = ChainSpace::spin_half(6).unwrap();
        let region = LocalRegion::new(&space, 1, 3).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![0, 1, 63, 32, 17]).unwrap();
        let e = build_ensemble(&s, &region, &TableOracle::<f64>::uniform(space)).unwrap();
        assert_eq!(e.unique_count(), 8 * e.environment_count());
        let expected = 1.0 / e.unique_count() as f64;
        assert!(e.weights().iter().all(|&w| (w - expected).abs() < 1e-15));
        let total: f64 = e.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_support() {
        let space = ChainSpace::spin_half(4).unwrap();
        let mut w = vec![0.0; 16];
        w[15] = 1.0;
        let oracle = TableOracle::from_weights(space.clone(), w).unwrap();
        let region = LocalRegion::new(&space, 0, 2).unwrap();
        let s = SampleSet::from_indices(space, vec![0]).unwrap();
        assert!(matches!(build_ensemble(&s, &region, &oracle), Err(Error::EmptySupport)));
    }

    #[test]
    fn zero_weights_retained() {
        let space = ChainSpace::spin_half(4).unwrap();
        let mut w = vec![0.0; 16];
        w[0] = 2.0;
        w[1] = 2.0;
        let oracle = TableOracle::from_weights(space.clone(), w).unwrap();
        let region = LocalRegion::new(&space, 0, 2).unwrap();
        let s = SampleSet::from_indices(space, vec![0]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        assert_eq!(e.unique_count(), 4);
        assert_eq!(e.weights(), &[0.5, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn identity_is_one() {
        let space = ChainSpace::spin_half(5).unwrap();
        let w: Vec<f64> = (0..32).map(|i| (i % 5) as f64 + 0.5).collect();
        let oracle = TableOracle::from_weights(space.clone(), w).unwrap();
        let region = LocalRegion::new(&space, 1, 2).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![3, 9, 30]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        let id = observable_factory(ObservableKind::Identity, &space).unwrap();
        let est = cmcs_estimate(&id, &e, &oracle).unwrap();
        assert!((est.value - 1.0).abs() < 1e-15);
        assert!(!est.outside_region);
    }

    #[test]
    fn full_region_matches_exact_on_table() {
        let space = ChainSpace::spin_half(4).unwrap();
        let amps: Vec<f64> = (0..16).map(|i| 0.2 + ((i * 5) % 7) as f64 / 7.0).collect();
        let oracle = TableOracle::from_amplitudes(space.clone(), amps).unwrap();
        let region = LocalRegion::full(&space);
        let s = SampleSet::from_indices(space.clone(), vec![4]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        for kind in [ObservableKind::SigmaZ(1), ObservableKind::SigmaZZ(0, 3), ObservableKind::SigmaX(2)] {
            let o = observable_factory(kind, &space).unwrap();
            let a = cmcs_estimate(&o, &e, &oracle).unwrap().value;
            let b = exact_expectation(&o, &oracle).unwrap();
            assert!((a - b).abs() < 1e-12, "{kind:?}");
        }
    }

    #[test]
    fn off_diagonal_support_checks() {
        let space = ChainSpace::spin_half(5).unwrap();
        let amps: Vec<f64> = (0..32).map(|i| 1.0 + (i % 3) as f64).collect();
        let oracle = TableOracle::from_amplitudes(space.clone(), amps).unwrap();
        let region = LocalRegion::new(&space, 1, 2).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![0, 31]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        let sx = observable_factory(ObservableKind::SigmaX(4), &space).unwrap();
        assert!(matches!(cmcs_estimate(&sx, &e, &oracle), Err(Error::UnsupportedSupport(_))));
        let sz = observable_factory(ObservableKind::SigmaZ(4), &space).unwrap();
        assert!(cmcs_estimate(&sz, &e, &oracle).unwrap().outside_region);

        let weights_only = TableOracle::from_weights(space.clone(), vec![1.0; 32]).unwrap();
        let e2 = build_ensemble(&s, &region, &weights_only).unwrap();
        let sx_in = observable_factory(ObservableKind::SigmaX(1), &space).unwrap();
        assert!(matches!(
            cmcs_estimate(&sx_in, &e2, &weights_only),
            Err(Error::UnsupportedObservable(_))
        ));
    }

    #[test]
    fn scale_invariance() {
        let space = ChainSpace::spin_half(6).unwrap();
        let amps: Vec<f64> = (0..64).map(|i| 0.1 + ((i * 13) % 11) as f64 / 5.0).collect();
        let a = TableOracle::from_amplitudes(space.clone(), amps.clone()).unwrap();
        let b = TableOracle::from_amplitudes(space.clone(), amps.iter().map(|x| x * 12.5).collect()).unwrap();
        let region = LocalRegion::new(&space, 2, 3).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![1, 7, 40, 63, 22]).unwrap();
        let ea = build_ensemble(&s, &region, &a).unwrap();
        let eb = build_ensemble(&s, &region, &b).unwrap();
        for (x, y) in ea.weights().iter().zip(eb.weights()) {
            assert!((x - y).abs() < 1e-12);
        }
        for kind in [ObservableKind::SigmaZZ(2, 3), ObservableKind::SigmaX(3)] {
            let o = observable_factory(kind, &space).unwrap();
            let va = cmcs_estimate(&o, &ea, &a).unwrap().value;
            let vb = cmcs_estimate(&o, &eb, &b).unwrap().value;
            assert!((va - vb).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_matrix_shape() {
        let space = ChainSpace::spin_half(6).unwrap();
        let w: Vec<f64> = (0..64).map(|i| 1.0 + (i % 9) as f64).collect();
        let oracle = TableOracle::from_weights(space.clone(), w).unwrap();
        let region = LocalRegion::new(&space, 1, 4).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![0, 12, 50]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        let m = correlation_matrix(&e);
        assert_eq!(m.len(), 4);
        for a in 0..4 {
            assert!((m[a][a] - 1.0).abs() < 1e-14);
            for b in 0..4 {
                assert_eq!(m[a][b], m[b][a]);
            }
        }
        let zz = observable_factory(ObservableKind::SigmaZZ(2, 4), &space).unwrap();
        assert!((m[1][3] - cmcs_estimate(&zz, &e, &oracle).unwrap().value).abs() < 1e-14);
    }

    #[test]
    fn connected_variance_nonnegative() {
        let space = ChainSpace::spin_one(4).unwrap();
        let w: Vec<f64> = (0..81).map(|i| 1.0 + (i % 4) as f64).collect();
        let oracle = TableOracle::from_weights(space.clone(), w).unwrap();
        let region = LocalRegion::new(&space, 1, 2).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![0, 40, 80]).unwrap();
        let e = build_ensemble(&s, &region, &oracle).unwrap();
        assert!(connected_correlator(&e, 1, 1).unwrap() >= 0.0);
        assert!(connected_correlator(&e, 0, 1).is_err());
    }

    #[test]
    fn members_recombine_partition() {
        let space = ChainSpace::spin_one(5).unwrap();
        let region = LocalRegion::new(&space, 1, 2).unwrap();
        let s = SampleSet::from_indices(space.clone(), vec![7, 100, 200, 7]).unwrap();
        let e = build_ensemble(&s, &region, &TableOracle::<f64>::uniform(space.clone())).unwrap();
        let envs = e.environments();
        assert_eq!(envs.len(), 3);
        for (i, local) in e.local_basis().iter().enumerate() {
            for (j, env) in envs.iter().enumerate() {
                let x = space.decode(e.member(i, j)).unwrap();
                let p = partition(&x, &region).unwrap();
                assert_eq!(&p.local, local);
                assert_eq!(&p.environment, env);
            }
        }
    }
}
