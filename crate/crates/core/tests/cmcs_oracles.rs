#![allow(clippy::needless_range_loop)]

use std::collections::HashSet;
use std::sync::Arc;

use cmcs::cmcs::{build_ensemble, cmcs_estimate, connected_correlator, correlation_matrix, unique_environments};
use cmcs::exact::{
    dense_spectrum, exact_expectation, lanczos_ground, GroundOracle, LanczosSettings, TableOracle, ThermalOracle,
    WeightOracle,
};
use cmcs::hamiltonian::{BlbqParams, TimParams};
use cmcs::lattice::{ChainSpace, LocalRegion};
use cmcs::mcmc::{metropolis_run, ChainSettings, SampleSet};
use cmcs::observable::{observable_factory, ObservableKind};
use cmcs::operator::Operator;
use proptest::prelude::*;

/// Plain nalgebra eigensolve: ascending eigenvalues, column-major eigenvectors.
fn dense_eigen(n: usize, m: Vec<f64>) -> (Vec<f64>, Vec<f64>) {
    let eig = nalgebra::SymmetricEigen::new(nalgebra::DMatrix::from_column_slice(n, n, &m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = order.iter().flat_map(|&k| eig.eigenvectors.column(k).iter().copied().collect::<Vec<_>>()).collect();
    (values, vecs)
}

fn dense_ground(p: &TimParams<f64>) -> Vec<f64> {
    let n = p.space().dim();
    let (_, vecs) = dense_eigen(n, p.to_dense().unwrap());
    vecs[..n].to_vec()
}

fn afm_ground(len: usize) -> GroundOracle<f64> {
    let p = TimParams::new(len, 1.0, 0.5, 0.5).unwrap();
    GroundOracle::new(Arc::new(lanczos_ground(&p, &LanczosSettings::default()).unwrap()))
}

#[test]
fn renormalized_weights_match_brute_force() {
    let len = 6;
    let p = TimParams::new(len, 1.0, 0.5, 0.5).unwrap();
    let psi = dense_ground(&p);
    let space = p.space().clone();
    let oracle = TableOracle::from_amplitudes(space.clone(), psi.clone()).unwrap();
    let samples = metropolis_run(&oracle, &ChainSettings::new(50, len, 11)).unwrap();
    let region = LocalRegion::new(&space, 2, 2).unwrap();
    let ens = build_ensemble(&samples, &region, &oracle).unwrap();

    // independent reconstruction: every configuration whose sites outside
    // [2, 4) agree with some sample
    let env_mask = |x: usize| x & !0b001100;
    let envs: HashSet<usize> = samples.indices().iter().map(|&x| env_mask(x)).collect();
    let members: Vec<usize> = (0..64).filter(|&x| envs.contains(&env_mask(x))).collect();
    assert_eq!(members.len(), ens.unique_count());
    let total: f64 = members.iter().map(|&x| psi[x] * psi[x]).sum();
    let mut got: Vec<(usize, f64)> = ens.members().collect();
    got.sort_by_key(|&(x, _)| x);
    for (&x, &(y, w)) in members.iter().zip(&got) {
        assert_eq!(x, y);
        assert!((w - psi[x] * psi[x] / total).abs() < 1e-14);
    }
    let sum: f64 = ens.weights().iter().sum();
    assert!((sum - 1.0).abs() < 1e-12);
}

#[test]
fn all_environments_give_exact_values() {
    let len = 10;
    let oracle = afm_ground(len);
    let space = oracle.space().clone();
    let region = LocalRegion::new(&space, 3, 4).unwrap();
    // one sample per environment, local sites all zero
    let mut indices = Vec::new();
    for env in 0..64usize {
        let left = env & 0b111;
        let right = env >> 3;
        indices.push(left | (right << 7));
    }
    let samples = SampleSet::from_indices(space.clone(), indices).unwrap();
    let ens = build_ensemble(&samples, &region, &oracle).unwrap();
    assert_eq!(ens.environment_count(), 64);
    assert_eq!(ens.unique_count(), 1024);
    for kind in [
        ObservableKind::SigmaZZ(3, 4),
        ObservableKind::SigmaZ(5),
        ObservableKind::SigmaX(4),
        ObservableKind::SigmaZ(0),
    ] {
        let obs = observable_factory(kind, &space).unwrap();
        let got = cmcs_estimate(&obs, &ens, &oracle).unwrap().value;
        let want = exact_expectation(&obs, &oracle).unwrap();
        assert!((got - want).abs() < 1e-12, "{kind}: {got} vs {want}");
    }
}

#[test]
fn off_diagonal_closure_at_length_eight() {
    let space = ChainSpace::spin_half(8).unwrap();
    let oracle = TableOracle::<f64>::uniform(space.clone());
    for start in 0..=5 {
        let region = LocalRegion::new(&space, start, 3).unwrap();
        let samples = SampleSet::from_indices(space.clone(), (0..256).step_by(7).collect()).unwrap();
        let ens = build_ensemble(&samples, &region, &oracle).unwrap();
        let members: HashSet<usize> = ens.members().map(|(u, _)| u).collect();
        for site in region.sites() {
            let obs = observable_factory::<f64>(ObservableKind::SigmaX(site), &space).unwrap();
            for &u in &members {
                let mut row = Vec::new();
                obs.row_into(u, &mut row);
                assert!(row.iter().all(|(v, _)| members.contains(v)));
            }
        }
    }
}

#[test]
fn environments_never_shrink() {
    let oracle = afm_ground(8);
    let space = oracle.space().clone();
    let region = LocalRegion::new(&space, 2, 4).unwrap();
    let chain = metropolis_run(&oracle, &ChainSettings::new(400, 8, 3)).unwrap();
    let mut previous: Vec<Vec<u8>> = Vec::new();
    for n in [1, 10, 50, 100, 400] {
        let prefix = SampleSet::from_indices(space.clone(), chain.indices()[..n].to_vec()).unwrap();
        let envs = unique_environments(&prefix, &region).unwrap();
        assert!(envs.len() >= previous.len());
        assert_eq!(&envs[..previous.len()], &previous[..]);
        assert!(envs.len() <= n.min(16));
        previous = envs;
    }
}

#[test]
fn aklt_correlations_over_full_region() {
    let len = 6;
    let theta = (1.0f64 / 3.0).atan();
    let beta = 0.7;
    let p = BlbqParams::new(len, 1.0, theta).unwrap();
    let space = p.space().clone();
    let n = space.dim();

    // reference: one full dense eigensolve and explicit Boltzmann diagonal
    let (values, vecs) = dense_eigen(n, p.to_dense().unwrap());
    let e0 = values[0];
    let diag: Vec<f64> = (0..n)
        .map(|m| (0..n).map(|k| (-beta * (values[k] - e0)).exp() * vecs[k * n + m].powi(2)).sum())
        .collect();
    let z: f64 = diag.iter().sum();
    let sz = |x: usize, s: usize| space.digit(x, s) as f64 - 1.0;
    let mean = |f: &dyn Fn(usize) -> f64| (0..n).map(|x| diag[x] * f(x)).sum::<f64>() / z;

    let spectrum = Arc::new(dense_spectrum(&p, 20_000).unwrap());
    let oracle = ThermalOracle::new(spectrum, beta).unwrap();
    let region = LocalRegion::full(&space);
    let samples = SampleSet::from_indices(space.clone(), vec![0]).unwrap();
    let ens = build_ensemble(&samples, &region, &oracle).unwrap();

    let m = correlation_matrix(&ens);
    for i in 0..len {
        for j in 0..len {
            let want = mean(&|x| sz(x, i) * sz(x, j));
            assert!((m[i][j] - want).abs() < 1e-12);
            assert_eq!(m[i][j], m[j][i]);
        }
    }
    let (i, j) = (2, 3);
    let want = mean(&|x| sz(x, i) * sz(x, j)) - mean(&|x| sz(x, i)) * mean(&|x| sz(x, j));
    let got = connected_correlator(&ens, i, j).unwrap();
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!(connected_correlator(&ens, 1, 1).unwrap() >= 0.0);
}

fn positive_weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..10.0, 1usize << len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_weights_is_invisible(
        w in positive_weights(5),
        c in 1e-3f64..1e3,
        start in 0usize..4,
        picks in prop::collection::vec(0usize..32, 1..20),
    ) {
        let space = ChainSpace::spin_half(5).unwrap();
        let a = TableOracle::from_weights(space.clone(), w.clone()).unwrap();
        let b = TableOracle::from_weights(space.clone(), w.iter().map(|x| x * c).collect()).unwrap();
        let region = LocalRegion::new(&space, start, 2).unwrap();
        let samples = SampleSet::from_indices(space.clone(), picks).unwrap();
        let ea = build_ensemble(&samples, &region, &a).unwrap();
        let eb = build_ensemble(&samples, &region, &b).unwrap();
        let total: f64 = ea.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for (x, y) in ea.weights().iter().zip(eb.weights()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        let obs = observable_factory::<f64>(ObservableKind::SigmaZZ(start, start + 1), &space).unwrap();
        let va = cmcs_estimate(&obs, &ea, &a).unwrap().value;
        let vb = cmcs_estimate(&obs, &eb, &b).unwrap().value;
        prop_assert!((va - vb).abs() < 1e-12);
    }

    #[test]
    fn full_region_equals_exact(
        amps in prop::collection::vec(-1.0f64..1.0, 16),
        site in 0usize..4,
        other in 0usize..4,
    ) {
        prop_assume!(amps.iter().any(|a| a.abs() > 1e-3));
        let space = ChainSpace::spin_half(4).unwrap();
        let oracle = TableOracle::from_amplitudes(space.clone(), amps).unwrap();
        let samples = SampleSet::from_indices(space.clone(), vec![5]).unwrap();
        let ens = build_ensemble(&samples, &LocalRegion::full(&space), &oracle).unwrap();
        for kind in [
            ObservableKind::Identity,
            ObservableKind::SigmaZ(site),
            ObservableKind::SigmaZZ(site, other),
            ObservableKind::SigmaX(site),
        ] {
            let obs = observable_factory(kind, &space).unwrap();
            let got = match cmcs_estimate(&obs, &ens, &oracle) {
                Ok(e) => e.value,
                // a zero amplitude cannot carry positive weight
                Err(e) => return Err(TestCaseError::fail(format!("{kind}: {e}"))),
            };
            let want = exact_expectation(&obs, &oracle).unwrap();
            prop_assert!((got - want).abs() < 1e-12, "{}: {} vs {}", kind, got, want);
        }
    }
}
