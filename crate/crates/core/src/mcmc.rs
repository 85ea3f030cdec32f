//! Single-site Metropolis sampling of configurations and the plain MCMC estimator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exact::WeightOracle;
use crate::lattice::{ChainSpace, Configuration};
use crate::observable::ObservableSpec;
use crate::operator::Operator;
use crate::scalar::Scalar;

pub const DEFAULT_BURN_IN: usize = 1000;

/// Rejected proposals tolerated while the chain sits on a zero-weight state.
pub const STUCK_BUDGET_PER_SITE: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InitPolicy {
    Random,
    Given(Configuration),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSettings {
    pub samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub init: InitPolicy,
}

impl ChainSettings {
    /// Defaults: 1000 burn-in steps, one sweep (`chain_len` steps) between
    /// retained samples, random initial configuration.
    pub fn new(samples: usize, chain_len: usize, seed: u64) -> Self {
        Self {
            samples,
            burn_in: DEFAULT_BURN_IN,
            thin: chain_len.max(1),
            seed,
            init: InitPolicy::Random,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::OutOfRange("sample count must be at least 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::OutOfRange("thinning interval must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SampleSet {
    space: ChainSpace,
    indices: Vec<usize>,
    acceptance_rate: f64,
    settings: Option<ChainSettings>,
}

impl SampleSet {
    /// A sample set assembled by hand, e.g. to inject chosen environments.
    pub fn from_indices(space: ChainSpace, indices: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= space.dim()) {
            return Err(Error::OutOfRange(format!("sample index {bad} >= dimension {}", space.dim())));
        }
        Ok(Self {
            space,
            indices,
            acceptance_rate: f64::NAN,
            settings: None,
        })
    }

    pub fn space(&self) -> &ChainSpace {
        &self.space
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn configuration(&self, k: usize) -> Configuration {
        self.space.decode(self.indices[k]).expect("sample indices are in range")
    }

    /// Fraction of accepted proposals over all steps, NaN for hand-built sets.
    pub fn acceptance_rate(&self) -> f64 {
        self.acceptance_rate
    }

    pub fn settings(&self) -> Option<&ChainSettings> {
        self.settings.as_ref()
    }
}

/// Metropolis acceptance probability for a move from weight `from` to `to`.
/// A zero-weight state accepts any move to a positive weight.
#[inline]
pub fn acceptance_probability<T: Scalar>(from: T, to: T) -> T {
    if from <= T::zero() {
        if to > T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        (to / from).min(T::one())
    }
}

/// Transition probability `T(x → x')` of the single-site kernel for `x ≠ x'`.
pub fn transition_probability<T: Scalar, W: WeightOracle<T> + ?Sized>(oracle: &W, from: usize, to: usize) -> T {
    let space = oracle.space();
    let differing: Vec<usize> = (0..space.len())
        .filter(|&s| space.digit(from, s) != space.digit(to, s))
        .collect();
    if differing.len() != 1 {
        return T::zero();
    }
    let proposal = T::one() / T::of((space.len() * (space.local_dim() - 1)) as f64);
    proposal * acceptance_probability(oracle.weight(from), oracle.weight(to))
}

pub fn metropolis_run<T: Scalar, W: WeightOracle<T> + ?Sized>(oracle: &W, settings: &ChainSettings) -> Result<SampleSet> {
    settings.validate()?;
    let space = oracle.space().clone();
    let (len, d) = (space.len(), space.local_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);

    let mut current = match &settings.init {
        InitPolicy::Random => rng.random_range(0..space.dim()),
        InitPolicy::Given(x) => space.encode(x)?,
    };
    let mut weight = oracle.weight(current);

    let total_steps = settings.burn_in + settings.samples * settings.thin;
    let mut accepted = 0usize;
    let mut zero_streak = 0usize;
    let mut indices = Vec::with_capacity(settings.samples);

    for step in 1..=total_steps {
        let site = rng.random_range(0..len);
        let old = space.digit(current, site);
        let new = ((old as usize + 1 + rng.random_range(0..d - 1)) % d) as u8;
        let candidate = space.with_digit(current, site, new);
        let candidate_weight = oracle.weight(candidate);
        let p = acceptance_probability(weight, candidate_weight);
        // draw unconditionally so the stream does not depend on the weights
        let u: f64 = rng.random();
        if p >= T::one() || T::of(u) < p {
            current = candidate;
            weight = candidate_weight;
            accepted += 1;
            zero_streak = 0;
        } else if weight <= T::zero() {
            zero_streak += 1;
            if zero_streak >= STUCK_BUDGET_PER_SITE * len {
                return Err(Error::StuckChain {
                    index: current,
                    attempts: zero_streak,
                });
            }
        }
        if step > settings.burn_in && (step - settings.burn_in).is_multiple_of(settings.thin) {
            indices.push(current);
        }
    }

    if weight <= T::zero() {
        return Err(Error::StuckChain {
            index: current,
            attempts: zero_streak,
        });
    }

    Ok(SampleSet {
        space,
        indices,
        acceptance_rate: accepted as f64 / total_steps.max(1) as f64,
        settings: Some(settings.clone()),
    })
}

/// `O_loc(x) = Σ_{x'} O[x, x'] ψ(x') / ψ(x)`, or `O(x)` for diagonal `O`.
pub fn local_estimator<T: Scalar, W: WeightOracle<T> + ?Sized>(
    observable: &ObservableSpec<T>,
    oracle: &W,
    index: usize,
    row: &mut Vec<(usize, T)>,
) -> Result<T> {
    if let Some(v) = observable.diagonal_value(index) {
        return Ok(v);
    }
    let unsupported = || {
        Error::UnsupportedObservable(format!(
            "{} needs wavefunction amplitudes; oracle provides weights only",
            observable.kind()
        ))
    };
    let psi = oracle.amplitude(index).ok_or_else(unsupported)?;
    if psi == T::zero() {
        return Err(Error::DegenerateAmplitude { index });
    }
    row.clear();
    observable.row_into(index, row);
    row.iter()
        .map(|&(j, a)| Ok(a * oracle.amplitude(j).ok_or_else(unsupported)? / psi))
        .sum()
}

/// Sample mean of the local estimator.
pub fn plain_estimate<T: Scalar, W: WeightOracle<T> + ?Sized>(
    observable: &ObservableSpec<T>,
    samples: &SampleSet,
    oracle: &W,
) -> Result<T> {
    if samples.is_empty() {
        return Err(Error::OutOfRange("empty sample set".into()));
    }
    let mut row = Vec::new();
    let mut total = T::zero();
    for &i in samples.indices() {
        total = total + local_estimator(observable, oracle, i, &mut row)?;
    }
    Ok(total / T::of(samples.len() as f64))
}
