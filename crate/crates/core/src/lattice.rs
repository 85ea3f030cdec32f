//! Configurations of open d-ary chains and their mixed-radix encoding.
//!
//! Site 0 is the leftmost site and the least-significant digit of the index:
//! `index = Σ_i values[i] · d^i`. For spin-1/2 chains value 1 is spin up
//! (σ^z = +1) and value 0 is spin down; for spin-1 chains value `v` is the
//! magnetic quantum number `m = v - 1`.

use std::fmt;

use crate::error::{Error, Result};

/// Largest local subspace `d^ℓ` that [`enumerate_local`] produces by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1 << 20;

/// A product-basis configuration: one local state per site.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    values: Vec<u8>,
}

impl Configuration {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<u8>> for Configuration {
    fn from(values: Vec<u8>) -> Self {
        Self::new(values)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("]")
    }
}

/// The product Hilbert-space basis of a chain: `len` sites with `d` states each.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSpace {
    len: usize,
    d: usize,
    powers: Vec<usize>,
    dim: usize,
}

impl ChainSpace {
    pub fn new(len: usize, d: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::OutOfRange("chain length must be at least 1".into()));
        }
        if !(2..=u8::MAX as usize).contains(&d) {
            return Err(Error::OutOfRange(format!("local dimension {d} not in [2, 255]")));
        }
        let mut powers = Vec::with_capacity(len + 1);
        let mut p = 1usize;
        powers.push(p);
        for _ in 0..len {
            p = p.checked_mul(d).ok_or_else(|| Error::Capacity {
                what: "hilbert dimension",
                requested: (d as u128).saturating_pow(len as u32),
                cap: usize::MAX as u128,
                hint: None,
            })?;
            powers.push(p);
        }
        let dim = powers.pop().unwrap_or(1);
        Ok(Self {
            len,
            d,
            powers,
            dim,
        })
    }

    pub fn spin_half(len: usize) -> Result<Self> {
        Self::new(len, 2)
    }

    pub fn spin_one(len: usize) -> Result<Self> {
        Self::new(len, 3)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    /// Number of basis states, `d^L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Place value `d^site`.
    #[inline]
    pub fn power(&self, site: usize) -> usize {
        self.powers[site]
    }

    pub fn check(&self, x: &Configuration) -> Result<()> {
        if x.len() != self.len {
            return Err(Error::InvalidConfiguration(format!(
                "length {} does not match chain length {}",
                x.len(),
                self.len
            )));
        }
        if let Some((site, v)) = x.values().iter().enumerate().find(|(_, &v)| v as usize >= self.d) {
            return Err(Error::InvalidConfiguration(format!(
                "site {site} has value {v} >= d = {}",
                self.d
            )));
        }
        Ok(())
    }

    pub fn encode(&self, x: &Configuration) -> Result<usize> {
        self.check(x)?;
        Ok(x
            .values()
            .iter()
            .zip(&self.powers)
            .map(|(&v, &p)| v as usize * p)
            .sum())
    }

    pub fn decode(&self, index: usize) -> Result<Configuration> {
        if index >= self.dim {
            return Err(Error::OutOfRange(format!("index {index} >= dimension {}", self.dim)));
        }
        let mut values = vec![0u8; self.len];
        self.decode_into(index, &mut values);
        Ok(Configuration::new(values))
    }

    /// Writes the digits of `index` into `out` (length `len`) without checks.
    #[inline]
    pub fn decode_into(&self, mut index: usize, out: &mut [u8]) {
        for v in out.iter_mut() {
            *v = (index % self.d) as u8;
            index /= self.d;
        }
    }

    #[inline]
    pub fn digit(&self, index: usize, site: usize) -> u8 {
        ((index / self.powers[site]) % self.d) as u8
    }

    /// Index of the configuration obtained by setting `site` to `value`.
    #[inline]
    pub fn with_digit(&self, index: usize, site: usize, value: u8) -> usize {
        let p = self.powers[site];
        let old = (index / p) % self.d;
        index - old * p + value as usize * p
    }
}

/// A contiguous window `[start, start + len)` of a chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LocalRegion {
    start: usize,
    len: usize,
    d: usize,
    chain_len: usize,
}

impl LocalRegion {
    pub fn new(space: &ChainSpace, start: usize, len: usize) -> Result<Self> {
        if len == 0 || len > space.len() || start > space.len() - len {
            return Err(Error::OutOfRange(format!(
                "region [{start}, {}) does not fit a chain of {} sites",
                start + len,
                space.len()
            )));
        }
        Ok(Self {
            start,
            len,
            d: space.local_dim(),
            chain_len: space.len(),
        })
    }

    /// The region covering the whole chain.
    pub fn full(space: &ChainSpace) -> Self {
        Self {
            start: 0,
            len: space.len(),
            d: space.local_dim(),
            chain_len: space.len(),
        }
    }

    pub fn start(&self) -> usize {
        self.start
    }

    /// One past the last site.
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn local_dim(&self) -> usize {
        self.d
    }

    pub fn chain_len(&self) -> usize {
        self.chain_len
    }

    pub fn contains(&self, site: usize) -> bool {
        (self.start..self.end()).contains(&site)
    }

    pub fn sites(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    /// Environment sites in ascending order.
    pub fn environment_sites(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.start).chain(self.end()..self.chain_len)
    }

    pub fn environment_len(&self) -> usize {
        self.chain_len - self.len
    }

    /// `N_ℓ = d^ℓ`, or `None` on overflow.
    pub fn subspace_size(&self) -> Option<usize> {
        self.d.checked_pow(self.len as u32)
    }
}

/// A configuration split into its local and environment parts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    pub local: Vec<u8>,
    pub environment: Vec<u8>,
}

pub fn partition(x: &Configuration, region: &LocalRegion) -> Result<Partition> {
    if x.len() != region.chain_len() {
        return Err(Error::OutOfRange(format!(
            "region built for {} sites applied to a configuration of {}",
            region.chain_len(),
            x.len()
        )));
    }
    let v = x.values();
    Ok(Partition {
        local: v[region.sites()].to_vec(),
        environment: region.environment_sites().map(|s| v[s]).collect(),
    })
}

pub fn recombine(parts: &Partition, region: &LocalRegion) -> Result<Configuration> {
    if parts.local.len() != region.len() || parts.environment.len() != region.environment_len() {
        return Err(Error::OutOfRange(format!(
            "partition sizes ({}, {}) do not match region ({}, {})",
            parts.local.len(),
            parts.environment.len(),
            region.len(),
            region.environment_len()
        )));
    }
    let mut values = Vec::with_capacity(region.chain_len());
    values.extend_from_slice(&parts.environment[..region.start()]);
    values.extend_from_slice(&parts.local);
    values.extend_from_slice(&parts.environment[region.start()..]);
    Ok(Configuration::new(values))
}

/// All `d^ℓ` local configurations of the region in ascending mixed-radix order
/// (first region site least significant).
pub fn enumerate_local(region: &LocalRegion, cap: usize) -> Result<Vec<Vec<u8>>> {
    let size = region
        .subspace_size()
        .filter(|&n| n <= cap)
        .ok_or_else(|| Error::Capacity {
            what: "local subspace",
            requested: (region.local_dim() as u128).saturating_pow(region.len() as u32),
            cap: cap as u128,
            hint: None,
        })?;
    let d = region.local_dim();
    Ok((0..size)
        .map(|mut i| {
            (0..region.len())
                .map(|_| {
                    let v = (i % d) as u8;
                    i /= d;
                    v
                })
                .collect()
        })
        .collect())
}
