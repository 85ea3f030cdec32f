//! Full eigendecomposition for thermal states.
//!
//! The basis is split into the connected components of the operator's
//! nonzero pattern; the matrix is block diagonal over them, so each block is
//! diagonalized densely on its own. Eigenvectors are zero outside their block,
//! and the assembled spectrum is the spectrum of the full operator.

use crate::error::{Error, Result};
use crate::lattice::ChainSpace;
use crate::operator::Operator;
use crate::scalar::Scalar;

/// Default bound on the Hilbert dimension accepted by [`dense_spectrum`].
pub const DEFAULT_DENSE_CAP: usize = 20_000;

#[derive(Clone, Debug)]
pub struct SpectralBlock<T> {
    /// Basis indices spanned by the block, ascending.
    pub basis: Vec<usize>,
    /// Ascending eigenvalues of the block.
    pub eigenvalues: Vec<T>,
    /// Column-major `n x n` eigenvectors in the block basis.
    pub eigenvectors: Vec<T>,
}

impl<T: Scalar> SpectralBlock<T> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    #[inline]
    pub fn component(&self, row: usize, col: usize) -> T {
        self.eigenvectors[col * self.basis.len() + row]
    }
}

#[derive(Clone, Debug)]
pub struct ThermalSpectrum<T> {
    space: ChainSpace,
    blocks: Vec<SpectralBlock<T>>,
    /// `(block, column)` of every eigenpair, by ascending energy.
    order: Vec<(u32, u32)>,
    /// `(block, row)` of every basis state.
    location: Vec<(u32, u32)>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

pub fn dense_spectrum<T: Scalar, O: Operator<T> + ?Sized>(op: &O, cap: usize) -> Result<ThermalSpectrum<T>> {
    let space = op.space().clone();
    let dim = space.dim();
    if dim > cap {
        let d = space.local_dim();
        let mut max_len = 0usize;
        while (d as u128).pow(max_len as u32 + 1) <= cap as u128 {
            max_len += 1;
        }
        return Err(Error::Capacity {
            what: "dense diagonalization",
            requested: dim as u128,
            cap: cap as u128,
            hint: Some(format!("largest feasible chain length at d = {d} is L = {max_len}")),
        });
    }

    let mut parent: Vec<usize> = (0..dim).collect();
    let mut row = Vec::new();
    for i in 0..dim {
        row.clear();
        op.row_into(i, &mut row);
        for &(j, a) in &row {
            if a != T::zero() {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut block_of_root = vec![u32::MAX; dim];
    let mut bases: Vec<Vec<usize>> = Vec::new();
    let mut location = vec![(0u32, 0u32); dim];
    for i in 0..dim {
        let r = find(&mut parent, i);
        if block_of_root[r] == u32::MAX {
            block_of_root[r] = bases.len() as u32;
            bases.push(Vec::new());
        }
        let b = block_of_root[r];
        location[i] = (b, bases[b as usize].len() as u32);
        bases[b as usize].push(i);
    }
    log::debug!(
        "dense spectrum: dim={dim} blocks={} largest={}",
        bases.len(),
        bases.iter().map(Vec::len).max().unwrap_or(0)
    );

    let mut blocks = Vec::with_capacity(bases.len());
    for basis in bases {
        let n = basis.len();
        let mut dense = vec![T::zero(); n * n];
        for (r, &i) in basis.iter().enumerate() {
            row.clear();
            op.row_into(i, &mut row);
            for &(j, a) in &row {
                let (bj, c) = location[j];
                debug_assert_eq!(bj, location[i].0);
                let c = c as usize;
                dense[c * n + r] = dense[c * n + r] + a;
            }
        }
        let (eigenvalues, eigenvectors) = T::symmetric_eigen(n, dense);
        blocks.push(SpectralBlock {
            basis,
            eigenvalues,
            eigenvectors,
        });
    }

    ThermalSpectrum::from_blocks(space, blocks)
}

impl<T: Scalar> ThermalSpectrum<T> {
    /// Reassembles a spectrum from its blocks, e.g. after loading a snapshot.
    pub fn from_blocks(space: ChainSpace, blocks: Vec<SpectralBlock<T>>) -> Result<Self> {
        let dim = space.dim();
        let mut location = vec![(u32::MAX, 0u32); dim];
        for (b, blk) in blocks.iter().enumerate() {
            let n = blk.basis.len();
            if blk.eigenvalues.len() != n || blk.eigenvectors.len() != n * n {
                return Err(Error::Snapshot(format!("block {b} has inconsistent sizes")));
            }
            for (r, &i) in blk.basis.iter().enumerate() {
                if i >= dim || location[i].0 != u32::MAX {
                    return Err(Error::Snapshot(format!("basis index {i} repeated or out of range")));
                }
                location[i] = (b as u32, r as u32);
            }
        }
        if location.iter().any(|l| l.0 == u32::MAX) {
            return Err(Error::Snapshot("blocks do not cover the basis".into()));
        }
        let mut order: Vec<(u32, u32)> = blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (0..blk.len()).map(move |c| (b as u32, c as u32)))
            .collect();
        order.sort_by(|&(b1, c1), &(b2, c2)| {
            let e1 = blocks[b1 as usize].eigenvalues[c1 as usize];
            let e2 = blocks[b2 as usize].eigenvalues[c2 as usize];
            e1.partial_cmp(&e2).unwrap_or(std::cmp::Ordering::Equal).then((b1, c1).cmp(&(b2, c2)))
        });
        Ok(Self {
            space,
            blocks,
            order,
            location,
        })
    }

    pub fn space(&self) -> &ChainSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn blocks(&self) -> &[SpectralBlock<T>] {
        &self.blocks
    }

    /// All eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<T> {
        self.order
            .iter()
            .map(|&(b, c)| self.blocks[b as usize].eigenvalues[c as usize])
            .collect()
    }

    pub fn ground_energy(&self) -> T {
        let (b, c) = self.order[0];
        self.blocks[b as usize].eigenvalues[c as usize]
    }

    /// `V[m, k]` with `k` counting eigenpairs by ascending energy.
    pub fn eigenvector_component(&self, m: usize, k: usize) -> T {
        let (b, c) = self.order[k];
        let (bm, r) = self.location[m];
        if b != bm {
            return T::zero();
        }
        self.blocks[b as usize].component(r as usize, c as usize)
    }

    /// Dense column-major eigenvector matrix, columns by ascending energy.
    pub fn dense_eigenvectors(&self) -> Vec<T> {
        let n = self.dim();
        let mut v = vec![T::zero(); n * n];
        for (k, &(b, c)) in self.order.iter().enumerate() {
            let blk = &self.blocks[b as usize];
            for (r, &m) in blk.basis.iter().enumerate() {
                v[k * n + m] = blk.component(r, c as usize);
            }
        }
        v
    }

    /// Boltzmann factors `e^{-β (E_k - E_0)}` laid out per block.
    pub fn boltzmann_factors(&self, beta: T) -> Vec<Vec<T>> {
        let e0 = self.ground_energy();
        self.blocks
            .iter()
            .map(|blk| blk.eigenvalues.iter().map(|&e| (-(beta * (e - e0))).exp()).collect())
            .collect()
    }

    /// Shifted diagonal element `Σ_k factors_k V[m, k]²` for precomputed factors.
    pub fn weight_with(&self, factors: &[Vec<T>], m: usize) -> T {
        let (b, r) = self.location[m];
        let blk = &self.blocks[b as usize];
        let n = blk.len();
        let r = r as usize;
        factors[b as usize]
            .iter()
            .enumerate()
            .map(|(c, &f)| {
                let v = blk.eigenvectors[c * n + r];
                f * v * v
            })
            .sum()
    }
}

/// `⟨m| e^{-β (H - E_0)} |m⟩`, the thermal diagonal shifted by the ground energy.
pub fn thermal_weight<T: Scalar>(spectrum: &ThermalSpectrum<T>, beta: T, m: usize) -> T {
    let e0 = spectrum.ground_energy();
    let (b, r) = spectrum.location[m];
    let blk = &spectrum.blocks[b as usize];
    let n = blk.len();
    let r = r as usize;
    blk.eigenvalues
        .iter()
        .enumerate()
        .map(|(c, &e)| {
            let v = blk.eigenvectors[c * n + r];
            (-(beta * (e - e0))).exp() * v * v
        })
        .sum()
}
