//! Binary snapshots of ground states and spectra.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "CMCSSNAP"
//! version  u32      1
//! d        u32      local dimension
//! L        u32      chain length
//! mode     u32      0 = ground, 1 = thermal
//! count    u64      number of f64 values in the payload
//! payload  count x f64
//! ```
//!
//! Ground payload: `[E0, residual, ψ_0 .. ψ_{N-1}]`.
//! Thermal payload: `[n_blocks]`, then per block
//! `[n, basis_0 .. basis_{n-1}, E_0 .. E_{n-1}, V (n x n, column-major)]`.
//! Integers in the thermal payload are stored as exactly representable f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::lanczos::GroundState;
use super::spectrum::{SpectralBlock, ThermalSpectrum};
use crate::error::{Error, Result};
use crate::lattice::ChainSpace;
use crate::scalar::Scalar;

pub const MAGIC: &[u8; 8] = b"CMCSSNAP";
pub const VERSION: u32 = 1;

const MODE_GROUND: u32 = 0;
const MODE_THERMAL: u32 = 1;

fn write_snapshot(path: &Path, space: &ChainSpace, mode: u32, payload: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(space.local_dim() as u32).to_le_bytes())?;
    w.write_all(&(space.len() as u32).to_le_bytes())?;
    w.write_all(&mode.to_le_bytes())?;
    w.write_all(&(payload.len() as u64).to_le_bytes())?;
    for v in payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_snapshot(path: &Path, expected_mode: u32) -> Result<(ChainSpace, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot(format!("{} is not a snapshot file", path.display())));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported snapshot version {version}")));
    }
    let d = read_u32(&mut r)? as usize;
    let len = read_u32(&mut r)? as usize;
    let mode = read_u32(&mut r)?;
    if mode != expected_mode {
        return Err(Error::Snapshot(format!("snapshot mode {mode}, expected {expected_mode}")));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let count = u64::from_le_bytes(b8) as usize;
    let space = ChainSpace::new(len, d)?;
    let mut payload = Vec::with_capacity(count.min(1 << 28));
    for _ in 0..count {
        r.read_exact(&mut b8)?;
        payload.push(f64::from_le_bytes(b8));
    }
    Ok((space, payload))
}

pub fn write_ground<T: Scalar>(path: &Path, state: &GroundState<T>) -> Result<()> {
    let mut payload = Vec::with_capacity(state.dim() + 2);
    payload.push(state.energy.to_f64_lossless());
    payload.push(state.residual.to_f64_lossless());
    payload.extend(state.amplitudes.iter().map(|a| a.to_f64_lossless()));
    write_snapshot(path, &state.space, MODE_GROUND, &payload)
}

pub fn read_ground<T: Scalar>(path: &Path) -> Result<GroundState<T>> {
    let (space, payload) = read_snapshot(path, MODE_GROUND)?;
    if payload.len() != space.dim() + 2 {
        return Err(Error::Snapshot(format!(
            "ground payload has {} values, expected {}",
            payload.len(),
            space.dim() + 2
        )));
    }
    Ok(GroundState {
        energy: T::of(payload[0]),
        residual: T::of(payload[1]),
        amplitudes: payload[2..].iter().map(|&a| T::of(a)).collect(),
        matvecs: 0,
        space,
    })
}

pub fn write_spectrum<T: Scalar>(path: &Path, spectrum: &ThermalSpectrum<T>) -> Result<()> {
    let mut payload = vec![spectrum.blocks().len() as f64];
    for blk in spectrum.blocks() {
        payload.push(blk.len() as f64);
        payload.extend(blk.basis.iter().map(|&i| i as f64));
        payload.extend(blk.eigenvalues.iter().map(|e| e.to_f64_lossless()));
        payload.extend(blk.eigenvectors.iter().map(|v| v.to_f64_lossless()));
    }
    write_snapshot(path, spectrum.space(), MODE_THERMAL, &payload)
}

pub fn read_spectrum<T: Scalar>(path: &Path) -> Result<ThermalSpectrum<T>> {
    let (space, payload) = read_snapshot(path, MODE_THERMAL)?;
    let truncated = || Error::Snapshot("thermal payload truncated".into());
    let mut it = payload.into_iter();
    let int = |it: &mut std::vec::IntoIter<f64>| -> Result<usize> {
        let v = it.next().ok_or_else(truncated)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::Snapshot(format!("expected an integer, found {v}")));
        }
        Ok(v as usize)
    };
    let n_blocks = int(&mut it)?;
    let mut blocks = Vec::with_capacity(n_blocks);
    for _ in 0..n_blocks {
        let n = int(&mut it)?;
        let basis = (0..n).map(|_| int(&mut it)).collect::<Result<Vec<_>>>()?;
        let eigenvalues: Vec<T> = it.by_ref().take(n).map(T::of).collect();
        let eigenvectors: Vec<T> = it.by_ref().take(n * n).map(T::of).collect();
        if eigenvalues.len() != n || eigenvectors.len() != n * n {
            return Err(truncated());
        }
        blocks.push(SpectralBlock {
            basis,
            eigenvalues,
            eigenvectors,
        });
    }
    if it.next().is_some() {
        return Err(Error::Snapshot("trailing data in thermal payload".into()));
    }
    ThermalSpectrum::from_blocks(space, blocks)
}
