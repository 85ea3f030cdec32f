//! Restarted Lanczos for the lowest eigenpair of a real symmetric operator.
//!
//! Each cycle builds a Krylov basis of at most `krylov_dim` vectors with full
//! (two-pass Gram-Schmidt) reorthogonalization, extracts the lowest Ritz pair
//! and restarts from the Ritz vector. Memory is bounded by `krylov_dim`
//! vectors of length `dim`, so `2^20`-dimensional chains stay tractable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::ChainSpace;
use crate::operator::Operator;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LanczosSettings<T> {
    /// Convergence threshold on `‖Hψ - E ψ‖₂`.
    pub tol: T,
    /// Budget of operator applications.
    pub max_iter: usize,
    pub seed: u64,
    pub krylov_dim: usize,
}

impl<T: Scalar> Default for LanczosSettings<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-10),
            max_iter: 5000,
            seed: 0x5eed_1a9c,
            krylov_dim: 64,
        }
    }
}

/// Normalized lowest eigenvector and its energy.
#[derive(Clone, Debug)]
pub struct GroundState<T> {
    pub space: ChainSpace,
    pub energy: T,
    pub amplitudes: Vec<T>,
    pub residual: T,
    pub matvecs: usize,
}

impl<T: Scalar> GroundState<T> {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

pub fn lanczos_ground<T: Scalar, O: Operator<T> + ?Sized>(
    op: &O,
    settings: &LanczosSettings<T>,
) -> Result<GroundState<T>> {
    let space = op.space().clone();
    let dim = space.dim();
    if dim < 2 {
        return Err(Error::OutOfRange(format!("lanczos needs dimension >= 2, got {dim}")));
    }
    let krylov_dim = settings.krylov_dim.clamp(2, dim);

    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let mut start: Vec<T> = (0..dim).map(|_| T::of(rng.random::<f64>() - 0.5)).collect();
    let n0 = norm(&start);
    start.iter_mut().for_each(|x| *x = *x / n0);

    let mut matvecs = 0usize;
    let mut best_residual = T::infinity();
    let mut w = vec![T::zero(); dim];

    loop {
        let mut basis: Vec<Vec<T>> = vec![start];
        let mut alphas: Vec<T> = Vec::with_capacity(krylov_dim);
        let mut betas: Vec<T> = Vec::with_capacity(krylov_dim);
        let mut scale = T::zero();

        for j in 0..krylov_dim {
            op.apply(&basis[j], &mut w);
            matvecs += 1;
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            scale = scale.max(alpha.abs());
            // classical Gram-Schmidt; repeat once if the pass cancelled most of w
            let mut before = norm(&w);
            let mut beta;
            let mut passes = 0;
            loop {
                let projections: Vec<T> = basis.iter().map(|b| dot(&w, b)).collect();
                for (b, &proj) in basis.iter().zip(&projections) {
                    axpy(-proj, b, &mut w);
                }
                beta = norm(&w);
                passes += 1;
                if passes == 2 || beta > T::of(0.7) * before {
                    break;
                }
                before = beta;
            }
            scale = scale.max(beta);
            let breakdown = beta <= T::epsilon() * T::of(64.0) * scale.max(T::one());
            if breakdown || j + 1 == krylov_dim || matvecs >= settings.max_iter {
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|&x| x / beta).collect());
        }

        let k = alphas.len();
        let mut tri = vec![T::zero(); k * k];
        for i in 0..k {
            tri[i * k + i] = alphas[i];
            if i + 1 < k {
                tri[i * k + i + 1] = betas[i];
                tri[(i + 1) * k + i] = betas[i];
            }
        }
        let (_, vectors) = T::symmetric_eigen(k, tri);

        let mut ritz = vec![T::zero(); dim];
        for (i, b) in basis.iter().enumerate().take(k) {
            axpy(vectors[i], b, &mut ritz);
        }
        drop(basis);
        let rn = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x = *x / rn);

        op.apply(&ritz, &mut w);
        matvecs += 1;
        let energy = dot(&ritz, &w);
        axpy(-energy, &ritz, &mut w);
        let residual = norm(&w);
        best_residual = best_residual.min(residual);
        log::debug!("lanczos cycle: k={k} energy={energy:e} residual={residual:e} matvecs={matvecs}");

        if residual <= settings.tol {
            return Ok(GroundState {
                space,
                energy,
                amplitudes: ritz,
                residual,
                matvecs,
            });
        }
        if matvecs >= settings.max_iter {
            return Err(Error::Convergence {
                iterations: matvecs,
                best_residual: best_residual.to_f64_lossless(),
            });
        }
        start = ritz;
    }
}
