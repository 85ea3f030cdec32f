//! Tilted Ising and bilinear-biquadratic chain Hamiltonians, open boundaries.

use crate::error::{Error, Result};
use crate::lattice::{ChainSpace, Configuration};
use crate::operator::Operator;
use crate::scalar::Scalar;

/// `H = J Σ σ^z_i σ^z_{i+1} - Σ (h_x σ^x_i + h_z σ^z_i)` on a spin-1/2 chain.
#[derive(Clone, Debug)]
pub struct TimParams<T> {
    space: ChainSpace,
    pub j: T,
    pub h_x: T,
    pub h_z: T,
}

impl<T: Scalar> TimParams<T> {
    pub fn new(len: usize, j: T, h_x: T, h_z: T) -> Result<Self> {
        if len < 2 {
            return Err(Error::OutOfRange(format!("tilted Ising chain needs L >= 2, got {len}")));
        }
        if !(j.is_finite() && h_x.is_finite() && h_z.is_finite()) {
            return Err(Error::SingularParameter("tilted Ising parameters must be finite".into()));
        }
        Ok(Self {
            space: ChainSpace::spin_half(len)?,
            j,
            h_x,
            h_z,
        })
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<T: Scalar> Operator<T> for TimParams<T> {
    fn space(&self) -> &ChainSpace {
        &self.space
    }

    fn row_into(&self, index: usize, out: &mut Vec<(usize, T)>) {
        out.push((index, self.diagonal(index)));
        if self.h_x != T::zero() {
            out.extend((0..self.space.len()).map(|site| (index ^ (1 << site), -self.h_x)));
        }
    }

    fn apply(&self, v: &[T], out: &mut [T]) {
        use rayon::prelude::*;
        assert_eq!(v.len(), self.space.dim());
        assert_eq!(out.len(), v.len());
        let len = self.space.len();
        out.par_iter_mut()
            .enumerate()
            .with_min_len(4096)
            .for_each(|(x, y)| {
                let flips: T = (0..len).map(|site| v[x ^ (1 << site)]).sum();
                *y = self.diagonal(x) * v[x] - self.h_x * flips;
            });
    }
}

impl<T: Scalar> TimParams<T> {
    #[inline]
    fn diagonal(&self, index: usize) -> T {
        let len = self.space.len() as i64;
        let bond_mask = (1usize << (len - 1)) - 1;
        // each antiparallel bond contributes -1
        let broken = ((index ^ (index >> 1)) & bond_mask).count_ones() as i64;
        let bonds = (len - 1) - 2 * broken;
        let magnetization = 2 * index.count_ones() as i64 - len;
        self.j * T::of(bonds as f64) - self.h_z * T::of(magnetization as f64)
    }
}

pub fn tim_row<T: Scalar>(p: &TimParams<T>, x: &Configuration) -> Result<Vec<(Configuration, T)>> {
    p.row(x)
}

/// Spin-1 ladder matrices in the S^z basis `v = m + 1 ∈ {0, 1, 2}`.
fn spin_one_matrices() -> ([[f64; 3]; 3], [[f64; 3]; 3], [[f64; 3]; 3]) {
    let r2 = std::f64::consts::SQRT_2;
    let mut sz = [[0.0; 3]; 3];
    let mut sp = [[0.0; 3]; 3];
    let mut sm = [[0.0; 3]; 3];
    for v in 0..3 {
        sz[v][v] = v as f64 - 1.0;
    }
    for v in 0..2 {
        sp[v + 1][v] = r2;
        sm[v][v + 1] = r2;
    }
    (sz, sp, sm)
}

/// Two-site `S_1 · S_2` as a 9x9 matrix indexed by `3 a + b`.
pub fn spin_one_exchange() -> [[f64; 9]; 9] {
    let (sz, sp, sm) = spin_one_matrices();
    let mut ss = [[0.0; 9]; 9];
    for a2 in 0..3 {
        for b2 in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    ss[3 * a2 + b2][3 * a + b] =
                        sz[a2][a] * sz[b2][b] + 0.5 * (sp[a2][a] * sm[b2][b] + sm[a2][a] * sp[b2][b]);
                }
            }
        }
    }
    ss
}

/// `H = J Σ [S_i · S_{i+1} + tan θ (S_i · S_{i+1})²]` on a spin-1 chain.
#[derive(Clone, Debug)]
pub struct BlbqParams<T> {
    space: ChainSpace,
    pub j: T,
    pub theta: T,
    tan_theta: T,
    bond: [[T; 9]; 9],
}

impl<T: Scalar> BlbqParams<T> {
    pub fn new(len: usize, j: T, theta: T) -> Result<Self> {
        if len < 2 {
            return Err(Error::OutOfRange(format!("spin-1 chain needs L >= 2, got {len}")));
        }
        if !(j.is_finite() && theta.is_finite()) {
            return Err(Error::SingularParameter("bilinear-biquadratic parameters must be finite".into()));
        }
        if theta.to_f64_lossless().cos().abs() < 1e-12 {
            return Err(Error::SingularParameter(format!("tan(theta) diverges at theta = {theta}")));
        }
        let tan_theta = theta.tan();
        let ss = spin_one_exchange();
        let mut bond = [[T::zero(); 9]; 9];
        for r in 0..9 {
            for c in 0..9 {
                let sq: f64 = (0..9).map(|k| ss[r][k] * ss[k][c]).sum();
                bond[r][c] = j * (T::of(ss[r][c]) + tan_theta * T::of(sq));
            }
        }
        Ok(Self {
            space: ChainSpace::spin_one(len)?,
            j,
            theta,
            tan_theta,
            bond,
        })
    }

    pub fn tan_theta(&self) -> T {
        self.tan_theta
    }

    /// The 9x9 bond operator `J [S·S + tan θ (S·S)²]`, indexed by `3 a + b`.
    pub fn bond_matrix(&self) -> &[[T; 9]; 9] {
        &self.bond
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl<T: Scalar> Operator<T> for BlbqParams<T> {
    fn space(&self) -> &ChainSpace {
        &self.space
    }

    fn row_into(&self, index: usize, out: &mut Vec<(usize, T)>) {
        let space = &self.space;
        let diag_pos = out.len();
        out.push((index, T::zero()));
        let mut diagonal = T::zero();
        for i in 0..space.len() - 1 {
            let a = space.digit(index, i) as usize;
            let b = space.digit(index, i + 1) as usize;
            let col = 3 * a + b;
            // rows of the bond matrix: <a'b'| B |ab>
            for (r, bond_row) in self.bond.iter().enumerate() {
                let amp = bond_row[col];
                if r == col {
                    diagonal = diagonal + amp;
                } else if amp != T::zero() {
                    let (a2, b2) = ((r / 3) as u8, (r % 3) as u8);
                    let j = space.with_digit(space.with_digit(index, i, a2), i + 1, b2);
                    out.push((j, amp));
                }
            }
        }
        out[diag_pos].1 = diagonal;
    }
}

pub fn blbq_row<T: Scalar>(p: &BlbqParams<T>, x: &Configuration) -> Result<Vec<(Configuration, T)>> {
    p.row(x)
}
