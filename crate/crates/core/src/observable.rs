//! Local observables as sparse row generators.

use std::fmt;
use std::marker::PhantomData;

use crate::error::{Error, Result};
use crate::lattice::ChainSpace;
use crate::operator::Operator;
use crate::scalar::Scalar;

/// Observables the estimators know how to measure. Sites are 0-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObservableKind {
    Identity,
    SigmaZ(usize),
    SigmaZZ(usize, usize),
    SigmaX(usize),
    Spin1Sz(usize),
    Spin1SzSz(usize, usize),
}

impl ObservableKind {
    pub fn sites(&self) -> Vec<usize> {
        match *self {
            ObservableKind::Identity => Vec::new(),
            ObservableKind::SigmaZ(i) | ObservableKind::SigmaX(i) | ObservableKind::Spin1Sz(i) => vec![i],
            ObservableKind::SigmaZZ(i, j) | ObservableKind::Spin1SzSz(i, j) => {
                if i == j {
                    vec![i]
                } else {
                    vec![i.min(j), i.max(j)]
                }
            }
        }
    }

    pub fn is_diagonal(&self) -> bool {
        !matches!(self, ObservableKind::SigmaX(_))
    }

    fn required_dim(&self) -> Option<usize> {
        match self {
            ObservableKind::Identity => None,
            ObservableKind::SigmaZ(_) | ObservableKind::SigmaZZ(..) | ObservableKind::SigmaX(_) => Some(2),
            ObservableKind::Spin1Sz(_) | ObservableKind::Spin1SzSz(..) => Some(3),
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObservableKind::Identity => write!(f, "identity"),
            ObservableKind::SigmaZ(_) => write!(f, "sigma_z"),
            ObservableKind::SigmaZZ(..) => write!(f, "sigma_zz"),
            ObservableKind::SigmaX(_) => write!(f, "sigma_x"),
            ObservableKind::Spin1Sz(_) => write!(f, "spin1_sz"),
            ObservableKind::Spin1SzSz(..) => write!(f, "spin1_szsz"),
        }
    }
}

/// S^z eigenvalue of local state `v`: Pauli ±1 for spin-1/2, `v - 1` for spin-1.
#[inline]
pub fn z_value(d: usize, v: u8) -> i32 {
    if d == 2 {
        2 * v as i32 - 1
    } else {
        v as i32 - (d as i32 - 1) / 2
    }
}

/// A Hermitian observable bound to a chain basis.
#[derive(Clone, Debug)]
pub struct ObservableSpec<T> {
    kind: ObservableKind,
    space: ChainSpace,
    support: Vec<usize>,
    _scalar: PhantomData<T>,
}

/// Validates sites and local dimension and builds the observable.
pub fn observable_factory<T: Scalar>(kind: ObservableKind, space: &ChainSpace) -> Result<ObservableSpec<T>> {
    if let Some(d) = kind.required_dim() {
        if d != space.local_dim() {
            return Err(Error::UnsupportedObservable(format!(
                "{kind} needs local dimension {d}, chain has {}",
                space.local_dim()
            )));
        }
    }
    let support = kind.sites();
    if let Some(&bad) = support.iter().find(|&&s| s >= space.len()) {
        return Err(Error::OutOfRange(format!("site {bad} outside chain of {} sites", space.len())));
    }
    Ok(ObservableSpec {
        kind,
        space: space.clone(),
        support,
        _scalar: PhantomData,
    })
}

impl<T: Scalar> ObservableSpec<T> {
    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    /// Sites the observable acts on, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn is_diagonal(&self) -> bool {
        self.kind.is_diagonal()
    }

    /// `O(x)` for diagonal observables, `None` otherwise.
    pub fn diagonal_value(&self, index: usize) -> Option<T> {
        let d = self.space.local_dim();
        let z = |site| z_value(d, self.space.digit(index, site));
        let v = match self.kind {
            ObservableKind::Identity => 1,
            ObservableKind::SigmaZ(i) | ObservableKind::Spin1Sz(i) => z(i),
            ObservableKind::SigmaZZ(i, j) | ObservableKind::Spin1SzSz(i, j) => z(i) * z(j),
            ObservableKind::SigmaX(_) => return None,
        };
        Some(T::of(v as f64))
    }
}

impl<T: Scalar> Operator<T> for ObservableSpec<T> {
    fn space(&self) -> &ChainSpace {
        &self.space
    }

    fn row_into(&self, index: usize, out: &mut Vec<(usize, T)>) {
        match self.kind {
            ObservableKind::SigmaX(i) => out.push((index ^ (1 << i), T::one())),
            _ => out.push((index, self.diagonal_value(index).expect("diagonal kind"))),
        }
    }
}
