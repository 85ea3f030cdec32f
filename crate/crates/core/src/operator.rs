//! Matrix-free real operators on a chain basis.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{ChainSpace, Configuration};
use crate::scalar::Scalar;

/// Largest dimension [`Operator::to_dense`] will materialize.
pub const DENSE_ASSEMBLY_CAP: usize = 1 << 13;

/// A real operator given by on-demand row generation.
pub trait Operator<T: Scalar>: Sync {
    fn space(&self) -> &ChainSpace;

    /// Appends the nonzero entries `(x', O[x, x'])` of row `index` to `out`.
    fn row_into(&self, index: usize, out: &mut Vec<(usize, T)>);

    fn row(&self, x: &Configuration) -> Result<Vec<(Configuration, T)>> {
        let space = self.space();
        let index = space.encode(x)?;
        let mut entries = Vec::new();
        self.row_into(index, &mut entries);
        entries
            .into_iter()
            .map(|(j, a)| Ok((space.decode(j)?, a)))
            .collect()
    }

    /// `out = O v`.
    fn apply(&self, v: &[T], out: &mut [T]) {
        assert_eq!(v.len(), self.space().dim());
        assert_eq!(out.len(), v.len());
        out.par_iter_mut()
            .enumerate()
            .with_min_len(1024)
            .for_each_init(Vec::new, |row, (i, y)| {
                row.clear();
                self.row_into(i, row);
                *y = row.iter().map(|&(j, a)| a * v[j]).sum();
            });
    }

    /// Dense column-major matrix, for test-scale chains only.
    fn to_dense(&self) -> Result<Vec<T>> {
        let n = self.space().dim();
        if n > DENSE_ASSEMBLY_CAP {
            return Err(Error::Capacity {
                what: "dense assembly",
                requested: n as u128,
                cap: DENSE_ASSEMBLY_CAP as u128,
                hint: None,
            });
        }
        let mut dense = vec![T::zero(); n * n];
        let mut row = Vec::new();
        for i in 0..n {
            row.clear();
            self.row_into(i, &mut row);
            for &(j, a) in &row {
                dense[j * n + i] = dense[j * n + i] + a;
            }
        }
        Ok(dense)
    }
}
