//! Floating-point scalar abstraction shared by every numerical routine.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// Everything generic in the crate is written against this trait. The one
/// operation that needs a concrete linear-algebra backend, the dense symmetric
/// eigensolve, is provided per type so generic code never has to name it.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or parameter into this scalar type.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar")
    }

    /// Widens to `f64` for reporting and serialization.
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("Scalar widens to f64")
    }

    /// Full eigendecomposition of a real symmetric `n x n` matrix stored
    /// column-major. Returns eigenvalues in ascending order and the matching
    /// orthonormal eigenvectors, also column-major.
    fn symmetric_eigen(n: usize, matrix: Vec<Self>) -> (Vec<Self>, Vec<Self>);
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn symmetric_eigen(n: usize, matrix: Vec<Self>) -> (Vec<Self>, Vec<Self>) {
                assert_eq!(matrix.len(), n * n, "matrix is not n x n");
                if n == 0 {
                    return (Vec::new(), Vec::new());
                }
                let dense = nalgebra::DMatrix::<$t>::from_vec(n, n, matrix);
                let eigen = nalgebra::SymmetricEigen::new(dense);
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| eigen.eigenvalues[a].total_cmp(&eigen.eigenvalues[b]));
                let values = order.iter().map(|&k| eigen.eigenvalues[k]).collect();
                let mut vectors = Vec::with_capacity(n * n);
                for &k in &order {
                    vectors.extend(eigen.eigenvectors.column(k).iter().copied());
                }
                (values, vectors)
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
