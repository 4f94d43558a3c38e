//! Sparse and dense matrix kernels.
//!
//! Everything downstream (solvers, preconditioners, spectral analysis)
//! is built on the types here: [`CsrMatrix`] for sparse storage,
//! [`DenseMatrix`] for small dense work and oracles, [`CholeskyFactor`]
//! for SPD solves, Lanczos extreme-eigenvalue estimation, and Matrix
//! Market I/O.

mod cholesky;
mod csr;
mod dense;
mod lanczos;
pub mod market;
pub(crate) mod vecops;

pub use cholesky::{cholesky_factor, CholeskyFactor};
pub use csr::CsrMatrix;
pub use dense::{dense_solve, DenseLu, DenseMatrix};
pub use lanczos::{extreme_eigs_symmetric, EigBounds};

/// A real linear map applied to flat vectors.
///
/// `apply` must write `y = Op x`; implementations may assume the slice
/// lengths match `ncols`/`nrows` (callers check, implementations assert).
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec_into(x, y).expect("operator dimensions checked by caller");
    }
}
