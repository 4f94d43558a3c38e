//! Spectral analysis of the preconditioned operator.
//!
//! Four pieces: classical root-modulus bounds for monic polynomials, the
//! cubic that non-unit eigenvalues of M^{-1} A satisfy and the clustering
//! annulus it yields, the quotient pair (p, q) with its a-priori interval
//! and parameter suggestions, and a dense eigensolver used as the oracle
//! for verifying all of it on small instances. Complex arithmetic lives in
//! this module only; everything else in the crate is real.

pub mod eig;
pub mod poly;
pub mod pq;
pub mod verify;

pub use eig::{dense_eig_full, dense_eigs, DenseEig, EigenReport, DENSE_EIG_ORDER_LIMIT};
pub use poly::{
    clustering_bounds, cubic_from_pq, root_bounds, BoundFamily, ClusterCase, MonicPolynomial,
    RootBounds,
};
pub use pq::{
    case_constants, compute_pq, pq_sum_interval, suggest_parameters, CaseConstants, PqSampler,
    SpectralQuantities,
};
pub use verify::{
    preconditioned_operator_matrix, verify_theorem2, VerificationReport, CUBIC_RESIDUAL_LIMIT,
    NULL_LIFT_LIMIT,
};
