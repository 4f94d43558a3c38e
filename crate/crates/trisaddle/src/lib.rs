//! Building blocks for three-by-three block saddle point systems
//!
//! ```text
//!     [ A   B'  0  ] [x]   [f]
//!     [ B   0   C' ] [y] = [g]      (symmetric form)
//!     [ 0   C   0  ] [z]   [h]
//! ```
//!
//! with `A` symmetric positive definite and `B`, `C` of full row rank.
//! The crate ships its own sparse kernels (`sparse`), the block system
//! type and metrics (`saddle`), CG/GMRES/FGMRES (`krylov`), a family of
//! block preconditioners (`precond`), spectral analysis of the
//! preconditioned operator (`spectral`), and reproducible test problems
//! (`problems`).

pub mod error;
pub mod krylov;
pub mod precond;
pub mod problems;
pub mod saddle;
pub mod sparse;
pub mod spectral;

pub use error::{Error, Result};
