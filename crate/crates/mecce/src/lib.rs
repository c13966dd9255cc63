//! Central-spin decoherence in interacting, dissipative spin baths.
//!
//! The coherence of a two-level probe coupled to a spin-1/2 bath is computed
//! with a master-equation cluster-correlation expansion (ME-CCE): the bath is
//! split into connected clusters, each cluster evolves under a projected
//! two-branch Lindblad equation, and the total coherence is assembled from
//! irreducible cluster contributions. Small baths can be cross-checked against
//! brute-force propagation of the full master equation.
//!
//! Layers, bottom up:
//! - [`algebra`]: dense/sparse complex kernels, Kronecker products, the matrix
//!   exponential and its action on vectors. Generic over the real scalar.
//! - [`model`]: bath spins, couplings, jump channels, pulse schedules, and the
//!   chain / 2D-lattice / NV-surface model builders.
//! - [`lindblad`]: projected two-branch generators and their propagation
//!   through a pulse schedule; the analytic single-spin solution.
//! - [`cce`]: cluster enumeration, the recursive factorization, convergence
//!   and factorization diagnostics.
//! - [`oracle`]: exact full-bath references for validation.
//! - [`acceptance`]: the built-in verification checks used by the test suite
//!   and the CLI `verify` subcommand.

pub mod acceptance;
pub mod algebra;
pub mod cce;
pub mod error;
pub mod lindblad;
pub mod model;
pub mod oracle;
pub mod scalar;

pub use error::Error;
pub use scalar::RealScalar;

/// Default real scalar for the physics layers.
pub type Real = f64;
/// Complex number over the default scalar.
pub type Cplx = num_complex::Complex<f64>;
/// Dense complex matrix over the default scalar.
pub type Matrix = algebra::ComplexMatrix<f64>;
/// Dense complex vector over the default scalar.
pub type Vector = algebra::ComplexVector<f64>;
/// Sparse complex matrix over the default scalar.
pub type SparseMatrix = algebra::CsrMatrix<f64>;
