//! Dense and sparse complex linear-algebra kernels.
//!
//! Sized for cluster Hilbert spaces (dim `2^k`) and the corresponding
//! superoperator spaces (dim `4^k`). Vectorization is column-stacking
//! throughout: `vec(A X B) = (B^T ⊗ A) vec(X)`.

mod action;
mod dense;
mod expm;
mod sparse;

pub use action::{expm_apply, LinearOp};
pub use dense::{ComplexMatrix, ComplexVector};
pub use expm::expm;
pub use sparse::CsrMatrix;
