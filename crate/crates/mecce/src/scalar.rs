//! Real scalar abstraction: f32 or f64.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Real floating-point scalar the complex kernels are generic over.
///
/// `f64` is the default throughout the physics layers (see the aliases at the
/// crate root); `f32` is supported by the kernel layer.
pub trait RealScalar:
    Float + FromPrimitive + NumAssign + Sum + Send + Sync + Debug + Display + 'static
{
    /// Lossy conversion from `f64` for literal constants.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Complex value with zero imaginary part.
pub fn re<T: RealScalar>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// The imaginary unit.
pub fn i<T: RealScalar>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}
