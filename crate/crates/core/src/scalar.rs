//! Floating point abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type the algorithms are generic over: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Squared-norm threshold below which a Householder vector is rejected.
    const DEGENERATE_NORM_SQ: Self;

    fn two() -> Self {
        Self::one() + Self::one()
    }

    /// Lossless for `f32` and `f64`.
    fn to_f64_lossless(self) -> f64;

    fn from_f64_lossy(x: f64) -> Self;
}

impl Scalar for f64 {
    const DEGENERATE_NORM_SQ: Self = 1e-30;

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    const DEGENERATE_NORM_SQ: Self = 1e-30;

    #[inline]
    fn to_f64_lossless(self) -> f64 {
        self as f64
    }

    #[inline]
    fn from_f64_lossy(x: f64) -> Self {
        x as f32
    }
}
