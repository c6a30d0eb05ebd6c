//! Scalar abstraction for the real-valued math.
//!
//! Scores, probabilities, and error rates are generic over [`Real`] so the
//! same code runs in `f32` or `f64`. Everything count-shaped (term
//! frequencies, n-gram counts, edit-op tallies) stays in integer types and
//! is converted at the point of arithmetic.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the workbench's math is written against.
///
/// Implemented for `f32` and `f64`. The extra supertraits beyond
/// [`num_traits::Float`] are the ones the scoring and evaluation code
/// actually leans on: conversions from counts, accumulation, and printing.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum<Self>
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Convert an integer count. Counts at desk scale are far below the
    /// point where `f32` would overflow, so this never fails; precision
    /// loss on huge counts is the caller's accepted trade-off when
    /// instantiating at `f32`.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("u64 converts to any Real")
    }

    /// Convert a plain `f64` constant (smoothing offsets, defaults).
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("f64 converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    fn midpoint<R: Real>(a: R, b: R) -> R {
        (a + b) / R::cast(2.0)
    }

    #[test]
    fn both_widths_instantiate() {
        assert_eq!(midpoint(1.0f32, 3.0f32), 2.0f32);
        assert_eq!(midpoint(1.0f64, 3.0f64), 2.0f64);
        assert_eq!(f32::from_count(7), 7.0f32);
        assert_eq!(f64::from_count(7), 7.0f64);
    }
}
