//! Floating-point abstraction for the solver kernels.
//!
//! Everything numeric in this crate is generic over [`Scalar`] so the same
//! code paths run in `f32` and `f64`. The public type aliases at the crate
//! root default to `f64`, which is what the CLI and the benchmark harness
//! use; `f32` mainly exists for memory-bound experiments and gets a smoke
//! test to keep the instantiation honest.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Scalar types the solver can run on.
///
/// This is deliberately a `num-traits` composition rather than a linear
/// algebra trait: the kernels only need IEEE arithmetic, comparisons and
/// conversions, and keeping the bound small keeps downstream signatures
/// readable.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + Sum<Self>
    + for<'a> Sum<&'a Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from `f64`, used for tolerances and literals.
    fn cast(value: f64) -> Self {
        // `FromPrimitive::from_f64` never fails for IEEE float targets.
        Self::from_f64(value).expect("f64 -> Scalar conversion")
    }

    /// Lossy conversion to `f64`, used for reporting and mixed-precision
    /// seams (dense eigensolves run in f64 regardless of `Self`).
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar -> f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn casts_round_trip_for_representable_values() {
        assert_eq!(f64::cast(1.5), 1.5);
        assert_eq!(f32::cast(1.5), 1.5f32);
        assert_eq!(1.5f32.to_f64_lossy(), 1.5);
    }

    fn generic_sum<T: Scalar>(values: &[T]) -> T {
        values.iter().sum()
    }

    #[test]
    fn trait_is_usable_behind_a_generic_fn() {
        assert_eq!(generic_sum(&[1.0f64, 2.0, 3.0]), 6.0);
        assert_eq!(generic_sum(&[1.0f32, 2.0, 3.0]), 6.0f32);
    }
}
