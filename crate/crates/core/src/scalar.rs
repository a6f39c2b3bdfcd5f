//! Floating-point scalar abstraction shared by every numeric type in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Scalar used for fractions, megabytes and scores: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in `f32`.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal must convert to scalar")
    }

    /// Widening conversion used for formatting and statistics.
    fn to_f64_lossless(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Absolute tolerance for "sums to one" style checks.
    fn sum_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(8.0))
    }

    /// Tolerance under which a quantity that should reach a bound is snapped onto it.
    fn snap_tolerance() -> Self {
        Self::epsilon().sqrt()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Clamps `v` into `[0, 1]`.
pub fn clamp_unit<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// True when `v` lies in `[0, 1]` (NaN is rejected).
pub fn in_unit<T: Scalar>(v: T) -> bool {
    v >= T::zero() && v <= T::one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances_scale_with_precision() {
        assert_eq!(f64::sum_tolerance(), 1e-9);
        assert!(f32::sum_tolerance() > 1e-7);
        assert!(f32::snap_tolerance() > f64::snap_tolerance() as f32);
    }

    #[test]
    fn unit_helpers() {
        assert_eq!(clamp_unit(1.5f64), 1.0);
        assert_eq!(clamp_unit(-0.1f32), 0.0);
        assert!(in_unit(0.0f64) && in_unit(1.0f64));
        assert!(!in_unit(f64::NAN));
    }
}
