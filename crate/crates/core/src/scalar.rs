//! Scalar abstraction for the numeric core.
//!
//! Everything numeric in this crate is generic over [`Scalar`], which is
//! implemented by `f32` and `f64`. The CLI and the crate-root type aliases
//! use `f64`; `f32` is available for memory-constrained callers.

use std::fmt::Display;
use std::str::FromStr;

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar usable by the whole pipeline: `f32` or `f64`.
///
/// `RealField` supplies the field operations and elementary functions,
/// the `num-traits` conversions bridge to `f64` constants, and
/// `Display`/`FromStr` carry the CSV and model-file text encodings.
pub trait Scalar:
    RealField + FromPrimitive + ToPrimitive + Copy + Default + Display + FromStr
{
}

impl<T> Scalar for T where
    T: RealField + FromPrimitive + ToPrimitive + Copy + Default + Display + FromStr
{
}

/// Converts an `f64` constant into `T`, rounding to the nearest representable value.
#[inline]
pub fn from_f64<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("finite f64 converts to any Scalar")
}

/// Machine epsilon of `T` (2^-52 for `f64`, 2^-23 for `f32`).
#[inline]
pub fn machine_epsilon<T: Scalar>() -> T {
    <T as approx::AbsDiffEq>::default_epsilon()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn epsilon_matches_primitive() {
        assert_eq!(machine_epsilon::<f64>(), f64::EPSILON);
        assert_eq!(machine_epsilon::<f32>(), f32::EPSILON);
    }

    #[test]
    fn from_f64_round_trips_for_both_widths() {
        let x: f64 = from_f64(0.1);
        assert_eq!(x, 0.1);
        let y: f32 = from_f64(0.1);
        assert_eq!(y, 0.1f32);
    }
}
