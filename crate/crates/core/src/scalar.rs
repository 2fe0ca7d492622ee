//! Floating-point abstraction shared by the analytic modules.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Scalar type the market and channel models are written against: f32 or f64.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// Lossy conversion back to `f64`, used at IO boundaries.
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon scaled for tolerance checks.
    fn tol(scale: f64) -> Self {
        Self::epsilon() * Self::lit(scale)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Shorthand for [`Scalar::lit`].
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::lit(x)
}

/// Clamps `x` into `[lo, hi]`; NaN maps to `lo`.
#[inline]
pub fn clamp<T: Scalar>(x: T, lo: T, hi: T) -> T {
    if x.is_nan() || x < lo {
        lo
    } else if x > hi {
        hi
    } else {
        x
    }
}

/// Converts decibels to a linear power ratio.
#[inline]
pub fn db_to_linear<T: Scalar>(db: T) -> T {
    lit::<T>(10.0).powf(db / lit(10.0))
}

/// Converts dBm to watts.
#[inline]
pub fn dbm_to_watts<T: Scalar>(dbm: T) -> T {
    db_to_linear(dbm) * lit(1e-3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(20.0_f64) - 100.0).abs() < 1e-12);
        assert!((db_to_linear(-30.0_f64) - 1e-3).abs() < 1e-15);
        assert!((dbm_to_watts(-80.0_f64) - 1e-11).abs() < 1e-24);
        assert!((db_to_linear(20.0_f32) - 100.0).abs() < 1e-4);
    }

    #[test]
    fn clamp_handles_nan() {
        assert_eq!(clamp(f64::NAN, 0.0, 1.0), 0.0);
        assert_eq!(clamp(2.0, 0.0, 1.0), 1.0);
        assert_eq!(clamp(-2.0_f32, 0.0, 1.0), 0.0);
    }
}
