//! Scalar abstraction shared by every numeric module.
//!
//! All model, payoff, ODE and spectrum code is written against [`Scalar`],
//! which is implemented for `f32` and `f64`. The only operations not covered
//! by `num_traits::Float` are the complementary error function and the
//! standard normal CDF, which are forwarded to `libm`.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + LowerExp
    + Default
    + Send
    + Sync
    + serde::Serialize
    + 'static
{
    fn erfc(self) -> Self;

    /// Converts an `f64` literal. Panics only for types that cannot hold it,
    /// which does not happen for `f32`/`f64`.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Standard normal cumulative distribution function.
    #[inline]
    fn norm_cdf(self) -> Self {
        let half = Self::lit(0.5);
        half * (-self * Self::FRAC_1_SQRT_2()).erfc()
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_cdf_reference_points() {
        assert_eq!(0.0_f64.norm_cdf(), 0.5);
        // Φ(-1), Φ(-2) to 15 digits
        assert!(((-1.0_f64).norm_cdf() - 0.158655253931457).abs() < 1e-15);
        assert!(((-2.0_f64).norm_cdf() - 0.0227501319481792).abs() < 1e-15);
        assert!(((-1.0_f32).norm_cdf() - 0.158_655_25).abs() < 1e-6);
    }

    #[test]
    fn deep_tail_does_not_cancel() {
        let p = (-30.0_f64).norm_cdf();
        assert!(p > 0.0 && p < 1e-190);
    }
}
