//! Scalar abstraction shared by every numerical routine in the crate.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point type the library is generic over (`f32` or `f64`).
///
/// Transcendental functions come from [`RealField`]; conversions to and from
/// `f64` literals go through `num-traits`.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive {
    /// Converts an `f64` constant. Panics only for non-representable values,
    /// which never happens for the finite literals used in this crate.
    #[inline]
    fn c(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 constant")
    }

    #[inline]
    fn from_usize_(v: usize) -> Self {
        Self::c(v as f64)
    }

    #[inline]
    fn f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn machine_eps() -> Self;

    fn infinity() -> Self;

    fn is_finite_(self) -> bool {
        self.f64().is_finite()
    }
}

impl Scalar for f64 {
    fn machine_eps() -> Self {
        f64::EPSILON
    }
    fn infinity() -> Self {
        f64::INFINITY
    }
}

impl Scalar for f32 {
    fn machine_eps() -> Self {
        f32::EPSILON
    }
    fn infinity() -> Self {
        f32::INFINITY
    }
}
