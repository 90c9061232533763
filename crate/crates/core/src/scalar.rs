//! Floating point abstraction shared by every numeric kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }

    /// Relative tolerance used when deciding whether two accumulated costs tie.
    #[inline]
    fn tie_tolerance() -> Self {
        Self::epsilon().sqrt()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `a` and `b` are equal up to [`Scalar::tie_tolerance`], relative to their magnitude.
/// Non-finite values only tie with themselves.
pub fn approx_tie<T: Scalar>(a: T, b: T) -> bool {
    if !(a.is_finite() && b.is_finite()) {
        return a == b;
    }
    let scale = T::one().max(a.abs()).max(b.abs());
    (a - b).abs() <= T::tie_tolerance() * scale
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_two_pi<T: Scalar>(angle: T) -> T {
    let two_pi = T::lit(std::f64::consts::TAU);
    let mut a = angle % two_pi;
    if a < T::zero() {
        a += two_pi;
    }
    if a >= two_pi {
        a -= two_pi;
    }
    a
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_pi<T: Scalar>(angle: T) -> T {
    let pi = T::lit(std::f64::consts::PI);
    let a = wrap_two_pi(angle);
    if a > pi {
        a - T::lit(std::f64::consts::TAU)
    } else {
        a
    }
}
