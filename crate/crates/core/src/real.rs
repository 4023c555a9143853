//! Scalar abstraction used by the series kernels.
//!
//! `f64` is the working precision. [`twofloat::TwoFloat`] (double-double,
//! about 106 bits) is used when a sum shows heavy cancellation, which happens
//! for `x` well above a few tens.

use num_traits::{Float, FromPrimitive};
use twofloat::TwoFloat;

pub trait Real: Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static {
    /// Unit roundoff of the representation.
    const UNIT_ROUNDOFF: f64;

    fn lift(v: f64) -> Self;
    fn lower(self) -> f64;

    /// Correctly rounded quotient. `TwoFloat`'s own `/` computes the
    /// reciprocal residual without a fused multiply-add and is only
    /// `f64`-accurate, so kernels divide through this method.
    fn quot(self, rhs: Self) -> Self;
}

impl Real for f64 {
    const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

    #[inline]
    fn lift(v: f64) -> Self {
        v
    }

    #[inline]
    fn lower(self) -> f64 {
        self
    }

    #[inline]
    fn quot(self, rhs: Self) -> Self {
        self / rhs
    }
}

impl Real for TwoFloat {
    const UNIT_ROUNDOFF: f64 = 1.0e-32;

    #[inline]
    fn lift(v: f64) -> Self {
        TwoFloat::from(v)
    }

    #[inline]
    fn lower(self) -> f64 {
        f64::from(self)
    }

    fn quot(self, rhs: Self) -> Self {
        // long division: three f64 quotient digits against exact remainders
        let q1 = self.hi() / rhs.hi();
        let r = self - rhs * q1;
        let q2 = r.hi() / rhs.hi();
        let r = r - rhs * q2;
        let q3 = r.hi() / rhs.hi();
        TwoFloat::new_add(q1, q2) + q3
    }
}
