//! Scalar abstraction for the numerical kernels.
//!
//! Everything in this crate is generic over [`Real`] so the same code runs in
//! `f32` or `f64`; the drivers and the CLI instantiate `f64` (see the type
//! aliases at the crate root).

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

/// Floating-point scalar usable by every kernel in this crate.
pub trait Real:
    num_traits::Float
    + num_traits::FloatConst
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal (tables, tolerances, dyadic constants).
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count not representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }

    fn half() -> Self {
        Self::of(0.5)
    }

    fn two() -> Self {
        Self::of(2.0)
    }

    /// 2^n, exact for the moderate levels used here (n < 53).
    fn pow2(n: usize) -> Self {
        debug_assert!(n < 53);
        Self::of((1u64 << n) as f64)
    }

    /// 2^-n, exact (power of two).
    fn inv_pow2(n: usize) -> Self {
        Self::one() / Self::pow2(n)
    }
}

impl Real for f32 {}
impl Real for f64 {}
