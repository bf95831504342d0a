//! The numeric contract shared by the solving (float) and certifying
//! (interval) paths. Every formula in [`crate::model`] is written once over
//! [`Scalar`].

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{Float, One, Zero};

use crate::interval::Interval;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// Converts a double. Exact for `f64` and intervals.
    fn from_f64(x: f64) -> Self;

    fn from_int(k: i64) -> Self;

    fn sqrt(self) -> Self;

    fn sqr(self) -> Self {
        self * self
    }

    fn powi(self, n: u32) -> Self {
        match n {
            0 => Self::one(),
            1 => self,
            _ if n.is_multiple_of(2) => self.powi(n / 2).sqr(),
            _ => self * self.powi(n - 1),
        }
    }

    /// `cos(2π num / den)`; an enclosure of the exact value in interval mode.
    fn cos_turn(num: i64, den: i64) -> Self;

    /// Lower bound of the value (the value itself for floats).
    fn lower(self) -> f64;

    /// Upper bound of the value.
    fn upper(self) -> f64;

    /// Representative point (interval midpoint).
    fn mid(self) -> f64;

    /// Upper bound of the absolute value.
    fn mag(self) -> f64 {
        self.lower().abs().max(self.upper().abs())
    }

    fn is_finite(self) -> bool {
        self.lower().is_finite() && self.upper().is_finite()
    }

    /// True when every member is strictly positive.
    fn certainly_positive(self) -> bool {
        self.lower() > 0.0
    }

    /// True when every member of `self` is strictly below every member of
    /// `other`.
    fn certainly_less(self, other: Self) -> bool {
        self.upper() < other.lower()
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn from_f64(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn from_int(k: i64) -> Self {
                k as $t
            }

            #[inline]
            fn sqrt(self) -> Self {
                Float::sqrt(self)
            }

            fn cos_turn(num: i64, den: i64) -> Self {
                // The midpoint of the rigorous enclosure keeps the float and
                // interval paths on the same table.
                Interval::cos_turn(num, den).mid() as $t
            }

            #[inline]
            fn lower(self) -> f64 {
                self as f64
            }

            #[inline]
            fn upper(self) -> f64 {
                self as f64
            }

            #[inline]
            fn mid(self) -> f64 {
                self as f64
            }

            #[inline]
            fn powi(self, n: u32) -> Self {
                Float::powi(self, n as i32)
            }
        }
    };
}

float_scalar!(f32);
float_scalar!(f64);

impl Scalar for Interval {
    #[inline]
    fn from_f64(x: f64) -> Self {
        Interval::point(x)
    }

    fn from_int(k: i64) -> Self {
        Interval::from_int(k)
    }

    #[inline]
    fn sqrt(self) -> Self {
        Interval::sqrt(self)
    }

    #[inline]
    fn sqr(self) -> Self {
        Interval::sqr(self)
    }

    fn powi(self, n: u32) -> Self {
        Interval::powi(self, n)
    }

    fn cos_turn(num: i64, den: i64) -> Self {
        Interval::cos_turn(num, den)
    }

    #[inline]
    fn lower(self) -> f64 {
        self.lo()
    }

    #[inline]
    fn upper(self) -> f64 {
        self.hi()
    }

    fn mid(self) -> f64 {
        Interval::mid(self)
    }

    fn mag(self) -> f64 {
        Interval::mag(self)
    }

    fn is_finite(self) -> bool {
        Interval::is_finite(self)
    }
}
