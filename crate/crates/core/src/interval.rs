//! Closed intervals of `f64` with outward rounding.
//!
//! Every endpoint operation is rounded in the safe direction without touching
//! the floating-point environment: the round-to-nearest result is compared
//! against its exact error term (TwoSum / FMA residuals) and moved one ulp
//! outward only when the exact result lies on that side. Results are
//! therefore optimal for `+ - * / sqrt`, and computations on different
//! threads never interfere.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("square root of an interval with negative part")]
    NegativeSqrt,
    #[error("invalid interval endpoints")]
    InvalidEndpoints,
}

/// Below this magnitude FMA residuals may be inexact (subnormal range), so
/// the directed operations fall back to an unconditional one-ulp nudge.
const TINY: f64 = 1e-290;

pub(crate) mod round {
    use super::TINY;

    #[inline]
    fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
        let bb = s - a;
        (a - (s - bb)) + (b - bb)
    }

    #[inline]
    pub fn add_down(a: f64, b: f64) -> f64 {
        let s = a + b;
        if !s.is_finite() {
            return if s == f64::INFINITY && a.is_finite() && b.is_finite() {
                f64::MAX
            } else {
                s
            };
        }
        if two_sum_err(a, b, s) < 0.0 {
            s.next_down()
        } else {
            s
        }
    }

    #[inline]
    pub fn add_up(a: f64, b: f64) -> f64 {
        -add_down(-a, -b)
    }

    #[inline]
    pub fn sub_down(a: f64, b: f64) -> f64 {
        add_down(a, -b)
    }

    #[inline]
    pub fn sub_up(a: f64, b: f64) -> f64 {
        add_up(a, -b)
    }

    #[inline]
    pub fn mul_down(a: f64, b: f64) -> f64 {
        let p = a * b;
        if !p.is_finite() {
            return if p == f64::INFINITY && a.is_finite() && b.is_finite() {
                f64::MAX
            } else {
                p
            };
        }
        if p.abs() < TINY {
            return if a == 0.0 || b == 0.0 { 0.0 } else { p.next_down() };
        }
        if a.mul_add(b, -p) < 0.0 {
            p.next_down()
        } else {
            p
        }
    }

    #[inline]
    pub fn mul_up(a: f64, b: f64) -> f64 {
        -mul_down(-a, b)
    }

    #[inline]
    pub fn div_down(a: f64, b: f64) -> f64 {
        let q = a / b;
        if !q.is_finite() {
            return if q == f64::INFINITY && a.is_finite() && b != 0.0 {
                f64::MAX
            } else {
                q
            };
        }
        if q.abs() < TINY || a.abs() < TINY {
            return if a == 0.0 { 0.0 } else { q.next_down() };
        }
        // a - q*b is exact; the true quotient lies below q iff r/b < 0.
        let r = (-q).mul_add(b, a);
        if (r < 0.0) != (b < 0.0) && r != 0.0 {
            q.next_down()
        } else {
            q
        }
    }

    #[inline]
    pub fn div_up(a: f64, b: f64) -> f64 {
        -div_down(-a, b)
    }

    #[inline]
    pub fn sqrt_down(x: f64) -> f64 {
        let s = x.sqrt();
        if s == 0.0 || !s.is_finite() {
            return s;
        }
        if s < TINY {
            return s.next_down().max(0.0);
        }
        if (-s).mul_add(s, x) < 0.0 {
            s.next_down()
        } else {
            s
        }
    }

    #[inline]
    pub fn sqrt_up(x: f64) -> f64 {
        let s = x.sqrt();
        if !s.is_finite() {
            return s;
        }
        if s < TINY {
            return if x == 0.0 { 0.0 } else { s.next_up() };
        }
        if (-s).mul_add(s, x) > 0.0 {
            s.next_up()
        } else {
            s
        }
    }
}

/// A closed interval `[lo, hi]` of reals with `f64` endpoints.
///
/// Non-finite intervals are absorbing: any operation that meets one (or that
/// is undefined on its operands, like dividing by an interval containing
/// zero) yields [`Interval::ENTIRE`], which callers detect with
/// [`Interval::is_finite`].
#[derive(Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(IntervalError::InvalidEndpoints);
        }
        Ok(Interval { lo, hi })
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval `[x - r, x + r]`, rounded outward.
    pub fn around(x: f64, r: f64) -> Self {
        let r = r.abs();
        Interval {
            lo: round::sub_down(x, r),
            hi: round::add_up(x, r),
        }
    }

    /// Enclosure of π.
    pub fn pi() -> Self {
        // std's PI is the double nearest to π and lies below it.
        Interval {
            lo: std::f64::consts::PI,
            hi: std::f64::consts::PI.next_up(),
        }
    }

    /// Exact-as-possible enclosure of an integer.
    pub fn from_int(k: i64) -> Self {
        let x = k as f64;
        if x.abs() < 9.007_199_254_740_992e15 {
            Interval::point(x)
        } else {
            Interval {
                lo: x.next_down(),
                hi: x.next_up(),
            }
        }
    }

    /// Enclosure of `num / den` for integers.
    pub fn ratio(num: i64, den: i64) -> Self {
        Interval::from_int(num) / Interval::from_int(den)
    }

    #[inline]
    pub fn lo(self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn mid(self) -> f64 {
        if !self.is_finite() {
            return 0.0;
        }
        let m = 0.5 * self.lo + 0.5 * self.hi;
        m.clamp(self.lo, self.hi)
    }

    /// Upper bound on the width `hi - lo`.
    pub fn width(self) -> f64 {
        round::sub_up(self.hi, self.lo)
    }

    /// Upper bound on the radius about [`Interval::mid`].
    pub fn rad(self) -> f64 {
        let m = self.mid();
        round::sub_up(self.hi, m).max(round::sub_up(m, self.lo))
    }

    /// Magnitude: `max |x|` over the interval.
    pub fn mag(self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Mignitude: `min |x|` over the interval.
    pub fn mig(self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn is_finite(self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(self, other: Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(self) -> bool {
        self.contains(0.0)
    }

    pub fn certainly_positive(self) -> bool {
        self.lo > 0.0
    }

    pub fn certainly_negative(self) -> bool {
        self.hi < 0.0
    }

    pub fn hull(self, other: Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn abs(self) -> Interval {
        Interval {
            lo: self.mig(),
            hi: self.mag(),
        }
    }

    /// `x²`, tight when the interval straddles zero.
    pub fn sqr(self) -> Interval {
        if !self.is_finite() {
            return Interval::ENTIRE;
        }
        let (a, b) = (self.mig(), self.mag());
        Interval {
            lo: round::mul_down(a, a),
            hi: round::mul_up(b, b),
        }
    }

    pub fn checked_sqrt(self) -> Result<Interval, IntervalError> {
        if !self.is_finite() || self.lo < 0.0 {
            return Err(IntervalError::NegativeSqrt);
        }
        Ok(Interval {
            lo: round::sqrt_down(self.lo),
            hi: round::sqrt_up(self.hi),
        })
    }

    /// Square root of the nonnegative part; [`Interval::ENTIRE`] when the
    /// interval is entirely negative.
    pub fn sqrt(self) -> Interval {
        if !self.is_finite() || self.hi < 0.0 {
            return Interval::ENTIRE;
        }
        Interval {
            lo: round::sqrt_down(self.lo.max(0.0)),
            hi: round::sqrt_up(self.hi),
        }
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZeroInterval);
        }
        Ok(self / rhs)
    }

    pub fn recip(self) -> Interval {
        Interval::point(1.0) / self
    }

    pub fn powi(self, n: u32) -> Interval {
        match n {
            0 => Interval::point(1.0),
            1 => self,
            _ if n.is_multiple_of(2) => self.powi(n / 2).sqr(),
            _ => self * self.powi(n - 1),
        }
    }

    /// `x^(p/2)` for odd `p`, defined for `x ≥ 0`.
    pub fn pow_half(self, p: u32) -> Interval {
        let s = self.sqrt();
        if p.is_multiple_of(2) {
            self.powi(p / 2)
        } else {
            self.powi(p / 2) * s
        }
    }

    /// Enclosure of `cos(2π num / den)` for an exact rational angle.
    pub fn cos_turn(num: i64, den: i64) -> Interval {
        assert!(den > 0, "cos_turn needs a positive denominator");
        // Reduce to cos or sin of 2π p/q with p/q ∈ [0, 1/8], by exact
        // integer symmetries of the circle.
        let den = den as i128;
        let mut p = (num as i128).rem_euclid(den);
        let mut q = den;
        if 2 * p > q {
            p = q - p;
        }
        let mut negate = false;
        if 4 * p > q {
            p = q - 2 * p;
            q *= 2;
            negate = true;
        }
        let mut use_sin = false;
        if 8 * p > q {
            p = q - 4 * p;
            q *= 4;
            use_sin = true;
        }
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        let value = if p == 0 {
            Interval::point(if use_sin { 0.0 } else { 1.0 })
        } else {
            let t = Interval::pi() * Interval::from_i128(2 * p) / Interval::from_i128(q);
            if use_sin {
                taylor_sin(t)
            } else {
                taylor_cos(t)
            }
        };
        let value = if negate { -value } else { value };
        value.intersect_unit()
    }

    fn from_i128(k: i128) -> Interval {
        let x = k as f64;
        if x.abs() < 9.007_199_254_740_992e15 {
            Interval::point(x)
        } else {
            Interval {
                lo: x.next_down(),
                hi: x.next_up(),
            }
        }
    }

    fn intersect_unit(self) -> Interval {
        Interval {
            lo: self.lo.max(-1.0),
            hi: self.hi.min(1.0),
        }
    }
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.abs().max(1)
}

const TAYLOR_TERMS: u32 = 12;

/// cos t for t ∈ [0, π/4] by Horner evaluation plus a Lagrange remainder.
fn taylor_cos(t: Interval) -> Interval {
    let u = t.sqr();
    let one = Interval::point(1.0);
    let mut acc = one;
    for j in (1..=TAYLOR_TERMS).rev() {
        let d = Interval::from_int(((2 * j - 1) * (2 * j)) as i64);
        acc = one - u * acc / d;
    }
    acc + remainder(t, 2 * TAYLOR_TERMS + 2)
}

/// sin t for t ∈ [0, π/4].
fn taylor_sin(t: Interval) -> Interval {
    let u = t.sqr();
    let one = Interval::point(1.0);
    let mut acc = one;
    for j in (1..=TAYLOR_TERMS).rev() {
        let d = Interval::from_int(((2 * j) * (2 * j + 1)) as i64);
        acc = one - u * acc / d;
    }
    t * acc + remainder(t, 2 * TAYLOR_TERMS + 3)
}

/// `[-|t|^k / k!, |t|^k / k!]`.
fn remainder(t: Interval, k: u32) -> Interval {
    let mut r = Interval::point(t.mag()).powi(k);
    for j in 2..=k {
        r = r / Interval::from_int(j as i64);
    }
    Interval {
        lo: -r.hi,
        hi: r.hi,
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.17e}, {:.17e}]", self.lo, self.hi)
    }
}

impl From<f64> for Interval {
    fn from(x: f64) -> Self {
        Interval::point(x)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        if !self.is_finite() || !rhs.is_finite() {
            return Interval::ENTIRE;
        }
        Interval {
            lo: round::add_down(self.lo, rhs.lo),
            hi: round::add_up(self.hi, rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        if !self.is_finite() || !rhs.is_finite() {
            return Interval::ENTIRE;
        }
        Interval {
            lo: round::sub_down(self.lo, rhs.hi),
            hi: round::sub_up(self.hi, rhs.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        if !self.is_finite() || !rhs.is_finite() {
            return Interval::ENTIRE;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = round::mul_down(a, c)
            .min(round::mul_down(a, d))
            .min(round::mul_down(b, c))
            .min(round::mul_down(b, d));
        let hi = round::mul_up(a, c)
            .max(round::mul_up(a, d))
            .max(round::mul_up(b, c))
            .max(round::mul_up(b, d));
        Interval { lo, hi }
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        if !self.is_finite() || !rhs.is_finite() || rhs.contains_zero() {
            return Interval::ENTIRE;
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = round::div_down(a, c)
            .min(round::div_down(a, d))
            .min(round::div_down(b, c))
            .min(round::div_down(b, d));
        let hi = round::div_up(a, c)
            .max(round::div_up(a, d))
            .max(round::div_up(b, c))
            .max(round::div_up(b, d));
        Interval { lo, hi }
    }
}

impl Zero for Interval {
    fn zero() -> Self {
        Interval::point(0.0)
    }
    fn is_zero(&self) -> bool {
        self.lo == 0.0 && self.hi == 0.0
    }
}

impl One for Interval {
    fn one() -> Self {
        Interval::point(1.0)
    }
}

/// Rigorous upper bound of `max_i |v_i|`.
pub fn sup_norm(v: &[Interval]) -> f64 {
    v.iter().fold(0.0, |acc, x| {
        if x.is_finite() {
            acc.max(x.mag())
        } else {
            f64::INFINITY
        }
    })
}

/// Rigorous upper bound of the operator ∞-norm (maximum absolute row sum).
pub fn operator_sup_norm(m: &DMatrix<Interval>) -> f64 {
    (0..m.nrows())
        .map(|i| {
            m.row(i).iter().fold(0.0, |acc: f64, x| {
                if x.is_finite() {
                    round::add_up(acc, x.mag())
                } else {
                    f64::INFINITY
                }
            })
        })
        .fold(0.0, f64::max)
}
