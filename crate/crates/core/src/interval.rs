//! Outward-rounded interval arithmetic over `f64`.
//!
//! Rounding is done after the fact: every elementary operation is evaluated in
//! round-to-nearest, its exact error term is recovered with TwoSum or an FMA
//! residual, and the endpoint is stepped one ulp outward only when the rounded
//! value lies on the wrong side of the exact result. In the underflow range the
//! error term is not exact, so both endpoints are stepped unconditionally.
//! No rounding-mode state is touched, so everything here is thread safe.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntervalError {
    #[error("division by an interval containing zero: [{0:e}, {1:e}]")]
    DivisionByZero(f64, f64),
    #[error("square root of an interval with negative part: [{0:e}, {1:e}]")]
    NegativeSqrt(f64, f64),
    #[error("invalid interval endpoints [{0:e}, {1:e}]")]
    Invalid(f64, f64),
}

// Below this magnitude FMA residuals may be inexact.
const TINY: f64 = 2.004168360008973e-292; // 2^-968

#[inline]
fn two_sum_err(a: f64, b: f64, s: f64) -> f64 {
    let bb = s - a;
    (a - (s - bb)) + (b - bb)
}

#[inline]
pub(crate) fn add_down(a: f64, b: f64) -> f64 {
    let s = a + b;
    if two_sum_err(a, b, s) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub(crate) fn add_up(a: f64, b: f64) -> f64 {
    let s = a + b;
    if two_sum_err(a, b, s) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

#[inline]
fn mul_err_sign(a: f64, b: f64, p: f64) -> Option<f64> {
    if p.abs() < TINY {
        if a == 0.0 || b == 0.0 {
            Some(0.0)
        } else {
            None
        }
    } else {
        Some(a.mul_add(b, -p))
    }
}

#[inline]
pub(crate) fn mul_down(a: f64, b: f64) -> f64 {
    let p = a * b;
    match mul_err_sign(a, b, p) {
        Some(e) if e >= 0.0 => p,
        _ => p.next_down(),
    }
}

#[inline]
pub(crate) fn mul_up(a: f64, b: f64) -> f64 {
    let p = a * b;
    match mul_err_sign(a, b, p) {
        Some(e) if e <= 0.0 => p,
        _ => p.next_up(),
    }
}

// sign of (a/b - q) given the rounded quotient q
#[inline]
fn div_err_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    if a == 0.0 {
        return Some(0.0);
    }
    if q.abs() < TINY || !q.is_finite() {
        return None;
    }
    let r = (-q).mul_add(b, a);
    Some(if b > 0.0 { r } else { -r })
}

#[inline]
pub(crate) fn div_down(a: f64, b: f64) -> f64 {
    let q = a / b;
    match div_err_sign(a, b, q) {
        Some(e) if e >= 0.0 => q,
        _ => q.next_down(),
    }
}

#[inline]
pub(crate) fn div_up(a: f64, b: f64) -> f64 {
    let q = a / b;
    match div_err_sign(a, b, q) {
        Some(e) if e <= 0.0 => q,
        _ => q.next_up(),
    }
}

#[inline]
pub(crate) fn sqrt_down(x: f64) -> f64 {
    let s = x.sqrt();
    if x == 0.0 {
        return 0.0;
    }
    if x < TINY {
        return s.next_down().max(0.0);
    }
    if (-s).mul_add(s, x) < 0.0 {
        s.next_down()
    } else {
        s
    }
}

#[inline]
pub(crate) fn sqrt_up(x: f64) -> f64 {
    let s = x.sqrt();
    if x == 0.0 {
        return 0.0;
    }
    if x < TINY {
        return s.next_up();
    }
    if (-s).mul_add(s, x) > 0.0 {
        s.next_up()
    } else {
        s
    }
}

/// Closed real interval `[lo, hi]` with finite endpoints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if lo <= hi && lo.is_finite() && hi.is_finite() {
            Ok(Interval { lo, hi })
        } else {
            Err(IntervalError::Invalid(lo, hi))
        }
    }

    #[inline]
    pub fn point(x: f64) -> Self {
        debug_assert!(x.is_finite());
        Interval { lo: x, hi: x }
    }

    #[inline]
    pub(crate) fn raw(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn from_int(k: i64) -> Self {
        let x = k as f64;
        if x as i64 == k && x.abs() < 9.007199254740992e15 {
            Interval::point(x)
        } else {
            Interval::raw(x.next_down(), x.next_up())
        }
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * self.lo + 0.5 * self.hi
    }

    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo)
    }

    /// Largest absolute value in the interval.
    #[inline]
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.lo > 0.0 {
            self.lo
        } else if self.hi < 0.0 {
            -self.hi
        } else {
            0.0
        }
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0.0 && 0.0 <= self.hi
    }

    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::raw(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn abs(&self) -> Interval {
        Interval::raw(self.mig(), self.mag())
    }

    pub fn max(&self, other: &Interval) -> Interval {
        Interval::raw(self.lo.max(other.lo), self.hi.max(other.hi))
    }

    pub fn sqr(&self) -> Interval {
        let a = self.mig();
        let b = self.mag();
        Interval::raw(mul_down(a, a), mul_up(b, b))
    }

    pub fn powi(&self, k: u32) -> Interval {
        let mut acc = Interval::ONE;
        for _ in 0..k {
            acc = acc * *self;
        }
        acc
    }

    pub fn div(&self, rhs: &Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZero(rhs.lo, rhs.hi));
        }
        let c = [(self.lo, rhs.lo), (self.lo, rhs.hi), (self.hi, rhs.lo), (self.hi, rhs.hi)];
        let lo = c.iter().map(|&(a, b)| div_down(a, b)).fold(f64::INFINITY, f64::min);
        let hi = c.iter().map(|&(a, b)| div_up(a, b)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Interval::raw(lo, hi))
    }

    pub fn recip(&self) -> Result<Interval, IntervalError> {
        Interval::ONE.div(self)
    }

    pub fn sqrt(&self) -> Result<Interval, IntervalError> {
        if self.lo < 0.0 {
            return Err(IntervalError::NegativeSqrt(self.lo, self.hi));
        }
        Ok(Interval::raw(sqrt_down(self.lo), sqrt_up(self.hi)))
    }

    /// Enclosure of pi, one ulp wide.
    pub fn pi() -> Interval {
        // the double nearest to pi lies below it
        Interval::raw(std::f64::consts::PI, std::f64::consts::PI.next_up())
    }

    /// Scale by a power of two; exact away from over- and underflow.
    pub fn scale_pow2(&self, e: i32) -> Interval {
        let f = 2f64.powi(e);
        *self * Interval::point(f)
    }

    pub fn sin_cos(&self) -> (Interval, Interval) {
        sin_cos(*self)
    }

    /// Product with an exact float, cheaper than the general product.
    #[inline]
    pub fn mul_f64(&self, a: f64) -> Interval {
        if a >= 0.0 {
            Interval::raw(mul_down(a, self.lo), mul_up(a, self.hi))
        } else {
            Interval::raw(mul_down(a, self.hi), mul_up(a, self.lo))
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval::raw(add_down(self.lo, rhs.lo), add_up(self.hi, rhs.hi))
    }
}

impl Sub for Interval {
    type Output = Interval;
    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval::raw(add_down(self.lo, -rhs.hi), add_up(self.hi, -rhs.lo))
    }
}

impl Neg for Interval {
    type Output = Interval;
    #[inline]
    fn neg(self) -> Interval {
        Interval::raw(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    #[inline]
    fn mul(self, rhs: Interval) -> Interval {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        if a >= 0.0 && c >= 0.0 {
            return Interval::raw(mul_down(a, c), mul_up(b, d));
        }
        if b == a && c == d {
            return Interval::raw(mul_down(a, c), mul_up(a, c));
        }
        let lo = mul_down(a, c).min(mul_down(a, d)).min(mul_down(b, c)).min(mul_down(b, d));
        let hi = mul_up(a, c).max(mul_up(a, d)).max(mul_up(b, c)).max(mul_up(b, d));
        Interval::raw(lo, hi)
    }
}

impl AddAssign for Interval {
    #[inline]
    fn add_assign(&mut self, rhs: Interval) {
        *self = *self + rhs;
    }
}

impl SubAssign for Interval {
    #[inline]
    fn sub_assign(&mut self, rhs: Interval) {
        *self = *self - rhs;
    }
}

impl MulAssign for Interval {
    #[inline]
    fn mul_assign(&mut self, rhs: Interval) {
        *self = *self * rhs;
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

const TAYLOR_TERMS: usize = 10;

// sin and cos on |r| <= pi/4 (plus a little slack) by Taylor series with
// a Lagrange remainder.
fn sin_cos_small(r: Interval) -> (Interval, Interval) {
    let r2 = r.sqr();
    let mut s = Interval::ZERO;
    let mut c = Interval::ZERO;
    // Horner from the top; coefficient 1/(k)! built exactly as intervals
    let mut fact = vec![Interval::ONE; 2 * TAYLOR_TERMS + 3];
    for k in 1..fact.len() {
        fact[k] = fact[k - 1] * Interval::from_int(k as i64);
    }
    for k in (0..TAYLOR_TERMS).rev() {
        let sign = if k % 2 == 0 { Interval::ONE } else { -Interval::ONE };
        s = s * r2 + sign * fact[2 * k + 1].recip().expect("factorial");
        c = c * r2 + sign * fact[2 * k].recip().expect("factorial");
    }
    s = s * r;
    let rm = r.mag();
    let rem_s = Interval::point(rm).powi(2 * TAYLOR_TERMS as u32 + 1).hi();
    let rem_s = div_up(rem_s, fact[2 * TAYLOR_TERMS + 1].lo());
    let rem_c = Interval::point(rm).powi(2 * TAYLOR_TERMS as u32).hi();
    let rem_c = div_up(rem_c, fact[2 * TAYLOR_TERMS].lo());
    let s = s + Interval::raw(-rem_s, rem_s);
    let c = c + Interval::raw(-rem_c, rem_c);
    (clamp_unit(s), clamp_unit(c))
}

fn clamp_unit(x: Interval) -> Interval {
    Interval::raw(x.lo.max(-1.0), x.hi.min(1.0))
}

/// Enclosures of `(sin x, cos x)` for every `x` in the interval.
pub fn sin_cos(x: Interval) -> (Interval, Interval) {
    let full = Interval::raw(-1.0, 1.0);
    if x.width() > 0.5 || x.mag() > 1e9 {
        return (full, full);
    }
    let half_pi = Interval::pi().scale_pow2(-1);
    let k = (x.mid() / (std::f64::consts::FRAC_PI_2)).round();
    let r = x - Interval::from_int(k as i64) * half_pi;
    let (s, c) = sin_cos_small(r);
    match (k as i64).rem_euclid(4) {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

/// `(sin, cos)` of `2*pi*a/b` with the integer reduction done exactly first.
pub fn sin_cos_2pi_ratio(a: i64, b: i64) -> (Interval, Interval) {
    assert!(b > 0, "denominator must be positive");
    let a = a.rem_euclid(b);
    if a == 0 {
        return (Interval::ZERO, Interval::ONE);
    }
    if 2 * a == b {
        return (Interval::ZERO, -Interval::ONE);
    }
    if 4 * a == b {
        return (Interval::ONE, Interval::ZERO);
    }
    if 4 * a == 3 * b {
        return (-Interval::ONE, Interval::ZERO);
    }
    // fold onto [0, pi] using symmetry so the reduced argument stays small
    let (a2, flip) = if 2 * a > b { (b - a, true) } else { (a, false) };
    let theta = (Interval::pi().scale_pow2(1) * Interval::from_int(a2))
        .div(&Interval::from_int(b))
        .expect("positive denominator");
    let (s, c) = sin_cos(theta);
    if flip {
        (-s, c)
    } else {
        (s, c)
    }
}

/// Rectangular complex interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexBox {
    pub re: Interval,
    pub im: Interval,
}

impl ComplexBox {
    pub const ZERO: ComplexBox = ComplexBox {
        re: Interval::ZERO,
        im: Interval::ZERO,
    };
    pub const ONE: ComplexBox = ComplexBox {
        re: Interval::ONE,
        im: Interval::ZERO,
    };

    pub fn new(re: Interval, im: Interval) -> Self {
        ComplexBox { re, im }
    }

    pub fn point(re: f64, im: f64) -> Self {
        ComplexBox {
            re: Interval::point(re),
            im: Interval::point(im),
        }
    }

    pub fn real(re: Interval) -> Self {
        ComplexBox { re, im: Interval::ZERO }
    }

    pub fn conj(&self) -> Self {
        ComplexBox {
            re: self.re,
            im: -self.im,
        }
    }

    /// Multiplication by the imaginary unit (exact).
    pub fn mul_i(&self) -> Self {
        ComplexBox {
            re: -self.im,
            im: self.re,
        }
    }

    pub fn scale(&self, s: Interval) -> Self {
        ComplexBox {
            re: self.re * s,
            im: self.im * s,
        }
    }

    /// Product with an exact complex float.
    #[inline]
    pub fn mul_c64(&self, re: f64, im: f64) -> Self {
        ComplexBox {
            re: self.re.mul_f64(re) - self.im.mul_f64(im),
            im: self.im.mul_f64(re) + self.re.mul_f64(im),
        }
    }

    /// Upper bound on the modulus over the whole box.
    pub fn abs_upper(&self) -> f64 {
        let a = self.re.mag();
        let b = self.im.mag();
        sqrt_up(add_up(mul_up(a, a), mul_up(b, b)))
    }

    /// Lower bound on the modulus over the whole box.
    pub fn abs_lower(&self) -> f64 {
        let a = self.re.mig();
        let b = self.im.mig();
        sqrt_down(add_down(mul_down(a, a), mul_down(b, b)))
    }

    pub fn abs(&self) -> Interval {
        Interval::raw(self.abs_lower(), self.abs_upper())
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub fn contains(&self, re: f64, im: f64) -> bool {
        self.re.contains(re) && self.im.contains(im)
    }

    pub fn hull(&self, other: &ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re.hull(&other.re),
            im: self.im.hull(&other.im),
        }
    }

    /// `exp(2*pi*i*a/b)`.
    pub fn cis_2pi_ratio(a: i64, b: i64) -> Self {
        let (s, c) = sin_cos_2pi_ratio(a, b);
        ComplexBox { re: c, im: s }
    }
}

impl Add for ComplexBox {
    type Output = ComplexBox;
    #[inline]
    fn add(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl Sub for ComplexBox {
    type Output = ComplexBox;
    #[inline]
    fn sub(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl Neg for ComplexBox {
    type Output = ComplexBox;
    #[inline]
    fn neg(self) -> ComplexBox {
        ComplexBox {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Mul for ComplexBox {
    type Output = ComplexBox;
    #[inline]
    fn mul(self, rhs: ComplexBox) -> ComplexBox {
        ComplexBox {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl AddAssign for ComplexBox {
    #[inline]
    fn add_assign(&mut self, rhs: ComplexBox) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl SubAssign for ComplexBox {
    #[inline]
    fn sub_assign(&mut self, rhs: ComplexBox) {
        self.re -= rhs.re;
        self.im -= rhs.im;
    }
}

impl fmt::Display for ComplexBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + i{}", self.re, self.im)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_sum_is_tight() {
        let s = Interval::point(1.0) + Interval::point(2.0);
        assert_eq!(s, Interval::point(3.0));
    }

    #[test]
    fn inexact_sum_straddles() {
        let s = Interval::point(0.1) + Interval::point(0.2);
        assert!(s.lo() < s.hi());
        assert_eq!(s.hi(), s.lo().next_up());
    }

    #[test]
    fn symmetric_product() {
        let a = Interval::new(-1.0, 1.0).unwrap();
        let p = a * a;
        assert!(p.encloses(&a));
    }

    #[test]
    fn division_by_zero_interval() {
        let a = Interval::point(1.0);
        let b = Interval::new(-1.0, 2.0).unwrap();
        assert!(matches!(a.div(&b), Err(IntervalError::DivisionByZero(..))));
    }

    #[test]
    fn sqrt_cases() {
        assert!(Interval::point(4.0).sqrt().unwrap().contains(2.0));
        assert_eq!(Interval::ZERO.sqrt().unwrap(), Interval::ZERO);
        assert!(Interval::new(-1.0, 1.0).unwrap().sqrt().is_err());
        let r2 = Interval::point(2.0).sqrt().unwrap();
        assert!(r2.lo() * r2.lo() <= 2.0 && r2.hi() * r2.hi() >= 2.0);
    }

    #[test]
    fn pi_brackets() {
        let p = Interval::pi();
        assert!(p.lo() < p.hi());
        assert!(p.width() < 1e-15);
    }

    #[test]
    fn sin_cos_zero() {
        let (s, c) = sin_cos(Interval::ZERO);
        assert!(s.contains(0.0) && s.width() < 1e-15);
        assert!(c.contains(1.0));
    }

    #[test]
    fn sin_half_pi() {
        let (s, _) = sin_cos(Interval::pi().scale_pow2(-1));
        assert!(s.contains(1.0));
    }

    #[test]
    fn phase_six_pi() {
        // j=1, k=3, l=5 on n=5: phase 2*pi*15/5
        let z = ComplexBox::cis_2pi_ratio(15, 5);
        assert!(z.re.contains(1.0) && z.im.contains(0.0));
    }

    #[test]
    fn wide_argument_falls_back() {
        let (s, c) = sin_cos(Interval::new(0.0, 3.0).unwrap());
        assert_eq!(s, Interval::new(-1.0, 1.0).unwrap());
        assert_eq!(c, Interval::new(-1.0, 1.0).unwrap());
    }

    #[test]
    fn modulus_bounds() {
        let z = ComplexBox::point(3.0, 4.0);
        assert!(z.abs_upper() >= 5.0 && z.abs_upper() <= 5.0f64.next_up());
        let b = ComplexBox::new(Interval::new(-1.0, 1.0).unwrap(), Interval::new(-1.0, 1.0).unwrap());
        assert!(b.abs_upper() >= 2f64.sqrt());
        assert_eq!(b.abs_lower(), 0.0);
    }

    #[test]
    fn small_angle_widths() {
        for n in 3..20 {
            for a in 0..n {
                let (s, c) = sin_cos_2pi_ratio(a, n);
                assert!(s.width() <= 1e-14, "sin width at {a}/{n}");
                assert!(c.width() <= 1e-14, "cos width at {a}/{n}");
                let t = 2.0 * std::f64::consts::PI * a as f64 / n as f64;
                assert!((s.mid() - t.sin()).abs() < 1e-14);
                assert!((c.mid() - t.cos()).abs() < 1e-14);
            }
        }
    }
}
