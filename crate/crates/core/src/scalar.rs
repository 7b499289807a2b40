//! The two arithmetic backends shared by sequences, the Fourier map and its
//! Jacobian: plain `Complex64` for the solver and `ComplexBox` for proofs.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::interval::{sin_cos_2pi_ratio, ComplexBox, Interval};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Exact embedding of a floating-point complex number.
    fn from_c64(z: Complex64) -> Self;
    fn from_int(k: i64) -> Self;
    fn mul_i(self) -> Self;
    fn conj(self) -> Self;
    /// `exp(2*pi*i*a/b)`
    fn cis_2pi_ratio(a: i64, b: i64) -> Self;
    /// Rigorous enclosure of the modulus.
    fn abs_iv(self) -> Interval;
    fn mid(self) -> Complex64;
    /// Square root of a nonnegative real value.
    fn real_sqrt(self) -> Self;
    /// Reciprocal of a nonzero real value.
    fn real_recip(self) -> Self;
}

impl Scalar for Complex64 {
    #[inline]
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    #[inline]
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    #[inline]
    fn from_c64(z: Complex64) -> Self {
        z
    }
    #[inline]
    fn from_int(k: i64) -> Self {
        Complex64::new(k as f64, 0.0)
    }
    #[inline]
    fn mul_i(self) -> Self {
        Complex64::new(-self.im, self.re)
    }
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn cis_2pi_ratio(a: i64, b: i64) -> Self {
        let (s, c) = sin_cos_2pi_ratio(a, b);
        Complex64::new(c.mid(), s.mid())
    }
    fn abs_iv(self) -> Interval {
        ComplexBox::point(self.re, self.im).abs()
    }
    #[inline]
    fn mid(self) -> Complex64 {
        self
    }
    fn real_sqrt(self) -> Self {
        Complex64::new(self.re.sqrt(), 0.0)
    }
    fn real_recip(self) -> Self {
        Complex64::new(1.0 / self.re, 0.0)
    }
}

impl Scalar for ComplexBox {
    #[inline]
    fn zero() -> Self {
        ComplexBox::ZERO
    }
    #[inline]
    fn one() -> Self {
        ComplexBox::ONE
    }
    #[inline]
    fn from_c64(z: Complex64) -> Self {
        ComplexBox::point(z.re, z.im)
    }
    fn from_int(k: i64) -> Self {
        ComplexBox::real(Interval::from_int(k))
    }
    #[inline]
    fn mul_i(self) -> Self {
        ComplexBox::mul_i(&self)
    }
    #[inline]
    fn conj(self) -> Self {
        ComplexBox::conj(&self)
    }
    fn cis_2pi_ratio(a: i64, b: i64) -> Self {
        ComplexBox::cis_2pi_ratio(a, b)
    }
    fn abs_iv(self) -> Interval {
        self.abs()
    }
    fn mid(self) -> Complex64 {
        Complex64::new(self.re.mid(), self.im.mid())
    }
    fn real_sqrt(self) -> Self {
        ComplexBox::real(self.re.sqrt().expect("nonnegative argument"))
    }
    fn real_recip(self) -> Self {
        ComplexBox::real(self.re.recip().expect("nonzero argument"))
    }
}
