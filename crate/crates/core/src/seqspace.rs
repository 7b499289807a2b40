//! Finitely supported two-sided Fourier coefficient sequences and the
//! weighted norm `sum |c_l| nu^|l|`.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{add_up, mul_up, ComplexBox, Interval};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error("tail operator needs m >= 1")]
    ZeroTail,
    #[error("mode {ell} is not in the finite part |l| < {m}")]
    NotFinite { ell: i64, m: usize },
    #[error("decay weight must be >= 1, got {0}")]
    BadWeight(f64),
}

/// Decay weight of the sequence norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weight(f64);

impl Weight {
    pub fn new(nu: f64) -> Result<Self, SeqError> {
        if nu.is_finite() && nu >= 1.0 {
            Ok(Weight(nu))
        } else {
            Err(SeqError::BadWeight(nu))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Enclosures of `nu^0 .. nu^n`.
    pub fn powers(&self, n: usize) -> Vec<Interval> {
        let nu = Interval::point(self.0);
        let mut out = Vec::with_capacity(n + 1);
        let mut acc = Interval::ONE;
        out.push(acc);
        for _ in 0..n {
            acc = acc * nu;
            out.push(acc);
        }
        out
    }
}

/// Coefficients `c_l` for `|l| <= support`, zero beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq<T> {
    support: usize,
    coeffs: Vec<T>,
}

pub type SeqVec<T> = Vec<CoeffSeq<T>>;

impl<T: Scalar> CoeffSeq<T> {
    pub fn zeros(support: usize) -> Self {
        CoeffSeq {
            support,
            coeffs: vec![T::zero(); 2 * support + 1],
        }
    }

    /// Delta at mode zero.
    pub fn constant(c: T) -> Self {
        CoeffSeq {
            support: 0,
            coeffs: vec![c],
        }
    }

    /// From coefficients ordered `l = -N..=N`; the length must be odd.
    pub fn from_vec(coeffs: Vec<T>) -> Self {
        assert!(coeffs.len() % 2 == 1, "coefficient vector must have odd length");
        CoeffSeq {
            support: coeffs.len() / 2,
            coeffs,
        }
    }

    #[inline]
    pub fn support(&self) -> usize {
        self.support
    }

    #[inline]
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    #[inline]
    pub fn coeffs_mut(&mut self) -> &mut [T] {
        &mut self.coeffs
    }

    #[inline]
    pub fn get(&self, ell: i64) -> T {
        if ell.unsigned_abs() as usize > self.support {
            T::zero()
        } else {
            self.coeffs[(ell + self.support as i64) as usize]
        }
    }

    /// Panics outside the stored support.
    #[inline]
    pub fn set(&mut self, ell: i64, c: T) {
        let i = ell + self.support as i64;
        self.coeffs[i as usize] = c;
    }

    pub fn modes(&self) -> impl Iterator<Item = (i64, T)> + '_ {
        let n = self.support as i64;
        self.coeffs.iter().enumerate().map(move |(i, &c)| (i as i64 - n, c))
    }

    /// Re-store with a different support radius, truncating or padding.
    pub fn with_support(&self, support: usize) -> Self {
        let mut out = CoeffSeq::zeros(support);
        let s = support.min(self.support) as i64;
        for ell in -s..=s {
            out.set(ell, self.get(ell));
        }
        out
    }

    /// Keep modes `|l| < m`.
    pub fn project(&self, m: usize) -> Self {
        assert!(m >= 1);
        self.with_support(m - 1)
    }

    /// Embed a `2m-1` vector as a sequence with zero tail.
    pub fn include(v: &[T], m: usize) -> Self {
        assert_eq!(v.len(), 2 * m - 1);
        CoeffSeq::from_vec(v.to_vec())
    }

    pub fn convolve(&self, other: &CoeffSeq<T>) -> CoeffSeq<T> {
        let mut out = CoeffSeq::zeros(self.support + other.support);
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == T::zero() {
                continue;
            }
            for (k, &b) in other.coeffs.iter().enumerate() {
                out.coeffs[i + k] += a * b;
            }
        }
        out
    }

    /// Only the coefficient of mode `ell` of the convolution.
    pub fn convolve_at(&self, other: &CoeffSeq<T>, ell: i64) -> T {
        let mut acc = T::zero();
        for (k1, a) in self.modes() {
            let b = other.get(ell - k1);
            acc += a * b;
        }
        acc
    }

    pub fn differentiate(&self) -> Self {
        let mut out = self.clone();
        let n = self.support as i64;
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            *c = (*c * T::from_int(i as i64 - n)).mul_i();
        }
        out
    }

    /// Tail inverse of `D`: `c_l / (i l)` for `|l| >= m`, zero elsewhere.
    pub fn solve_d_tail(&self, m: usize) -> Result<Self, SeqError>
    where
        T: TailDivide,
    {
        if m == 0 {
            return Err(SeqError::ZeroTail);
        }
        let mut out = CoeffSeq::zeros(self.support);
        for (ell, c) in self.modes() {
            if ell.unsigned_abs() as usize >= m {
                out.set(ell, T::div_i_ell(c, ell));
            }
        }
        Ok(out)
    }

    /// `sigma(c)_l = conj(c_{-l})`.
    pub fn conj_reflect(&self) -> Self {
        let mut out = self.clone();
        out.coeffs.reverse();
        for c in out.coeffs.iter_mut() {
            *c = c.conj();
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c = *c * s;
        }
        out
    }

    /// Sum of all coefficients (the value at `t = 0`).
    pub fn sum(&self) -> T {
        let mut acc = T::zero();
        for &c in &self.coeffs {
            acc += c;
        }
        acc
    }

    pub fn axpy(&mut self, s: T, x: &CoeffSeq<T>) {
        assert!(x.support <= self.support, "axpy target too short");
        let off = self.support - x.support;
        for (i, &c) in x.coeffs.iter().enumerate() {
            self.coeffs[off + i] += s * c;
        }
    }

    /// Rigorous enclosure of the weighted norm.
    pub fn norm_nu_iv(&self, nu: Weight) -> Interval {
        let pw = nu.powers(self.support);
        let mut acc = Interval::ZERO;
        for (ell, c) in self.modes() {
            acc += c.abs_iv() * pw[ell.unsigned_abs() as usize];
        }
        acc
    }

    /// Upper bound of the weighted norm.
    pub fn norm_nu_upper(&self, nu: Weight) -> f64 {
        self.norm_nu_iv(nu).hi()
    }

    pub fn mid(&self) -> CoeffSeq<Complex64> {
        CoeffSeq {
            support: self.support,
            coeffs: self.coeffs.iter().map(|c| c.mid()).collect(),
        }
    }
}

impl CoeffSeq<Complex64> {
    pub fn norm_nu(&self, nu: Weight) -> f64 {
        let mut acc = 0.0;
        for (ell, c) in self.modes() {
            acc += c.norm() * nu.value().powi(ell.unsigned_abs() as i32);
        }
        acc
    }

    pub fn evaluate(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (ell, c) in self.modes() {
            acc += c * Complex64::from_polar(1.0, ell as f64 * t);
        }
        acc
    }

    pub fn to_boxes(&self) -> CoeffSeq<ComplexBox> {
        CoeffSeq {
            support: self.support,
            coeffs: self.coeffs.iter().map(|&c| ComplexBox::from_c64(c)).collect(),
        }
    }

    /// Largest modulus of the coefficients.
    pub fn sup_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Division by `i*l`, exact where possible.
pub trait TailDivide: Scalar {
    fn div_i_ell(c: Self, ell: i64) -> Self;
}

impl TailDivide for Complex64 {
    fn div_i_ell(c: Self, ell: i64) -> Self {
        // c / (i l) = -i c / l
        Complex64::new(c.im / ell as f64, -c.re / ell as f64)
    }
}

impl TailDivide for ComplexBox {
    fn div_i_ell(c: Self, ell: i64) -> Self {
        let l = Interval::from_int(ell);
        ComplexBox::new(c.im.div(&l).expect("nonzero"), (-c.re).div(&l).expect("nonzero"))
    }
}

impl<T: Scalar> Add for &CoeffSeq<T> {
    type Output = CoeffSeq<T>;
    fn add(self, rhs: &CoeffSeq<T>) -> CoeffSeq<T> {
        let n = self.support.max(rhs.support);
        let mut out = self.with_support(n);
        out.axpy(T::one(), rhs);
        out
    }
}

impl<T: Scalar> Sub for &CoeffSeq<T> {
    type Output = CoeffSeq<T>;
    fn sub(self, rhs: &CoeffSeq<T>) -> CoeffSeq<T> {
        let n = self.support.max(rhs.support);
        let mut out = self.with_support(n);
        out.axpy(-T::one(), rhs);
        out
    }
}

/// Upper bound of `Psi_l(a)`: the largest `|a_{l-s}| / nu^|s|` over tail
/// indices `s` with `|s| >= m` that can reach mode `l`.
pub fn psi_bound<T: Scalar>(abar: &CoeffSeq<T>, ell: i64, m: usize, nu: Weight) -> Result<f64, SeqError> {
    let mi = m as i64;
    if ell.abs() >= mi {
        return Err(SeqError::NotFinite { ell, m });
    }
    let n = abar.support() as i64;
    let pw = nu.powers((ell.abs() + n) as usize);
    let mut best = 0.0f64;
    let mut visit = |s: i64| {
        let a = abar.get(ell - s).abs_iv().hi();
        if a > 0.0 {
            let v = Interval::point(a).div(&pw[s.unsigned_abs() as usize]).expect("positive").hi();
            best = best.max(v);
        }
    };
    for s in (ell - n)..=(-mi) {
        visit(s);
    }
    for s in mi..=(ell + n) {
        visit(s);
    }
    Ok(best)
}

/// All `Psi_l(a)` for `|l| < m`, indexed by `l + m - 1`.
pub fn psi_bounds<T: Scalar>(abar: &CoeffSeq<T>, m: usize, nu: Weight) -> Vec<f64> {
    let mi = m as i64;
    (-(mi - 1)..mi)
        .map(|ell| psi_bound(abar, ell, m, nu).expect("finite mode"))
        .collect()
}

/// Upper-rounded sum of nonnegative floats.
pub fn sum_up(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(0.0, add_up)
}

/// Upper-rounded product of nonnegative floats.
pub fn prod_up(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().fold(1.0, mul_up)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_of_delta_and_pair() {
        let d = CoeffSeq::constant(c(1.0, 0.0));
        assert_eq!(d.norm_nu(Weight::new(1.03).unwrap()), 1.0);
        let p = CoeffSeq::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(p.norm_nu(Weight::new(2.0).unwrap()), 4.0);
        assert!(p.norm_nu_iv(Weight::new(2.0).unwrap()).contains(4.0));
    }

    #[test]
    fn convolution_examples() {
        let a = CoeffSeq::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        let sq = a.convolve(&a);
        assert_eq!(sq.get(0), c(1.0, 0.0));
        assert_eq!(sq.get(1), c(2.0, 0.0));
        assert_eq!(sq.get(2), c(1.0, 0.0));
        assert_eq!(sq.support(), 2);
        let b = CoeffSeq::from_vec(vec![c(2.0, 0.0), c(-1.0, 3.0), c(0.5, 0.0)]);
        let d = CoeffSeq::constant(c(1.0, 0.0));
        assert_eq!(d.convolve(&b).with_support(1), b);
    }

    #[test]
    fn derivative_examples() {
        let d = CoeffSeq::constant(c(1.0, 0.0)).differentiate();
        assert_eq!(d.get(0), c(0.0, 0.0));
        let mut e = CoeffSeq::zeros(2);
        e.set(1, c(1.0, 0.0));
        assert_eq!(e.differentiate().get(1), c(0.0, 1.0));
        let mut f = CoeffSeq::zeros(2);
        f.set(-2, c(1.0, 0.0));
        assert_eq!(f.differentiate().get(-2), c(0.0, -2.0));
    }

    #[test]
    fn tail_solve() {
        let mut t = CoeffSeq::zeros(6);
        t.set(5, c(1.0, 0.0));
        let s = t.solve_d_tail(5).unwrap();
        assert!((s.get(5) - c(0.0, -0.2)).norm() < 1e-16);
        assert_eq!(CoeffSeq::<Complex64>::zeros(3).solve_d_tail(2).unwrap(), CoeffSeq::zeros(3));
        assert_eq!(t.solve_d_tail(0), Err(SeqError::ZeroTail));
    }

    #[test]
    fn projection_cuts() {
        let mut s = CoeffSeq::zeros(4);
        s.set(3, c(1.0, 0.0));
        assert_eq!(s.project(3), CoeffSeq::zeros(2));
        let d = CoeffSeq::constant(c(1.0, 0.0));
        assert_eq!(d.project(1), d);
    }

    #[test]
    fn reflection() {
        let even = CoeffSeq::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        assert_eq!(even.conj_reflect(), even);
        let mut s = CoeffSeq::zeros(1);
        s.set(1, c(0.0, 1.0));
        assert_eq!(s.conj_reflect().get(-1), c(0.0, -1.0));
    }

    #[test]
    fn evaluation() {
        let d = CoeffSeq::constant(c(1.0, 0.0));
        assert_eq!(d.evaluate(0.7), c(1.0, 0.0));
        let cos = CoeffSeq::from_vec(vec![c(0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)]);
        assert!((cos.evaluate(0.0) - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn psi_examples() {
        let nu = Weight::new(1.3).unwrap();
        let d = CoeffSeq::constant(c(1.0, 0.0));
        assert_eq!(psi_bound(&d, 0, 1, nu).unwrap(), 0.0);
        let a = CoeffSeq::from_vec(vec![c(1.0, 0.0); 3]);
        let v = psi_bound(&a, 1, 2, nu).unwrap();
        assert!((v - 1.0 / 1.69).abs() < 1e-15 && v >= 1.0 / 1.69);
        assert!(psi_bound(&a, 2, 2, nu).is_err());
    }

    #[test]
    fn bad_weight() {
        assert!(Weight::new(0.5).is_err());
        assert!(Weight::new(f64::NAN).is_err());
    }
}
