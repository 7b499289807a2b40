//! Problem definition: parameters and resonance arithmetic, the delay
//! rotations `M_j`, the polynomial Fourier map `F = (eta, gamma, f, g, h)`
//! and its Jacobian on the Galerkin projection.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{ComplexBox, Interval};
use crate::scalar::Scalar;
use crate::seqspace::{CoeffSeq, SeqVec, Weight};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProblemError {
    #[error("need n >= 3 bodies, got {0}")]
    TooFewBodies(usize),
    #[error("symmetry index k must lie in 1..n-1, got k={k} for n={n}")]
    BadSymmetry { n: usize, k: usize },
    #[error("p and q must be positive")]
    NonPositiveResonance,
    #[error("p={p} and q={q} are not coprime")]
    NotCoprime { p: u64, q: u64 },
    #[error("p:q = {p}:{q} is not a simple choreography resonance for n={n}, k={k}")]
    NotSimple { n: usize, k: usize, p: u64, q: u64 },
    #[error("need m >= 2 Galerkin modes, got {0}")]
    TooFewModes(usize),
    #[error("decay weight must be >= 1, got {0}")]
    BadWeight(f64),
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Parameters of one periodic-orbit problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub m: usize,
    pub nu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResonanceClass {
    /// All bodies trace one closed curve in the inertial frame.
    SimpleChoreography,
    /// Periodic in the inertial frame but the bodies trace rotated copies.
    Multiple,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resonance {
    pub class: ResonanceClass,
    pub k_tilde: i64,
    pub h: usize,
}

pub fn compute_s1(n: usize) -> f64 {
    let zeta = 2.0 * std::f64::consts::PI / n as f64;
    0.25 * (1..n).map(|j| 1.0 / (j as f64 * zeta / 2.0).sin()).sum::<f64>()
}

pub fn compute_s1_iv(n: usize) -> Interval {
    let mut acc = Interval::ZERO;
    for j in 1..n {
        // sin(j*zeta/2) = sin(2*pi*j/(2n))
        let (s, _) = crate::interval::sin_cos_2pi_ratio(j as i64, 2 * n as i64);
        acc += s.recip().expect("positive sine");
    }
    acc * Interval::point(0.25)
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    if m == 1 {
        return 0;
    }
    let e = a.rem_euclid(m).extended_gcd(&m);
    e.x.rem_euclid(m)
}

pub fn check_resonance(n: usize, k: usize, p: u64, q: u64) -> Result<Resonance, ProblemError> {
    if p == 0 || q == 0 {
        return Err(ProblemError::NonPositiveResonance);
    }
    let (ni, ki, pi, qi) = (n as i64, k as i64, p as i64, q as i64);
    let h = n.gcd(&k);
    let d = ki * qi - pi;
    if d == 0 {
        return Ok(Resonance {
            class: ResonanceClass::SimpleChoreography,
            k_tilde: ki,
            h,
        });
    }
    if d % ni != 0 {
        return Ok(Resonance {
            class: ResonanceClass::Multiple,
            k_tilde: ki,
            h,
        });
    }
    if p.gcd(&q) != 1 {
        return Err(ProblemError::NotCoprime { p, q });
    }
    let qt = mod_inverse(qi, pi);
    Ok(Resonance {
        class: ResonanceClass::SimpleChoreography,
        k_tilde: ki - d * qt,
        h,
    })
}

impl ProblemParams {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.n < 3 {
            return Err(ProblemError::TooFewBodies(self.n));
        }
        if self.k == 0 || self.k >= self.n {
            return Err(ProblemError::BadSymmetry { n: self.n, k: self.k });
        }
        if self.m < 2 {
            return Err(ProblemError::TooFewModes(self.m));
        }
        if !(self.nu.is_finite() && self.nu >= 1.0) {
            return Err(ProblemError::BadWeight(self.nu));
        }
        check_resonance(self.n, self.k, self.p, self.q)?;
        Ok(())
    }

    pub fn weight(&self) -> Weight {
        Weight::new(self.nu).expect("validated weight")
    }

    pub fn zeta(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.n as f64
    }

    pub fn s1(&self) -> f64 {
        compute_s1(self.n)
    }

    pub fn omega(&self) -> f64 {
        self.s1().sqrt() * self.p as f64 / self.q as f64
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega()
    }

    pub fn resonance(&self) -> Result<Resonance, ProblemError> {
        check_resonance(self.n, self.k, self.p, self.q)
    }

    /// Galerkin dimension `2m(n+5) - 3`.
    pub fn dim(&self) -> usize {
        2 * self.m * (self.n + 5) - 3
    }

    pub fn layout(&self) -> Layout {
        Layout { n: self.n, m: self.m }
    }
}

/// Index bookkeeping for the packed Galerkin vector.
///
/// Scalars come first (`lambda`, then `alpha`), followed by the `n+5`
/// sequences `u1..u3, v1..v3, w1..w_{n-1}`, each stored for modes
/// `-(m-1)..=(m-1)`. Equations use the same order with
/// `(eta, gamma, f, g, h)` in place of `(lambda, alpha, u, v, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n: usize,
    pub m: usize,
}

impl Layout {
    pub fn dim(&self) -> usize {
        self.n + 2 + self.num_seqs() * self.modes()
    }
    pub fn modes(&self) -> usize {
        2 * self.m - 1
    }
    pub fn num_scalars(&self) -> usize {
        self.n + 2
    }
    pub fn num_seqs(&self) -> usize {
        self.n + 5
    }
    #[inline]
    pub fn lambda(&self, i: usize) -> usize {
        i
    }
    #[inline]
    pub fn alpha(&self, j: usize) -> usize {
        3 + j
    }
    /// Sequence component `c` (0..n+5) at mode `ell`.
    #[inline]
    pub fn seq(&self, c: usize, ell: i64) -> usize {
        self.n + 2 + c * self.modes() + (ell + self.m as i64 - 1) as usize
    }
    #[inline]
    pub fn u(&self, p: usize, ell: i64) -> usize {
        self.seq(p, ell)
    }
    #[inline]
    pub fn v(&self, p: usize, ell: i64) -> usize {
        self.seq(3 + p, ell)
    }
    #[inline]
    pub fn w(&self, j: usize, ell: i64) -> usize {
        self.seq(6 + j, ell)
    }
    /// Which block an index belongs to: `Scalar(i)` or `Seq(c, ell)`.
    pub fn locate(&self, idx: usize) -> Slot {
        if idx < self.num_scalars() {
            Slot::Scalar(idx)
        } else {
            let r = idx - self.num_scalars();
            let c = r / self.modes();
            let ell = (r % self.modes()) as i64 - (self.m as i64 - 1);
            Slot::Seq(c, ell)
        }
    }
    pub fn modes_range(&self) -> std::ops::RangeInclusive<i64> {
        -(self.m as i64 - 1)..=(self.m as i64 - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Scalar(usize),
    Seq(usize, i64),
}

/// Unknown `x = (lambda, alpha, u, v, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateX<T> {
    pub lambda: [T; 3],
    pub alpha: Vec<T>,
    pub u: SeqVec<T>,
    pub v: SeqVec<T>,
    pub w: SeqVec<T>,
}

impl<T: Scalar> StateX<T> {
    pub fn zeros(n: usize, m: usize) -> Self {
        StateX {
            lambda: [T::zero(); 3],
            alpha: vec![T::zero(); n - 1],
            u: vec![CoeffSeq::zeros(m - 1); 3],
            v: vec![CoeffSeq::zeros(m - 1); 3],
            w: vec![CoeffSeq::zeros(m - 1); n - 1],
        }
    }

    pub fn n(&self) -> usize {
        self.alpha.len() + 1
    }

    fn seqs(&self) -> impl Iterator<Item = &CoeffSeq<T>> {
        self.u.iter().chain(self.v.iter()).chain(self.w.iter())
    }

    fn seqs_mut(&mut self) -> impl Iterator<Item = &mut CoeffSeq<T>> {
        self.u.iter_mut().chain(self.v.iter_mut()).chain(self.w.iter_mut())
    }

    /// Largest support radius among the sequences.
    pub fn support(&self) -> usize {
        self.seqs().map(|s| s.support()).max().unwrap_or(0)
    }

    /// Pack onto modes `|l| < m` (truncating anything beyond).
    pub fn to_vec(&self, m: usize) -> Vec<T> {
        let lay = Layout { n: self.n(), m };
        let mut out = vec![T::zero(); lay.dim()];
        out[..3].copy_from_slice(&self.lambda);
        out[3..3 + self.alpha.len()].copy_from_slice(&self.alpha);
        for (c, s) in self.seqs().enumerate() {
            for ell in lay.modes_range() {
                out[lay.seq(c, ell)] = s.get(ell);
            }
        }
        out
    }

    pub fn from_vec(x: &[T], n: usize, m: usize) -> Self {
        let lay = Layout { n, m };
        assert_eq!(x.len(), lay.dim(), "packed state has the wrong length");
        let mut st = StateX::zeros(n, m);
        st.lambda.copy_from_slice(&x[..3]);
        st.alpha.copy_from_slice(&x[3..n + 2]);
        for (c, s) in st.seqs_mut().enumerate() {
            let a = lay.seq(c, -(m as i64 - 1));
            s.coeffs_mut().copy_from_slice(&x[a..a + lay.modes()]);
        }
        st
    }

    pub fn with_support(&self, support: usize) -> Self {
        let mut out = self.clone();
        for s in out.seqs_mut() {
            *s = s.with_support(support);
        }
        out
    }

    /// Norm on `X`: the max of scalar moduli and sequence norms.
    pub fn norm_x_iv(&self, nu: Weight) -> Interval {
        let mut best = Interval::ZERO;
        for &c in self.lambda.iter().chain(self.alpha.iter()) {
            best = best.max(&c.abs_iv());
        }
        for s in self.seqs() {
            best = best.max(&s.norm_nu_iv(nu));
        }
        best
    }

    /// Conjugate reflection on every sequence and conjugation of scalars.
    pub fn conj_reflect(&self) -> Self {
        let mut out = self.clone();
        for c in out.lambda.iter_mut().chain(out.alpha.iter_mut()) {
            *c = c.conj();
        }
        for s in out.seqs_mut() {
            *s = s.conj_reflect();
        }
        out
    }

    pub fn mid(&self) -> StateX<Complex64> {
        StateX {
            lambda: [self.lambda[0].mid(), self.lambda[1].mid(), self.lambda[2].mid()],
            alpha: self.alpha.iter().map(|c| c.mid()).collect(),
            u: self.u.iter().map(|s| s.mid()).collect(),
            v: self.v.iter().map(|s| s.mid()).collect(),
            w: self.w.iter().map(|s| s.mid()).collect(),
        }
    }
}

impl StateX<Complex64> {
    pub fn norm_x(&self, nu: Weight) -> f64 {
        let mut best = 0.0f64;
        for c in self.lambda.iter().chain(self.alpha.iter()) {
            best = best.max(c.norm());
        }
        for s in self.seqs() {
            best = best.max(s.norm_nu(nu));
        }
        best
    }

    /// Largest deviation from the real subspace.
    pub fn realness_defect(&self) -> f64 {
        let r = self.conj_reflect();
        let a = self.to_vec(self.support() + 1);
        let b = r.to_vec(self.support() + 1);
        a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// Project onto the real subspace by averaging with the reflection.
    pub fn symmetrize(&mut self) {
        let r = self.conj_reflect();
        for (c, d) in self.lambda.iter_mut().zip(r.lambda.iter()) {
            *c = (*c + d) * 0.5;
        }
        for (c, d) in self.alpha.iter_mut().zip(r.alpha.iter()) {
            *c = (*c + d) * 0.5;
        }
        for (s, t) in self.seqs_mut().zip(r.seqs()) {
            for (c, d) in s.coeffs_mut().iter_mut().zip(t.coeffs()) {
                *c = (*c + d) * 0.5;
            }
        }
    }

    pub fn to_boxes(&self) -> StateX<ComplexBox> {
        StateX {
            lambda: self.lambda.map(ComplexBox::from_c64),
            alpha: self.alpha.iter().map(|&c| ComplexBox::from_c64(c)).collect(),
            u: self.u.iter().map(|s| s.to_boxes()).collect(),
            v: self.v.iter().map(|s| s.to_boxes()).collect(),
            w: self.w.iter().map(|s| s.to_boxes()).collect(),
        }
    }
}

/// Phase-condition reference orbit.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOrbit<T> {
    pub utilde: SeqVec<T>,
}

impl<T: Scalar> ReferenceOrbit<T> {
    /// Leading `m - 1` modes (`|l| < m - 1`) of the given orbit.
    pub fn from_orbit(u: &SeqVec<T>, m: usize) -> Self {
        ReferenceOrbit {
            utilde: u.iter().map(|s| s.project(m - 1)).collect(),
        }
    }

    pub fn support(&self) -> usize {
        self.utilde.iter().map(|s| s.support()).max().unwrap_or(0)
    }

    pub fn to_boxes(&self) -> ReferenceOrbit<ComplexBox> {
        ReferenceOrbit {
            utilde: self.utilde.iter().map(|s| s.mid().to_boxes()).collect(),
        }
    }
}

/// Output of the Fourier map, shaped like `StateX` with grown supports.
#[derive(Debug, Clone, PartialEq)]
pub struct YVec<T> {
    pub eta: [T; 3],
    pub gamma: Vec<T>,
    pub f: SeqVec<T>,
    pub g: SeqVec<T>,
    pub h: SeqVec<T>,
}

impl<T: Scalar> YVec<T> {
    /// Galerkin projection packed like `StateX::to_vec`.
    pub fn to_vec(&self, m: usize) -> Vec<T> {
        let st = StateX {
            lambda: self.eta,
            alpha: self.gamma.clone(),
            u: self.f.clone(),
            v: self.g.clone(),
            w: self.h.clone(),
        };
        st.to_vec(m)
    }

    pub fn seqs(&self) -> impl Iterator<Item = &CoeffSeq<T>> {
        self.f.iter().chain(self.g.iter()).chain(self.h.iter())
    }

    pub fn scalars(&self) -> impl Iterator<Item = &T> {
        self.eta.iter().chain(self.gamma.iter())
    }

    pub fn sup_norm(&self) -> f64 {
        let mut best = 0.0f64;
        for c in self.scalars() {
            best = best.max(c.abs_iv().hi());
        }
        for s in self.seqs() {
            for &c in s.coeffs() {
                best = best.max(c.abs_iv().hi());
            }
        }
        best
    }
}

/// Problem constants evaluated in one arithmetic backend.
#[derive(Debug, Clone)]
pub struct Problem<T> {
    pub params: ProblemParams,
    pub s1: T,
    pub sqrt_s1: T,
    pub omega: T,
    /// `(cos j zeta, sin j zeta)` for `j = 0..n`
    rot: Vec<(T, T)>,
    /// `exp(2 pi i r / n)` for `r = 0..n`
    phase: Vec<T>,
}

pub type Mat3<T> = [[T; 3]; 3];

impl Problem<Complex64> {
    pub fn new(params: ProblemParams) -> Self {
        let s1 = compute_s1_iv(params.n).mid();
        Problem::build(params, Complex64::new(s1, 0.0))
    }

    /// Same problem at a frequency off the resonance, for continuation.
    pub fn with_omega(params: ProblemParams, omega: f64) -> Self {
        let mut pr = Problem::new(params);
        pr.omega = Complex64::new(omega, 0.0);
        pr
    }
}

impl Problem<ComplexBox> {
    pub fn new_rigorous(params: ProblemParams) -> Self {
        Problem::build(params, ComplexBox::real(compute_s1_iv(params.n)))
    }
}

impl<T: Scalar> Problem<T> {
    fn build(params: ProblemParams, s1: T) -> Self {
        let n = params.n as i64;
        let sqrt_s1 = s1.real_sqrt();
        let ratio = T::from_int(params.p as i64) * T::from_int(params.q as i64).real_recip();
        let omega = sqrt_s1 * ratio;
        let rot = (0..n)
            .map(|j| {
                let z = T::cis_2pi_ratio(j, n);
                // split into real and imaginary parts as scalars
                let c = (z + z.conj()) * half::<T>();
                let s = (z - z.conj()) * half::<T>();
                (c, s.mul_i() * T::from_int(-1))
            })
            .collect();
        let phase = (0..n).map(|r| T::cis_2pi_ratio(r, n)).collect();
        Problem {
            params,
            s1,
            sqrt_s1,
            omega,
            rot,
            phase,
        }
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    pub fn layout(&self) -> Layout {
        self.params.layout()
    }

    /// `exp(i j k l zeta)` with the product reduced modulo `n` exactly.
    #[inline]
    pub fn phase(&self, j: usize, ell: i64) -> T {
        let n = self.params.n as i64;
        let r = ((j as i64 * self.params.k as i64 % n) * ell.rem_euclid(n)).rem_euclid(n);
        self.phase[r as usize]
    }

    /// `M_{j l}`.
    pub fn mj(&self, j: usize, ell: i64) -> Mat3<T> {
        let ph = self.phase(j, ell);
        let (c, s) = self.rot[j % self.params.n];
        let one = T::one();
        let z = T::zero();
        [[one - ph * c, ph * s, z], [-(ph * s), one - ph * c, z], [z, z, one - ph]]
    }

    /// `(M_j u)_l = M_{jl} u_l` component-wise.
    pub fn apply_mj(&self, u: &SeqVec<T>, j: usize) -> SeqVec<T> {
        let n = u.iter().map(|s| s.support()).max().unwrap_or(0);
        let mut out = vec![CoeffSeq::zeros(n); 3];
        for ell in -(n as i64)..=(n as i64) {
            let m = self.mj(j, ell);
            let x = [u[0].get(ell), u[1].get(ell), u[2].get(ell)];
            for p in 0..3 {
                let mut acc = T::zero();
                for q in 0..3 {
                    acc += m[p][q] * x[q];
                }
                out[p].set(ell, acc);
            }
        }
        out
    }

    pub fn eta(&self, u: &SeqVec<T>, r: &ReferenceOrbit<T>) -> [T; 3] {
        let ut = &r.utilde;
        let e1 = -u[0].convolve_at(&ut[1], 0) + u[1].convolve_at(&ut[0], 0);
        let mut e2 = T::zero();
        for p in 0..3 {
            e2 += u[p].convolve_at(&ut[p].differentiate(), 0);
        }
        [e1, e2, u[2].get(0)]
    }

    pub fn gamma(&self, u: &SeqVec<T>, w: &SeqVec<T>) -> Vec<T> {
        (1..self.n())
            .map(|j| {
                let mu = self.apply_mj(u, j);
                let ww = w[j - 1].sum();
                let mut acc = T::zero();
                for p in 0..3 {
                    let s = mu[p].sum();
                    acc += s * s;
                }
                ww * ww * acc - T::one()
            })
            .collect()
    }

    pub fn map_f(&self, u: &SeqVec<T>, v: &SeqVec<T>) -> SeqVec<T> {
        (0..3).map(|p| &u[p].differentiate() - &v[p]).collect()
    }

    pub fn map_g(&self, lambda: &[T; 3], u: &SeqVec<T>, v: &SeqVec<T>, w: &SeqVec<T>) -> SeqVec<T> {
        let om = self.omega;
        let om2 = om * om;
        let c2 = T::from_int(2) * om * self.sqrt_s1;
        let nu = u.iter().chain(v.iter()).map(|s| s.support()).max().unwrap_or(0);
        let nw = w.iter().map(|s| s.support()).max().unwrap_or(0);
        let big = nu + 3 * nw;
        let mut g: SeqVec<T> = (0..3).map(|p| v[p].differentiate().scale(om2).with_support(big)).collect();
        // 2 w sqrt(s1) Jv - s1 I u + lambda1 J u + lambda2 v
        g[0].axpy(-c2, &v[1]);
        g[1].axpy(c2, &v[0]);
        g[0].axpy(-self.s1, &u[0]);
        g[1].axpy(-self.s1, &u[1]);
        g[0].axpy(-lambda[0], &u[1]);
        g[1].axpy(lambda[0], &u[0]);
        for p in 0..3 {
            g[p].axpy(lambda[1], &v[p]);
        }
        let c = g[2].get(0) + lambda[2];
        g[2].set(0, c);
        for j in 1..self.n() {
            let wj = &w[j - 1];
            let w3 = wj.convolve(wj).convolve(wj);
            let mu = self.apply_mj(u, j);
            for p in 0..3 {
                g[p].axpy(T::one(), &mu[p].convolve(&w3));
            }
        }
        g
    }

    pub fn map_h(&self, alpha: &[T], u: &SeqVec<T>, v: &SeqVec<T>, w: &SeqVec<T>) -> SeqVec<T> {
        (1..self.n())
            .map(|j| {
                let wj = &w[j - 1];
                let w3 = wj.convolve(wj).convolve(wj);
                let mu = self.apply_mj(u, j);
                let mv = self.apply_mj(v, j);
                let mut pp = mu[0].convolve(&mv[0]);
                pp.axpy(T::one(), &mu[1].convolve(&mv[1]));
                pp.axpy(T::one(), &mu[2].convolve(&mv[2]));
                let mut h = w3.convolve(&pp);
                h.axpy(alpha[j - 1], &w3);
                h.axpy(T::one(), &wj.differentiate());
                h
            })
            .collect()
    }

    pub fn fourier_map(&self, x: &StateX<T>, r: &ReferenceOrbit<T>) -> YVec<T> {
        YVec {
            eta: self.eta(&x.u, r),
            gamma: self.gamma(&x.u, &x.w),
            f: self.map_f(&x.u, &x.v),
            g: self.map_g(&x.lambda, &x.u, &x.v, &x.w),
            h: self.map_h(&x.alpha, &x.u, &x.v, &x.w),
        }
    }

    /// Projected map `F^(m)` packed as a vector.
    pub fn galerkin_map(&self, x: &StateX<T>, r: &ReferenceOrbit<T>) -> Vec<T> {
        self.fourier_map(&x.with_support(self.params.m - 1), r).to_vec(self.params.m)
    }

    /// Exact derivative of `F^(m)` at `x` (supported within `m`).
    pub fn jacobian_galerkin(&self, x: &StateX<T>, r: &ReferenceOrbit<T>) -> DMatrix<T> {
        let lay = self.layout();
        let m = self.params.m;
        let mi = m as i64;
        let n = self.n();
        let dim = lay.dim();
        let x = x.with_support(m - 1);
        let mut jac = DMatrix::from_element(dim, dim, T::zero());
        let modes: Vec<i64> = lay.modes_range().collect();
        let ut = &r.utilde;

        // eta rows
        for &ell in &modes {
            jac[(0, lay.u(0, ell))] += -ut[1].get(-ell);
            jac[(0, lay.u(1, ell))] += ut[0].get(-ell);
            for p in 0..3 {
                // (u_p * ut_p')_0 = sum_l u_l (i(-l)) ut_{-l}
                jac[(1, lay.u(p, ell))] += (ut[p].get(-ell) * T::from_int(-ell)).mul_i();
            }
        }
        jac[(2, lay.u(2, 0))] += T::one();

        // gamma rows
        for j in 1..n {
            let row = 3 + (j - 1);
            let mu = self.apply_mj(&x.u, j);
            let ww = x.w[j - 1].sum();
            let s: Vec<T> = (0..3).map(|p| mu[p].sum()).collect();
            let ss = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
            let dw = T::from_int(2) * ww * ss;
            let w2 = ww * ww * T::from_int(2);
            for &ell in &modes {
                jac[(row, lay.w(j - 1, ell))] += dw;
                let mm = self.mj(j, ell);
                for q in 0..3 {
                    let mut acc = T::zero();
                    for p in 0..3 {
                        acc += s[p] * mm[p][q];
                    }
                    jac[(row, lay.u(q, ell))] += w2 * acc;
                }
            }
        }

        // f rows: D u - v
        for p in 0..3 {
            for &ell in &modes {
                let row = lay.u(p, ell);
                jac[(row, lay.u(p, ell))] += T::from_int(ell).mul_i();
                jac[(row, lay.v(p, ell))] += -T::one();
            }
        }

        // g rows
        let om = self.omega;
        let om2 = om * om;
        let c2 = T::from_int(2) * om * self.sqrt_s1;
        let lam = x.lambda;
        for &ell in &modes {
            let r0 = lay.v(0, ell);
            let r1 = lay.v(1, ell);
            let r2 = lay.v(2, ell);
            for p in 0..3 {
                let rp = lay.v(p, ell);
                jac[(rp, lay.v(p, ell))] += om2 * T::from_int(ell).mul_i() + lam[1];
                jac[(rp, lay.lambda(1))] += x.v[p].get(ell);
            }
            jac[(r0, lay.v(1, ell))] += -c2;
            jac[(r1, lay.v(0, ell))] += c2;
            jac[(r0, lay.u(0, ell))] += -self.s1;
            jac[(r1, lay.u(1, ell))] += -self.s1;
            jac[(r0, lay.u(1, ell))] += -lam[0];
            jac[(r1, lay.u(0, ell))] += lam[0];
            jac[(r0, lay.lambda(0))] += -x.u[1].get(ell);
            jac[(r1, lay.lambda(0))] += x.u[0].get(ell);
            let _ = r2;
        }
        jac[(lay.v(2, 0), lay.lambda(2))] += T::one();

        for j in 1..n {
            let wj = &x.w[j - 1];
            let w2 = wj.convolve(wj);
            let w3 = w2.convolve(wj);
            let mu = self.apply_mj(&x.u, j);
            let mv = self.apply_mj(&x.v, j);
            let mu_w2: Vec<CoeffSeq<T>> = (0..3).map(|p| mu[p].convolve(&w2)).collect();
            let mut pp = mu[0].convolve(&mv[0]);
            pp.axpy(T::one(), &mu[1].convolve(&mv[1]));
            pp.axpy(T::one(), &mu[2].convolve(&mv[2]));
            let w2p = w2.convolve(&pp);
            let w3mv: Vec<CoeffSeq<T>> = (0..3).map(|p| w3.convolve(&mv[p])).collect();
            let w3mu: Vec<CoeffSeq<T>> = (0..3).map(|p| w3.convolve(&mu[p])).collect();
            let three = T::from_int(3);
            let alpha = x.alpha[j - 1];
            for &s in &modes {
                let ms = self.mj(j, s);
                for &ell in &modes {
                    let d = ell - s;
                    let w3d = w3.get(d);
                    for p in 0..3 {
                        let row = lay.v(p, ell);
                        for q in 0..3 {
                            if ms[p][q] != T::zero() {
                                jac[(row, lay.u(q, s))] += ms[p][q] * w3d;
                            }
                        }
                        jac[(row, lay.w(j - 1, s))] += three * mu_w2[p].get(d);
                    }
                    // h_j rows
                    let row = lay.w(j - 1, ell);
                    jac[(row, lay.w(j - 1, s))] += three * (w2p.get(d) + alpha * w2.get(d));
                    for q in 0..3 {
                        let mut au = T::zero();
                        let mut av = T::zero();
                        for p in 0..3 {
                            au += ms[p][q] * w3mv[p].get(d);
                            av += ms[p][q] * w3mu[p].get(d);
                        }
                        jac[(row, lay.u(q, s))] += au;
                        jac[(row, lay.v(q, s))] += av;
                    }
                }
            }
            for &ell in &modes {
                let row = lay.w(j - 1, ell);
                jac[(row, lay.w(j - 1, ell))] += T::from_int(ell).mul_i();
                jac[(row, lay.alpha(j - 1))] += w3.get(ell);
            }
        }
        let _ = mi;
        jac
    }
}

fn half<T: Scalar>() -> T {
    T::from_c64(Complex64::new(0.5, 0.0))
}
