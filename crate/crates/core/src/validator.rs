//! Rigorous a-posteriori validation with the radii polynomial.
//!
//! Every bound is an upper endpoint of an interval computation. The
//! approximate inverse `A` is a float matrix taken as exact; the
//! approximate derivative `A†` is the interval Jacobian of the projected
//! map. Both carry diagonal tails (`1/(i l)` and `1/(i l w^2)` for `A`).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::interval::{add_up, div_up, mul_up, ComplexBox, Interval};
use crate::problem::{Layout, Problem, ProblemError, ProblemParams, ReferenceOrbit, ResonanceClass, StateX, YVec};
use crate::scalar::Scalar;
use crate::seqspace::{psi_bound, CoeffSeq, SeqVec, Weight};
use crate::solver::CoeffFile;

/// Row sums `i_p` of the entry-modulus bounds of `M_{jl}`.
pub const I_P: [f64; 3] = [3.0, 3.0, 2.0];

pub const DEFAULT_R_STAR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ValidatorError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("p:q = {p}:{q} is not a simple choreography resonance")]
    NotChoreography { p: u64, q: u64 },
    #[error("approximate solution is not in the real subspace (defect {0:.3e})")]
    NotReal(f64),
    #[error("reference orbit support {support} must be below m = {m}")]
    ReferenceTooLong { support: usize, m: usize },
    #[error("numerically singular Jacobian")]
    Singular,
    #[error("r_star must be positive, got {0}")]
    BadRStar(f64),
}

/// Why a radii polynomial has no admissible negative value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RadiiFailure {
    /// `Z0 + Z1 >= 1`
    NoContraction { z0_plus_z1: f64 },
    /// The quadratic has no positive root pair.
    NoRealRoot { discriminant: f64 },
    /// The smaller root lies beyond the `Z2` validity radius.
    BeyondRStar { root: f64, r_star: f64 },
    /// Float candidates did not pass the interval check.
    NotVerified { r: f64 },
}

impl std::fmt::Display for RadiiFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadiiFailure::NoContraction { z0_plus_z1 } => write!(f, "Z0 + Z1 = {z0_plus_z1:.6e} >= 1"),
            RadiiFailure::NoRealRoot { discriminant } => {
                write!(f, "radii polynomial has no positive roots (discriminant {discriminant:.3e})")
            }
            RadiiFailure::BeyondRStar { root, r_star } => {
                write!(f, "smallest admissible radius {root:.3e} exceeds r_star = {r_star:.3e}")
            }
            RadiiFailure::NotVerified { r } => write!(f, "p(r) < 0 not verified at r = {r:.3e}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    pub y0: f64,
    pub z0: f64,
    pub z1: f64,
    pub z2: f64,
    pub r_star: f64,
}

/// `Z2 r^2 + (Z1 + Z0 - 1) r + Y0` in interval arithmetic.
pub fn radii_polynomial(b: &BoundSet, r: f64) -> Interval {
    let r = Interval::point(r);
    let one = Interval::ONE;
    Interval::point(b.z2) * r * r + (Interval::point(b.z1) + Interval::point(b.z0) - one) * r + Interval::point(b.y0)
}

/// Interval `[r_lo, r_hi]` of radii on which the polynomial is negative:
/// existence in the `r_lo` ball, uniqueness in the `r_hi` ball.
pub fn radii_solve(b: &BoundSet) -> Result<(f64, f64), RadiiFailure> {
    let lin = b.z0 + b.z1 - 1.0;
    if b.z0 + b.z1 >= 1.0 || !lin.is_finite() {
        return Err(RadiiFailure::NoContraction {
            z0_plus_z1: add_up(b.z0, b.z1),
        });
    }
    let disc = lin * lin - 4.0 * b.z2 * b.y0;
    if !(disc > 0.0) {
        return Err(RadiiFailure::NoRealRoot { discriminant: disc });
    }
    let sq = disc.sqrt();
    let r_minus = 2.0 * b.y0 / (-lin + sq);
    let r_plus = if b.z2 > 0.0 {
        (-lin + sq) / (2.0 * b.z2)
    } else {
        f64::INFINITY
    };
    let mut lo = if r_minus > 0.0 { r_minus * 1.01 } else { f64::MIN_POSITIVE };
    if lo >= r_plus {
        lo = 0.5 * (r_minus + r_plus);
    }
    if lo > b.r_star {
        return Err(RadiiFailure::BeyondRStar {
            root: r_minus,
            r_star: b.r_star,
        });
    }
    let mut hi = if r_plus > b.r_star {
        b.r_star
    } else {
        r_minus + 0.99 * (r_plus - r_minus)
    };
    if hi < lo {
        hi = lo;
    }
    for r in [lo, hi] {
        let p = radii_polynomial(b, r);
        let contraction = Interval::point(b.z2) * Interval::point(r) + Interval::point(b.z1) + Interval::point(b.z0);
        if !(p.hi() < 0.0 && contraction.hi() < 1.0) {
            return Err(RadiiFailure::NotVerified { r });
        }
    }
    Ok((lo, hi))
}

/// Bound on the inverse of `A DF` at the true zero.
pub fn nondegeneracy(b: &BoundSet, r0: f64) -> Option<f64> {
    let s = Interval::point(b.z2) * Interval::point(r0) + Interval::point(b.z1) + Interval::point(b.z0);
    let d = Interval::ONE - s;
    if d.lo() <= 0.0 {
        return None;
    }
    Some(d.recip().ok()?.hi())
}

/// One coordinate block of `X`: a scalar unknown or a whole sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Scalar(usize),
    Seq(usize),
}

pub fn blocks(lay: &Layout) -> Vec<Block> {
    (0..lay.num_scalars())
        .map(Block::Scalar)
        .chain((0..lay.num_seqs()).map(Block::Seq))
        .collect()
}

/// Which tail the diagonal operators carry on a sequence block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailKind {
    /// `1/(i l)`
    Plain,
    /// `1/(i l w^2)`
    Frequency,
}

pub fn tail_kind(c: usize) -> TailKind {
    if (3..6).contains(&c) {
        TailKind::Frequency
    } else {
        TailKind::Plain
    }
}

/// `DF^(m)` in interval arithmetic; tails `D`, `w^2 D`, `D` are implicit.
#[derive(Debug, Clone)]
pub struct ApproxDerivative {
    pub finite_block: DMatrix<ComplexBox>,
    pub omega: Interval,
}

/// Float inverse of `DF^(m)` with diagonal tails.
#[derive(Debug, Clone)]
pub struct ApproxInverse {
    pub finite_block: DMatrix<Complex64>,
    pub abs_upper: DMatrix<f64>,
    pub omega: Interval,
    pub layout: Layout,
}

impl ApproxInverse {
    /// Tail action on a sequence block at mode `|l| >= m`.
    pub fn tail(&self, c: usize, ell: i64, x: ComplexBox) -> ComplexBox {
        use crate::seqspace::TailDivide;
        let y = ComplexBox::div_i_ell(x, ell);
        match tail_kind(c) {
            TailKind::Plain => y,
            TailKind::Frequency => {
                let w2 = self.omega.sqr().recip().expect("positive frequency");
                y.scale(w2)
            }
        }
    }

    /// Upper bound of `sup_{|l| >= m} |tail factor|`.
    pub fn tail_norm(&self, c: usize) -> f64 {
        let m = Interval::from_int(self.layout.m as i64);
        let t = match tail_kind(c) {
            TailKind::Plain => m,
            TailKind::Frequency => m * self.omega.sqr(),
        };
        t.recip().expect("positive").hi()
    }
}

fn sup_rel(a: &DMatrix<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn build_operators(
    xbar: &StateX<Complex64>,
    params: ProblemParams,
    reference: &ReferenceOrbit<Complex64>,
) -> Result<(ApproxDerivative, ApproxInverse), ValidatorError> {
    let pr = Problem::new_rigorous(params);
    let lay = params.layout();
    let df = pr.jacobian_galerkin(&xbar.to_boxes(), &reference.to_boxes());
    let mid = df.map(|z| z.mid());
    let a = mid.clone().try_inverse().ok_or(ValidatorError::Singular)?;
    if !a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(ValidatorError::Singular);
    }
    let check = DMatrix::<Complex64>::identity(lay.dim(), lay.dim()) - &a * &mid;
    if sup_rel(&check) > 1e-3 {
        return Err(ValidatorError::Singular);
    }
    let abs_upper = a.map(|z| ComplexBox::point(z.re, z.im).abs_upper());
    let omega = pr.omega.re;
    Ok((
        ApproxDerivative { finite_block: df, omega },
        ApproxInverse {
            finite_block: a,
            abs_upper,
            omega,
            layout: lay,
        },
    ))
}

/// Largest entry of `I - A^(m) DF^(m)` computed in floats, for diagnostics.
pub fn float_defect(adag: &ApproxDerivative, a: &ApproxInverse) -> f64 {
    let mid = adag.finite_block.map(|z| z.mid());
    let d = mid.nrows();
    sup_rel(&(DMatrix::<Complex64>::identity(d, d) - &a.finite_block * &mid))
}

/// Entrywise upper bounds of `|I - A DF|` on the finite block.
pub fn defect_matrix(adag: &ApproxDerivative, a: &ApproxInverse) -> DMatrix<f64> {
    let am = &a.finite_block;
    let df = &adag.finite_block;
    let d = am.nrows();
    let cols: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![ComplexBox::ZERO; d];
            acc[k] = ComplexBox::ONE;
            for l in 0..d {
                let b = df[(l, k)];
                if b == ComplexBox::ZERO {
                    continue;
                }
                let nb = -b;
                let col = am.column(l);
                for (i, z) in col.iter().enumerate() {
                    acc[i] += nb.mul_c64(z.re, z.im);
                }
            }
            acc.iter().map(|z| z.abs_upper()).collect()
        })
        .collect();
    DMatrix::from_fn(d, d, |i, k| cols[k][i])
}

/// Norms of the blocks of an operator given by entrywise bounds, as a
/// `blocks x blocks` matrix indexed (row block, column block).
pub fn block_norms(absm: &DMatrix<f64>, lay: &Layout, nu: Weight) -> DMatrix<f64> {
    let bl = blocks(lay);
    let nb = bl.len();
    let pw = nu.powers(lay.m);
    let ns = lay.num_scalars();
    let modes = lay.modes();
    let mi = lay.m as i64 - 1;
    let row_block = |r: usize| if r < ns { r } else { ns + (r - ns) / modes };
    let row_weight = |r: usize| -> f64 {
        if r < ns {
            1.0
        } else {
            let ell = ((r - ns) % modes) as i64 - mi;
            pw[ell.unsigned_abs() as usize].hi()
        }
    };
    let weights: Vec<f64> = (0..lay.dim()).map(row_weight).collect();
    let mut out = DMatrix::zeros(nb, nb);
    for k in 0..lay.dim() {
        let mut sums = vec![0.0f64; nb];
        for (r, &w) in weights.iter().enumerate() {
            let v = absm[(r, k)];
            if v != 0.0 {
                let rb = row_block(r);
                sums[rb] = add_up(sums[rb], mul_up(v, w));
            }
        }
        let cb = row_block(k);
        let div = if k < ns {
            1.0
        } else {
            let ell = ((k - ns) % modes) as i64 - mi;
            pw[ell.unsigned_abs() as usize].lo()
        };
        for (rb, s) in sums.into_iter().enumerate() {
            let v = div_up(s, div);
            if v > out[(rb, cb)] {
                out[(rb, cb)] = v;
            }
        }
    }
    out
}

fn max_row_sum(bn: &DMatrix<f64>) -> f64 {
    (0..bn.nrows())
        .map(|i| bn.row(i).iter().fold(0.0, |a, &b| add_up(a, b)))
        .fold(0.0, f64::max)
}

pub fn bound_z0(adag: &ApproxDerivative, a: &ApproxInverse, nu: Weight) -> f64 {
    let b = defect_matrix(adag, a);
    max_row_sum(&block_norms(&b, &a.layout, nu))
}

/// `||A||` on `X`: off-diagonal block norms plus the larger of the finite
/// diagonal block and its tail.
pub fn operator_norm_a(a: &ApproxInverse, nu: Weight) -> f64 {
    let lay = &a.layout;
    let bn = block_norms(&a.abs_upper, lay, nu);
    let ns = lay.num_scalars();
    let mut best = 0.0f64;
    for i in 0..bn.nrows() {
        let mut s = 0.0;
        for c in 0..bn.ncols() {
            if c != i {
                s = add_up(s, bn[(i, c)]);
            }
        }
        let diag = if i >= ns {
            bn[(i, i)].max(a.tail_norm(i - ns))
        } else {
            bn[(i, i)]
        };
        best = best.max(add_up(s, diag));
    }
    best
}

fn up(x: f64) -> Interval {
    Interval::point(x)
}

/// Everything about `x̄` the bounds need, evaluated once in intervals.
struct Data {
    n: usize,
    m: usize,
    nu: Weight,
    s1: Interval,
    sqrt_s1: Interval,
    omega: Interval,
    lambda: [f64; 3],
    alpha: Vec<f64>,
    nu_: Vec<f64>,
    nv: Vec<f64>,
    nw: Vec<f64>,
    w: SeqVec<ComplexBox>,
    w2: SeqVec<ComplexBox>,
    w3: SeqVec<ComplexBox>,
    mu: Vec<SeqVec<ComplexBox>>,
    mv: Vec<SeqVec<ComplexBox>>,
    nmu: Vec<[f64; 3]>,
    nmv: Vec<[f64; 3]>,
}

impl Data {
    fn new(pr: &Problem<ComplexBox>, x: &StateX<ComplexBox>) -> Self {
        let nu = pr.params.weight();
        let n = pr.n();
        let nrm = |s: &CoeffSeq<ComplexBox>| s.norm_nu_upper(nu);
        let w: SeqVec<ComplexBox> = x.w.clone();
        let w2: SeqVec<ComplexBox> = w.iter().map(|s| s.convolve(s)).collect();
        let w3: SeqVec<ComplexBox> = w2.iter().zip(&w).map(|(a, b)| a.convolve(b)).collect();
        let mu: Vec<SeqVec<ComplexBox>> = (1..n).map(|j| pr.apply_mj(&x.u, j)).collect();
        let mv: Vec<SeqVec<ComplexBox>> = (1..n).map(|j| pr.apply_mj(&x.v, j)).collect();
        let n3 = |v: &SeqVec<ComplexBox>| [nrm(&v[0]), nrm(&v[1]), nrm(&v[2])];
        Data {
            n,
            m: pr.params.m,
            nu,
            s1: pr.s1.re,
            sqrt_s1: pr.sqrt_s1.re,
            omega: pr.omega.re,
            lambda: [x.lambda[0].abs_upper(), x.lambda[1].abs_upper(), x.lambda[2].abs_upper()],
            alpha: x.alpha.iter().map(|c| c.abs_upper()).collect(),
            nu_: x.u.iter().map(nrm).collect(),
            nv: x.v.iter().map(nrm).collect(),
            nw: w.iter().map(nrm).collect(),
            nmu: mu.iter().map(n3).collect(),
            nmv: mv.iter().map(n3).collect(),
            w,
            w2,
            w3,
            mu,
            mv,
        }
    }
}

/// Weighted norm of the finite part of a packed vector of bounds, per block.
fn packed_block_norms(v: &[f64], lay: &Layout, nu: Weight) -> Vec<f64> {
    let pw = nu.powers(lay.m);
    blocks(lay)
        .into_iter()
        .map(|b| match b {
            Block::Scalar(i) => v[i],
            Block::Seq(c) => lay.modes_range().fold(0.0, |acc, ell| {
                add_up(acc, mul_up(v[lay.seq(c, ell)], pw[ell.unsigned_abs() as usize].hi()))
            }),
        })
        .collect()
}

pub fn bound_y0(
    xbar: &StateX<Complex64>,
    a: &ApproxInverse,
    params: ProblemParams,
    reference: &ReferenceOrbit<Complex64>,
) -> f64 {
    let pr = Problem::new_rigorous(params);
    let lay = a.layout;
    let nu = params.weight();
    let y: YVec<ComplexBox> = pr.fourier_map(&xbar.to_boxes().with_support(lay.m - 1), &reference.to_boxes());
    let ym = y.to_vec(lay.m);
    let d = lay.dim();
    let am = &a.finite_block;
    let finite: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut acc = ComplexBox::ZERO;
            for (k, yk) in ym.iter().enumerate() {
                let z = am[(i, k)];
                acc += yk.mul_c64(z.re, z.im);
            }
            acc.abs_upper()
        })
        .collect();
    let mut norms = packed_block_norms(&finite, &lay, nu);
    let ns = lay.num_scalars();
    let seqs: Vec<&CoeffSeq<ComplexBox>> = y.seqs().collect();
    let mi = lay.m as i64;
    for (c, s) in seqs.iter().enumerate() {
        let big = s.support() as i64;
        if big < mi {
            continue;
        }
        let pw = nu.powers(big as usize);
        let mut acc = 0.0;
        for ell in (mi..=big).flat_map(|l| [l, -l]) {
            let t = a.tail(c, ell, s.get(ell));
            acc = add_up(acc, mul_up(t.abs_upper(), pw[ell.unsigned_abs() as usize].hi()));
        }
        norms[ns + c] = add_up(norms[ns + c], acc);
    }
    norms.into_iter().fold(0.0, f64::max)
}

/// Componentwise bound vector for the finite part of `(DF - A†) h`.
fn z1_vector(dt: &Data, lay: &Layout) -> Vec<f64> {
    let (n, m, nu) = (dt.n, dt.m, dt.nu);
    let mut z = vec![0.0f64; lay.dim()];
    let num = nu.powers(m)[m].lo();
    for j in 0..n - 1 {
        let wsum = dt.w[j].sum().abs_upper();
        let s: Vec<f64> = (0..3).map(|p| dt.mu[j][p].sum().abs_upper()).collect();
        let t1 = up(wsum) * (0..3).fold(Interval::ZERO, |acc, p| acc + up(s[p]).sqr());
        let t2 = up(wsum).sqr() * (0..3).fold(Interval::ZERO, |acc, p| acc + up(s[p]) * up(I_P[p]));
        let v = (t1 + t2) * Interval::from_int(2) * Interval::point(num).recip().unwrap();
        z[lay.alpha(j)] = v.hi();
    }
    let psi = |a: &CoeffSeq<ComplexBox>, ell: i64| psi_bound(a, ell, m, nu).expect("finite mode");
    let muw2: Vec<Vec<CoeffSeq<ComplexBox>>> = (0..n - 1)
        .map(|j| (0..3).map(|p| dt.mu[j][p].convolve(&dt.w2[j])).collect())
        .collect();
    for p in 0..3 {
        for ell in lay.modes_range() {
            let mut acc = 0.0;
            for j in 0..n - 1 {
                acc = add_up(acc, mul_up(I_P[p], psi(&dt.w3[j], ell)));
                acc = add_up(acc, mul_up(3.0, psi(&muw2[j][p], ell)));
            }
            z[lay.v(p, ell)] = acc;
        }
    }
    for j in 0..n - 1 {
        let prod: Vec<CoeffSeq<ComplexBox>> = (0..3)
            .map(|p| dt.w2[j].convolve(&dt.mu[j][p].convolve(&dt.mv[j][p])))
            .collect();
        let w3v: Vec<CoeffSeq<ComplexBox>> = (0..3).map(|p| dt.w3[j].convolve(&dt.mv[j][p])).collect();
        let w3u: Vec<CoeffSeq<ComplexBox>> = (0..3).map(|p| dt.w3[j].convolve(&dt.mu[j][p])).collect();
        for ell in lay.modes_range() {
            let mut acc = mul_up(mul_up(3.0, dt.alpha[j]), psi(&dt.w2[j], ell));
            for p in 0..3 {
                acc = add_up(acc, mul_up(3.0, psi(&prod[p], ell)));
                acc = add_up(acc, mul_up(I_P[p], psi(&w3v[p], ell)));
                acc = add_up(acc, mul_up(I_P[p], psi(&w3u[p], ell)));
            }
            z[lay.w(j, ell)] = acc;
        }
    }
    z
}

/// Tail contributions `delta` per sequence block (`u`, `v`, `w`).
fn z1_deltas(dt: &Data, lay: &Layout) -> Vec<f64> {
    let n = dt.n;
    let mm = Interval::from_int(dt.m as i64);
    let inv_m = mm.recip().unwrap();
    let inv_mw2 = (mm * dt.omega.sqr()).recip().unwrap();
    let mut d = vec![0.0f64; lay.num_seqs()];
    for p in 0..3 {
        d[p] = inv_m.hi();
    }
    let two_w_s = Interval::from_int(2) * dt.omega * dt.sqrt_s1;
    for p in 0..2 {
        let other = 1 - p;
        let mut s = two_w_s + dt.s1 + up(dt.nu_[other]) + up(dt.lambda[0]) + up(dt.lambda[1]) + up(dt.nv[p]);
        for j in 0..n - 1 {
            let w = up(dt.nw[j]);
            s += Interval::from_int(3) * (w.powi(3) + up(dt.nmu[j][p]) * w.sqr());
        }
        d[3 + p] = (s * inv_mw2).hi();
    }
    let mut s = up(dt.lambda[1]) + up(dt.nv[2]);
    for j in 0..n - 1 {
        let w = up(dt.nw[j]);
        s += Interval::from_int(2) * w.powi(3) + Interval::from_int(3) * up(dt.nmu[j][2]) * w.sqr();
    }
    d[5] = (s * inv_mw2).hi();
    for j in 0..n - 1 {
        let w = up(dt.nw[j]);
        let mut s = w.powi(3) + Interval::from_int(3) * up(dt.alpha[j]) * w.sqr();
        for p in 0..3 {
            s += Interval::from_int(3) * w.sqr() * up(dt.nmu[j][p]) * up(dt.nmv[j][p]);
            s += up(I_P[p]) * w.powi(3) * (up(dt.nmu[j][p]) + up(dt.nmv[j][p]));
        }
        d[6 + j] = (s * inv_m).hi();
    }
    d
}

/// Per-block pieces of `Z1`: the finite part `||(|A| z)_b||` and the tail `delta_b`
/// (zero on scalar blocks).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z1Parts {
    pub finite: Vec<f64>,
    pub delta: Vec<f64>,
}

impl Z1Parts {
    pub fn total(&self) -> f64 {
        self.finite
            .iter()
            .zip(&self.delta)
            .map(|(&a, &b)| add_up(a, b))
            .fold(0.0, f64::max)
    }
}

pub fn z1_parts(xbar: &StateX<Complex64>, a: &ApproxInverse, params: ProblemParams) -> Z1Parts {
    let pr = Problem::new_rigorous(params);
    let lay = a.layout;
    let dt = Data::new(&pr, &xbar.to_boxes().with_support(lay.m - 1));
    let zhat = z1_vector(&dt, &lay);
    let deltas = z1_deltas(&dt, &lay);
    let d = lay.dim();
    let xi: Vec<f64> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for (k, &zk) in zhat.iter().enumerate() {
                if zk != 0.0 {
                    acc = add_up(acc, mul_up(a.abs_upper[(i, k)], zk));
                }
            }
            acc
        })
        .collect();
    let finite = packed_block_norms(&xi, &lay, params.weight());
    let ns = lay.num_scalars();
    let delta = (0..finite.len()).map(|b| if b < ns { 0.0 } else { deltas[b - ns] }).collect();
    Z1Parts { finite, delta }
}

/// The bound vector `z` of the `Z1` estimate, packed like the unknowns.
pub fn z1_hat(xbar: &StateX<Complex64>, params: ProblemParams) -> Vec<f64> {
    let pr = Problem::new_rigorous(params);
    let dt = Data::new(&pr, &xbar.to_boxes().with_support(params.m - 1));
    z1_vector(&dt, &params.layout())
}

pub fn bound_z1(xbar: &StateX<Complex64>, a: &ApproxInverse, params: ProblemParams) -> f64 {
    z1_parts(xbar, a, params).total()
}

/// Bounds on the second derivative over the `r_star` ball, before `||A||`.
pub fn z2_components(xbar: &StateX<Complex64>, params: ProblemParams, r_star: f64) -> Vec<f64> {
    let nu = params.weight();
    let x = xbar.to_boxes();
    let r = up(r_star);
    let nrm = |s: &CoeffSeq<ComplexBox>| up(s.norm_nu_upper(nu));
    let (u, v) = (&x.u, &x.v);
    let dhat = |s: &SeqVec<ComplexBox>| {
        [
            Interval::from_int(2) * nrm(&s[0]) + nrm(&s[1]) + Interval::from_int(3) * r,
            nrm(&s[0]) + Interval::from_int(2) * nrm(&s[1]) + Interval::from_int(3) * r,
            Interval::from_int(2) * nrm(&s[2]) + Interval::from_int(2) * r,
        ]
    };
    let du = dhat(u);
    let dv = dhat(v);
    let ip: Vec<Interval> = I_P.iter().map(|&c| up(c)).collect();
    let what: Vec<Interval> = x.w.iter().map(|s| nrm(s) + r).collect();
    let mut out = Vec::new();
    for wj in &what {
        let mut s = Interval::ZERO;
        for p in 0..3 {
            s += du[p].sqr() + Interval::from_int(4) * *wj * ip[p] * du[p] + wj.sqr() * ip[p].sqr();
        }
        out.push((Interval::from_int(2) * s).hi());
    }
    for p in 0..3 {
        let mut s = Interval::ZERO;
        for wj in &what {
            s += ip[p] * wj.sqr() + du[p] * *wj;
        }
        out.push((Interval::from_int(4) + Interval::from_int(6) * s).hi());
    }
    for (j, wj) in what.iter().enumerate() {
        let alpha = up(x.alpha[j].abs_upper());
        let mut a = Interval::ZERO;
        let mut b = Interval::ZERO;
        let mut c = Interval::ZERO;
        for p in 0..3 {
            a += du[p] * dv[p];
            b += ip[p] * (du[p] + dv[p]);
            c += ip[p].sqr();
        }
        let six = Interval::from_int(6);
        let s = six * *wj * a
            + six * wj.sqr() * b
            + Interval::from_int(2) * wj.powi(3) * c
            + six * wj.sqr()
            + six * *wj * (alpha + r);
        out.push(s.hi());
    }
    out
}

pub fn bound_z2(xbar: &StateX<Complex64>, a: &ApproxInverse, params: ProblemParams, r_star: f64) -> f64 {
    let comp = z2_components(xbar, params, r_star);
    let zmax = comp.into_iter().fold(0.0, f64::max);
    mul_up(operator_norm_a(a, params.weight()), zmax)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidatorSettings {
    pub r_star: f64,
}

impl Default for ValidatorSettings {
    fn default() -> Self {
        ValidatorSettings { r_star: DEFAULT_R_STAR }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: ProblemParams,
    pub xbar_sha: String,
    pub xbar_file: Option<String>,
    #[serde(rename = "Y0")]
    pub y0: f64,
    #[serde(rename = "Z0")]
    pub z0: f64,
    #[serde(rename = "Z1")]
    pub z1: f64,
    #[serde(rename = "Z2")]
    pub z2: f64,
    pub r_star: f64,
    pub r0_lo: Option<f64>,
    pub r0_hi: Option<f64>,
    pub nondegen: Option<f64>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_reason: Option<String>,
    /// Number of leading modes kept in the phase reference.
    pub reference_modes: usize,
    pub statement: String,
    pub timestamp: u64,
}

impl Certificate {
    pub fn bounds(&self) -> BoundSet {
        BoundSet {
            y0: self.y0,
            z0: self.z0,
            z1: self.z1,
            z2: self.z2,
            r_star: self.r_star,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

pub fn xbar_digest(params: &ProblemParams, xbar: &StateX<Complex64>, reference: &ReferenceOrbit<Complex64>) -> String {
    let text = CoeffFile::from_state(params, xbar, Some(reference)).to_json();
    let hash = Sha256::digest(text.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

fn now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn check_preconditions(
    xbar: &StateX<Complex64>,
    params: ProblemParams,
    reference: &ReferenceOrbit<Complex64>,
    settings: &ValidatorSettings,
) -> Result<(), ValidatorError> {
    params.validate()?;
    if params.resonance()?.class != ResonanceClass::SimpleChoreography {
        return Err(ValidatorError::NotChoreography {
            p: params.p,
            q: params.q,
        });
    }
    if !(settings.r_star > 0.0) {
        return Err(ValidatorError::BadRStar(settings.r_star));
    }
    let defect = xbar.realness_defect();
    if defect > 1e-13 {
        return Err(ValidatorError::NotReal(defect));
    }
    let rdef = reference
        .utilde
        .iter()
        .map(|s| (s - &s.conj_reflect()).sup_abs())
        .fold(0.0, f64::max);
    if rdef > 1e-13 {
        return Err(ValidatorError::NotReal(rdef));
    }
    if reference.support() + 1 >= params.m {
        return Err(ValidatorError::ReferenceTooLong {
            support: reference.support(),
            m: params.m,
        });
    }
    Ok(())
}

/// Run all four bounds and the radii polynomial.
pub fn validate(
    xbar: &StateX<Complex64>,
    params: ProblemParams,
    reference: &ReferenceOrbit<Complex64>,
    settings: &ValidatorSettings,
) -> Result<Certificate, ValidatorError> {
    check_preconditions(xbar, params, reference, settings)?;
    let xbar = xbar.with_support(params.m - 1);
    let (adag, a) = build_operators(&xbar, params, reference)?;
    let nu = params.weight();
    let bounds = BoundSet {
        y0: bound_y0(&xbar, &a, params, reference),
        z0: bound_z0(&adag, &a, nu),
        z1: bound_z1(&xbar, &a, params),
        z2: bound_z2(&xbar, &a, params, settings.r_star),
        r_star: settings.r_star,
    };
    Ok(certify(&xbar, params, reference, bounds))
}

/// Assemble the certificate for already computed bounds.
pub fn certify(
    xbar: &StateX<Complex64>,
    params: ProblemParams,
    reference: &ReferenceOrbit<Complex64>,
    bounds: BoundSet,
) -> Certificate {
    let radii = radii_solve(&bounds);
    let (r0_lo, r0_hi, nondegen, failure) = match radii {
        Ok((lo, hi)) => match nondegeneracy(&bounds, lo) {
            Some(k) => (Some(lo), Some(hi), Some(k), None),
            None => (None, None, None, Some(RadiiFailure::NotVerified { r: lo }.to_string())),
        },
        Err(e) => (None, None, None, Some(e.to_string())),
    };
    let verified = failure.is_none();
    let statement = match r0_lo {
        Some(r) if verified => format!(
            "unique zero of F within {r:.3e} of xbar in X (nu = {}); it is real and a {}:{} resonant choreography",
            params.nu, params.p, params.q
        ),
        _ => "no conclusion".to_string(),
    };
    Certificate {
        params,
        xbar_sha: xbar_digest(&params, xbar, reference),
        xbar_file: None,
        y0: bounds.y0,
        z0: bounds.z0,
        z1: bounds.z1,
        z2: bounds.z2,
        r_star: bounds.r_star,
        r0_lo,
        r0_hi,
        nondegen,
        verified,
        failure_reason: failure,
        reference_modes: reference.support() + 1,
        statement,
        timestamp: now(),
    }
}
