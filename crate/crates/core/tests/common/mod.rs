//! Oracles and generators shared by the property suites and the
//! acceptance target.
#![allow(dead_code)]

use num_bigint::{BigInt, Sign};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::rngs::StdRng;
use rand::Rng;

use rotnbody::interval::{sin_cos, sin_cos_2pi_ratio, ComplexBox, Interval};
use rotnbody::problem::{Problem, ProblemParams, ReferenceOrbit, StateX};
use rotnbody::seqspace::{CoeffSeq, Weight};

// ---------------------------------------------------------------- exact reals

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn encloses(iv: &Interval, x: &BigRational) -> bool {
    rat(iv.lo()) <= *x && *x <= rat(iv.hi())
}

/// Exact points of an interval to test against: both ends and the
/// rational midpoint.
pub fn probe_points(iv: &Interval) -> [BigRational; 3] {
    let (a, b) = (rat(iv.lo()), rat(iv.hi()));
    let mid = (&a + &b) / BigRational::from_integer(2.into());
    [a, mid, b]
}

// ------------------------------------------------- fixed-point sin and cos

/// Binary digits carried by the fixed-point oracle.
const BITS: u64 = 320;
/// Bound on accumulated truncation error, in units of `2^-BITS`.
const SLACK_BITS: u64 = 24;

fn one_fixed() -> BigInt {
    BigInt::one() << BITS
}

fn atan_inv(x: u64) -> BigInt {
    // atan(1/x) = sum (-1)^k / ((2k+1) x^(2k+1))
    let x2 = BigInt::from(x * x);
    let mut power = one_fixed() / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut k = 0u64;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &x2;
        k += 1;
    }
    sum
}

fn pi_fixed() -> BigInt {
    BigInt::from(16) * atan_inv(5) - BigInt::from(4) * atan_inv(239)
}

fn to_fixed(x: &BigRational) -> BigInt {
    (x * BigRational::from_integer(one_fixed())).floor().to_integer()
}

fn div_round(a: &BigInt, b: &BigInt) -> BigInt {
    let twice = a * BigInt::from(2) + b;
    let q = &twice / (b * BigInt::from(2));
    if twice.sign() == Sign::Minus && !(&twice % (b * BigInt::from(2))).is_zero() {
        q - 1
    } else {
        q
    }
}

/// `(sin, cos)` of an exact rational, in fixed point, accurate to well
/// under `2^(SLACK_BITS - BITS)`.
fn sin_cos_fixed(x: &BigRational) -> (BigInt, BigInt) {
    let one = one_fixed();
    let two_pi = pi_fixed() * 2;
    let xf = to_fixed(x);
    let k = div_round(&xf, &two_pi);
    let r = xf - k * &two_pi;
    let r2 = (&r * &r) >> BITS;
    let mut s = BigInt::zero();
    let mut c = BigInt::zero();
    let mut ts = r.clone();
    let mut tc = one.clone();
    let mut i = 0u64;
    while !(ts.is_zero() && tc.is_zero()) {
        s += &ts;
        c += &tc;
        ts = -((&ts * &r2) >> BITS) / BigInt::from((2 * i + 2) * (2 * i + 3));
        tc = -((&tc * &r2) >> BITS) / BigInt::from((2 * i + 1) * (2 * i + 2));
        i += 1;
    }
    (s, c)
}

// The oracle value is only known to within the slack, far below one ulp of
// any f64, so an endpoint that is the exact value (sin 0, cos pi) counts.
fn fixed_inside(iv: &Interval, v: &BigInt) -> bool {
    let slack = BigInt::one() << SLACK_BITS;
    let scale = BigRational::from_integer(one_fixed());
    let lo = rat(iv.lo()) * &scale;
    let hi = rat(iv.hi()) * &scale;
    lo <= BigRational::from_integer(v + &slack) && BigRational::from_integer(v - &slack) <= hi
}

/// Does `(s, c)` enclose `(sin x, cos x)`?
pub fn sin_cos_encloses(s: &Interval, c: &Interval, x: &BigRational) -> bool {
    let (vs, vc) = sin_cos_fixed(x);
    fixed_inside(s, &vs) && fixed_inside(c, &vc)
}

/// Same for the angle `2 pi a / b`.
pub fn sin_cos_ratio_encloses(s: &Interval, c: &Interval, a: i64, b: i64) -> bool {
    let theta = pi_fixed() * 2 * BigInt::from(a) / BigInt::from(b);
    let x = BigRational::new(theta, one_fixed());
    let (vs, vc) = sin_cos_fixed(&x);
    fixed_inside(s, &vs) && fixed_inside(c, &vc)
}

// ------------------------------------------------------ interval checking

/// A float with a random sign and a random binary exponent in `[lo, hi)`.
pub fn rand_f64(rng: &mut StdRng, lo: i32, hi: i32) -> f64 {
    let m: f64 = rng.gen_range(1.0..2.0);
    let e = rng.gen_range(lo..hi);
    let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    s * m * 2f64.powi(e)
}

pub fn rand_interval(rng: &mut StdRng) -> Interval {
    let a = rand_f64(rng, -30, 30);
    let w = match rng.gen_range(0..3) {
        0 => 0.0,
        1 => a.abs() * rng.gen_range(0.0..1e-12),
        _ => a.abs() * rng.gen_range(0.0..2.0),
    };
    Interval::new(a, a + w).unwrap()
}

pub fn rand_positive_interval(rng: &mut StdRng) -> Interval {
    let a = rand_f64(rng, -30, 30).abs();
    let w = a * rng.gen_range(0.0..1.0);
    Interval::new(a, a + w).unwrap()
}

/// Names of the checked operations, in the order `interval_case` runs them.
pub const INTERVAL_OPS: [&str; 13] = [
    "add",
    "sub",
    "mul",
    "neg",
    "div",
    "recip",
    "sqr",
    "powi",
    "sqrt",
    "abs",
    "mul_f64",
    "complex_mul",
    "sin_cos",
];

/// One random input per operation; returns the names of operations whose
/// result missed an exact point value.
pub fn interval_case(rng: &mut StdRng) -> Vec<&'static str> {
    let mut bad = Vec::new();
    let x = rand_interval(rng);
    let y = rand_interval(rng);
    let px = probe_points(&x);
    let py = probe_points(&y);

    let all = |iv: Interval, f: &dyn Fn(&BigRational, &BigRational) -> BigRational| {
        px.iter().all(|a| py.iter().all(|b| encloses(&iv, &f(a, b))))
    };
    if !all(x + y, &|a, b| a + b) {
        bad.push("add");
    }
    if !all(x - y, &|a, b| a - b) {
        bad.push("sub");
    }
    if !all(x * y, &|a, b| a * b) {
        bad.push("mul");
    }
    if !px.iter().all(|a| encloses(&(-x), &(-a))) {
        bad.push("neg");
    }
    let d = if y.contains_zero() { rand_positive_interval(rng) } else { y };
    let pd = probe_points(&d);
    match x.div(&d) {
        Ok(q) if px.iter().all(|a| pd.iter().all(|b| encloses(&q, &(a / b)))) => {}
        _ => bad.push("div"),
    }
    match d.recip() {
        Ok(q) if pd.iter().all(|b| encloses(&q, &b.recip())) => {}
        _ => bad.push("recip"),
    }
    if !px.iter().all(|a| encloses(&x.sqr(), &(a * a))) {
        bad.push("sqr");
    }
    let k: u32 = rng.gen_range(0..6);
    let sx = Interval::new(x.lo().clamp(-1e6, 1e6), x.hi().clamp(-1e6, 1e6)).unwrap();
    if !probe_points(&sx)
        .iter()
        .all(|a| encloses(&sx.powi(k), &num_traits::pow(a.clone(), k as usize)))
    {
        bad.push("powi");
    }
    let pos = rand_positive_interval(rng);
    match pos.sqrt() {
        Ok(r) => {
            let (lo, hi) = (rat(r.lo()), rat(r.hi()));
            let ok = probe_points(&pos).iter().all(|a| {
                let lo_ok = lo.is_negative() || &lo * &lo <= *a;
                lo_ok && *a <= &hi * &hi
            });
            if !ok {
                bad.push("sqrt");
            }
        }
        Err(_) => bad.push("sqrt"),
    }
    if !px.iter().all(|a| encloses(&x.abs(), &a.abs())) {
        bad.push("abs");
    }
    let f = rand_f64(rng, -20, 20);
    if !px.iter().all(|a| encloses(&x.mul_f64(f), &(a * rat(f)))) {
        bad.push("mul_f64");
    }

    let (zr, zi, wr, wi) = (x, y, rand_interval(rng), rand_interval(rng));
    let prod = ComplexBox::new(zr, zi) * ComplexBox::new(wr, wi);
    let mut ok = true;
    for a in probe_points(&zr).iter().step_by(2) {
        for b in probe_points(&zi).iter().step_by(2) {
            for c in probe_points(&wr).iter().step_by(2) {
                for e in probe_points(&wi).iter().step_by(2) {
                    ok &= encloses(&prod.re, &(a * c - b * e)) && encloses(&prod.im, &(a * e + b * c));
                }
            }
        }
    }
    if !ok {
        bad.push("complex_mul");
    }

    let t = rand_f64(rng, -20, 8);
    let w = if rng.gen_bool(0.5) { 0.0 } else { t.abs() * 1e-9 };
    let arg = Interval::new(t, t + w).unwrap();
    let (s, c) = sin_cos(arg);
    if !probe_points(&arg).iter().all(|a| sin_cos_encloses(&s, &c, a)) {
        bad.push("sin_cos");
    }
    bad
}

/// Widest `sin`/`cos` enclosure over the angles `j zeta` and
/// `j k l zeta`, `zeta = 2 pi / n`, and whether each contains the oracle.
pub fn phase_enclosures(ns: std::ops::RangeInclusive<usize>, modes: i64) -> (f64, usize, usize) {
    let mut widest = 0.0f64;
    let mut misses = 0;
    let mut count = 0;
    for n in ns {
        let n_i = n as i64;
        let mut angles = Vec::new();
        for j in 0..n_i {
            angles.push(j);
            for k in 1..n_i {
                for l in -modes..=modes {
                    angles.push(j * k * l);
                }
            }
        }
        angles.sort_unstable();
        angles.dedup_by_key(|a| a.rem_euclid(n_i));
        for a in angles {
            let (s, c) = sin_cos_2pi_ratio(a, n_i);
            widest = widest.max(s.width()).max(c.width());
            if !sin_cos_ratio_encloses(&s, &c, a, n_i) {
                misses += 1;
            }
            count += 1;
        }
        // the multiplied-out angle as a plain interval too, as a caller
        // without exact reduction would form it
        for j in 1..n_i {
            let theta = Interval::pi()
                .scale_pow2(1)
                .mul_f64(j as f64)
                .div(&Interval::from_int(n_i))
                .unwrap();
            let (s, c) = sin_cos(theta);
            widest = widest.max(s.width()).max(c.width());
            if !sin_cos_ratio_encloses(&s, &c, j, n_i) {
                misses += 1;
            }
            count += 1;
        }
    }
    (widest, misses, count)
}

// ----------------------------------------------------------- sequences

pub fn rand_seq(rng: &mut StdRng, support: usize) -> CoeffSeq<Complex64> {
    let decay: f64 = rng.gen_range(0.3..1.0);
    let coeffs = (0..2 * support + 1)
        .map(|i| {
            let ell = (i as i64 - support as i64).unsigned_abs() as i32;
            let s = decay.powi(ell);
            Complex64::new(rng.gen_range(-1.0..1.0) * s, rng.gen_range(-1.0..1.0) * s)
        })
        .collect();
    CoeffSeq::from_vec(coeffs)
}

/// Convolution straight from the definition, over mode indices.
pub fn naive_convolution(a: &CoeffSeq<Complex64>, b: &CoeffSeq<Complex64>) -> Vec<(i64, Complex64)> {
    let (na, nb) = (a.support() as i64, b.support() as i64);
    let n = na + nb;
    (-n..=n)
        .map(|ell| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in -na..=na {
                if (ell - k).abs() <= nb {
                    acc += a.get(k) * b.get(ell - k);
                }
            }
            (ell, acc)
        })
        .collect()
}

pub const SEQ_PROPERTIES: [&str; 5] = [
    "banach_algebra",
    "convolution_oracle",
    "sigma_involution",
    "sigma_norm",
    "d_tail_roundtrip",
];

/// One random case of each sequence property; names of any that failed.
pub fn seqspace_case(rng: &mut StdRng) -> Vec<&'static str> {
    let mut bad = Vec::new();
    let nu = Weight::new(rng.gen_range(1.0..1.5)).unwrap();
    let (sa, sb) = (rng.gen_range(0..25), rng.gen_range(0..25));
    let a = rand_seq(rng, sa);
    let b = rand_seq(rng, sb);
    let ab = a.convolve(&b);

    if ab.norm_nu(nu) > a.norm_nu(nu) * b.norm_nu(nu) * (1.0 + 1e-12) {
        bad.push("banach_algebra");
    }

    let scale = a.coeffs().iter().map(|z| z.norm()).sum::<f64>() * b.coeffs().iter().map(|z| z.norm()).sum::<f64>();
    let oracle = naive_convolution(&a, &b);
    let mut ok = ab.support() == a.support() + b.support();
    for (ell, c) in &oracle {
        ok &= (ab.get(*ell) - c).norm() <= 1e-14 * scale.max(1e-300);
    }
    let t = rng.gen_range(-10.0..10.0);
    ok &= (ab.evaluate(t) - a.evaluate(t) * b.evaluate(t)).norm() <= 1e-13 * scale.max(1e-300);
    if !ok {
        bad.push("convolution_oracle");
    }

    let sa = a.conj_reflect();
    let mut ok = sa.conj_reflect() == a;
    for (ell, c) in sa.modes() {
        ok &= c == a.get(-ell).conj();
    }
    let sab = ab.conj_reflect();
    let prod_s = sa.convolve(&b.conj_reflect());
    ok &= (&sab - &prod_s).sup_abs() <= 1e-14 * scale.max(1e-300);
    if !ok {
        bad.push("sigma_involution");
    }

    let (n1, n2) = (a.norm_nu_iv(nu), sa.norm_nu_iv(nu));
    if n1.hi() < n2.lo() || n2.hi() < n1.lo() || (a.norm_nu(nu) - sa.norm_nu(nu)).abs() > 1e-14 * a.norm_nu(nu) {
        bad.push("sigma_norm");
    }

    let top = a.support().max(1);
    let m = rng.gen_range(1..=top);
    let mut ok = true;
    match (a.solve_d_tail(m), a.differentiate().solve_d_tail(m)) {
        (Ok(inv), Ok(back)) => {
            let dinv = inv.differentiate();
            for (ell, c) in a.modes() {
                let tail = ell.unsigned_abs() as usize >= m;
                let want = if tail { c } else { Complex64::new(0.0, 0.0) };
                ok &= (dinv.get(ell) - want).norm() <= 1e-15 * c.norm().max(1e-300) + f64::MIN_POSITIVE;
                ok &= (back.get(ell) - want).norm() <= 1e-15 * c.norm().max(1e-300) + f64::MIN_POSITIVE;
            }
        }
        _ => ok = false,
    }
    if !ok {
        bad.push("d_tail_roundtrip");
    }
    bad
}

// ------------------------------------------------------------- jacobian

pub fn jacobian_params(m: usize) -> ProblemParams {
    ProblemParams {
        n: 4,
        k: 2,
        p: 10,
        q: 9,
        m,
        nu: 1.1,
    }
}

/// Normwise relative gap between the analytic Galerkin jacobian and
/// central differences of the Galerkin map at a random state.
pub fn jacobian_trial(rng: &mut StdRng, params: ProblemParams) -> f64 {
    let pr = Problem::<Complex64>::new(params);
    let (n, m) = (params.n, params.m);
    let dim = pr.layout().dim();
    let mut xs: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    // keep the reciprocal-distance unknowns away from zero
    let x0 = StateX::from_vec(&xs, n, m);
    let mut x = x0;
    for s in x.w.iter_mut() {
        s.set(0, s.get(0) + Complex64::new(2.0, 0.0));
    }
    xs = x.to_vec(m);
    let r = ReferenceOrbit::from_orbit(&x.u, m);

    let exact = pr.jacobian_galerkin(&x, &r);
    let h = 1e-5;
    let mut gap = 0.0f64;
    for col in 0..dim {
        let mut xp = xs.clone();
        let mut xm = xs.clone();
        xp[col] += h;
        xm[col] -= h;
        let fp = pr.galerkin_map(&StateX::from_vec(&xp, n, m), &r);
        let fm = pr.galerkin_map(&StateX::from_vec(&xm, n, m), &r);
        for row in 0..dim {
            let fd = (fp[row] - fm[row]) / (2.0 * h);
            gap = gap.max((exact[(row, col)] - fd).norm());
        }
    }
    let scale = exact.iter().map(|z| z.norm()).fold(0.0, f64::max);
    gap / scale
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
