//! Seeds, Newton refinement on the Galerkin projection and natural-parameter
//! continuation in the frequency. Floating point only.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{Problem, ProblemError, ProblemParams, ReferenceOrbit, StateX};
use crate::scalar::Scalar;
use crate::seqspace::{CoeffSeq, SeqVec};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("singular Jacobian at Newton iteration {iter}")]
    Singular { iter: usize },
    #[error("Newton did not converge in {iter} iterations (residual {residual:.3e})")]
    MaxIter { iter: usize, residual: f64 },
    #[error("non-finite residual at Newton iteration {iter}")]
    Diverged { iter: usize },
    #[error("continuation step {step} failed: {source}")]
    Continuation {
        step: usize,
        #[source]
        source: Box<SolverError>,
        partial: Vec<StateX<Complex64>>,
    },
    #[error("coefficient file: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol: 1e-12,
            max_iter: 30,
            damping: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    BundledTable,
    File(String),
    LyapunovAnsatz,
    ContinuationStep,
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub params: ProblemParams,
    pub x0: StateX<Complex64>,
    pub provenance: Provenance,
    /// Phase reference stored alongside the coefficients, if any.
    pub reference: Option<ReferenceOrbit<Complex64>>,
    pub warnings: Vec<String>,
}

impl Seed {
    /// The stored reference, or the leading modes of the seed orbit.
    pub fn reference(&self) -> ReferenceOrbit<Complex64> {
        self.reference
            .clone()
            .unwrap_or_else(|| ReferenceOrbit::from_orbit(&self.x0.u, self.params.m))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    /// Largest distance from the real subspace before re-symmetrization.
    pub symmetry_defect: f64,
}

#[derive(Deserialize)]
struct TrefoilTable {
    n: usize,
    k: usize,
    p: u64,
    q: u64,
    rows: Vec<[f64; 7]>,
}

const TREFOIL_TABLE: &str = include_str!("../data/trefoil_table.json");

/// Number of time samples used to transform reciprocal distances.
pub const DISTANCE_GRID: usize = 1 << 10;

fn half_spectrum(rows: &[[f64; 7]], col: usize, m: usize) -> CoeffSeq<Complex64> {
    let mut s = CoeffSeq::zeros(m - 1);
    for r in rows {
        let ell = r[0] as i64;
        if ell.unsigned_abs() as usize >= m {
            continue;
        }
        let z = Complex64::new(r[col], r[col + 1]);
        s.set(ell, z);
        s.set(-ell, z.conj());
    }
    s
}

/// Fourier coefficients of `1/|(M_j u)(t)|` on modes `|l| < m`.
pub fn reciprocal_distances(pr: &Problem<Complex64>, u: &SeqVec<Complex64>, m: usize) -> SeqVec<Complex64> {
    let n = pr.n();
    let grid = DISTANCE_GRID;
    let mut out = Vec::with_capacity(n - 1);
    for j in 1..n {
        let mu = pr.apply_mj(u, j);
        let samples: Vec<f64> = (0..grid)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / grid as f64;
                let d2: f64 = mu.iter().map(|c| c.evaluate(t).re.powi(2)).sum();
                1.0 / d2.sqrt()
            })
            .collect();
        let mut w = CoeffSeq::zeros(m - 1);
        for ell in -(m as i64 - 1)..=(m as i64 - 1) {
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, &s) in samples.iter().enumerate() {
                let t = 2.0 * PI * i as f64 / grid as f64;
                acc += s * Complex64::from_polar(1.0, -(ell as f64) * t);
            }
            w.set(ell, acc / grid as f64);
        }
        out.push(w);
    }
    out
}

/// Complete `(u)` into a full state with `v = Du`, `w` from the reciprocal
/// distances and zero unfolding parameters.
pub fn complete_state(pr: &Problem<Complex64>, u: SeqVec<Complex64>) -> StateX<Complex64> {
    let m = pr.params.m;
    let n = pr.n();
    let u: SeqVec<Complex64> = u.iter().map(|s| s.with_support(m - 1)).collect();
    let v = u.iter().map(|s| s.differentiate()).collect();
    let w = reciprocal_distances(pr, &u, m);
    let mut x = StateX {
        lambda: [Complex64::zero(); 3],
        alpha: vec![Complex64::zero(); n - 1],
        u,
        v,
        w,
    };
    x.symmetrize();
    x
}

pub fn trefoil_params() -> ProblemParams {
    ProblemParams {
        n: 5,
        k: 3,
        p: 3,
        q: 1,
        m: 25,
        nu: 1.03,
    }
}

/// The tabulated five-body trefoil at its published Galerkin size.
pub fn seed_bundled_trefoil() -> Seed {
    let table: TrefoilTable = serde_json::from_str(TREFOIL_TABLE).expect("bundled table parses");
    let params = trefoil_params();
    debug_assert_eq!((table.n, table.k, table.p, table.q), (params.n, params.k, params.p, params.q));
    let pr = Problem::new(params);
    let u = (0..3).map(|c| half_spectrum(&table.rows, 1 + 2 * c, params.m)).collect();
    Seed {
        params,
        x0: complete_state(&pr, u),
        provenance: Provenance::BundledTable,
        reference: None,
        warnings: Vec::new(),
    }
}

/// Polygon relative equilibrium with a small vertical oscillation.
pub fn seed_lyapunov(params: ProblemParams, amplitude: f64) -> Result<Seed, SolverError> {
    params.validate()?;
    let m = params.m;
    let n = params.n;
    let zeta = params.zeta();
    let mut u = vec![CoeffSeq::zeros(m - 1); 3];
    u[0].set(0, Complex64::new(1.0, 0.0));
    u[2].set(1, Complex64::new(amplitude / 2.0, 0.0));
    u[2].set(-1, Complex64::new(amplitude / 2.0, 0.0));
    let v = u.iter().map(|s| s.differentiate()).collect();
    let w = (1..n)
        .map(|j| {
            let mut s = CoeffSeq::zeros(m - 1);
            s.set(0, Complex64::new(1.0 / (2.0 * (j as f64 * zeta / 2.0).sin()), 0.0));
            s
        })
        .collect();
    Ok(Seed {
        params,
        x0: StateX {
            lambda: [Complex64::zero(); 3],
            alpha: vec![Complex64::zero(); n - 1],
            u,
            v,
            w,
        },
        provenance: Provenance::LyapunovAnsatz,
        reference: None,
        warnings: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

/// On-disk coefficients: `m` and per-component `re`/`im` arrays over
/// `l = -(m-1)..=(m-1)`. Components are `u1..u3`, `v1..v3`, `w1..w{n-1}`;
/// `v` and `w` may be omitted and are then rebuilt from `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoeffFile {
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Component>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Component>,
    pub components: BTreeMap<String, Component>,
    /// Phase reference `u~1..u~3`, same layout.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<BTreeMap<String, Component>>,
}

fn seq_to_component(s: &CoeffSeq<Complex64>, m: usize) -> Component {
    let s = s.with_support(m - 1);
    Component {
        re: s.coeffs().iter().map(|c| c.re).collect(),
        im: s.coeffs().iter().map(|c| c.im).collect(),
    }
}

fn component_to_seq(c: &Component, name: &str) -> Result<CoeffSeq<Complex64>, SolverError> {
    if c.re.len() != c.im.len() || c.re.len() % 2 == 0 {
        return Err(SolverError::Format(format!(
            "component {name}: re/im lengths {} and {} must be equal and odd",
            c.re.len(),
            c.im.len()
        )));
    }
    Ok(CoeffSeq::from_vec(
        c.re.iter().zip(&c.im).map(|(&a, &b)| Complex64::new(a, b)).collect(),
    ))
}

fn scalars_to_component(xs: &[Complex64]) -> Component {
    Component {
        re: xs.iter().map(|c| c.re).collect(),
        im: xs.iter().map(|c| c.im).collect(),
    }
}

impl CoeffFile {
    pub fn from_state(params: &ProblemParams, x: &StateX<Complex64>, reference: Option<&ReferenceOrbit<Complex64>>) -> Self {
        let m = params.m;
        let mut components = BTreeMap::new();
        for (p, s) in x.u.iter().enumerate() {
            components.insert(format!("u{}", p + 1), seq_to_component(s, m));
        }
        for (p, s) in x.v.iter().enumerate() {
            components.insert(format!("v{}", p + 1), seq_to_component(s, m));
        }
        for (j, s) in x.w.iter().enumerate() {
            components.insert(format!("w{}", j + 1), seq_to_component(s, m));
        }
        let reference = reference.map(|r| {
            r.utilde
                .iter()
                .enumerate()
                .map(|(p, s)| (format!("u{}", p + 1), seq_to_component(s, m)))
                .collect()
        });
        CoeffFile {
            n: params.n,
            k: params.k,
            p: params.p,
            q: params.q,
            m,
            lambda: Some(scalars_to_component(&x.lambda)),
            alpha: Some(scalars_to_component(&x.alpha)),
            components,
            reference,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// Build a seed at `params` (which fixes `n` and the target `m`).
    pub fn to_seed(&self, params: ProblemParams, source: &str) -> Result<Seed, SolverError> {
        params.validate()?;
        let n = params.n;
        let m = params.m;
        if self.n != n {
            return Err(SolverError::Format(format!("file has n={} but the run has n={n}", self.n)));
        }
        let mut warnings = Vec::new();
        if self.m > m {
            warnings.push(format!("support {} truncated to {m} modes", self.m));
        }
        let get = |name: &str, required: bool| -> Result<Option<CoeffSeq<Complex64>>, SolverError> {
            match self.components.get(name) {
                Some(c) => {
                    let s = component_to_seq(c, name)?;
                    Ok(Some(s.with_support(m - 1)))
                }
                None if required => Err(SolverError::Format(format!("missing component {name}"))),
                None => Ok(None),
            }
        };
        let u: SeqVec<Complex64> = (1..=3)
            .map(|p| get(&format!("u{p}"), true).map(|s| s.unwrap()))
            .collect::<Result<_, _>>()?;
        let v: Option<SeqVec<Complex64>> = (1..=3)
            .map(|p| get(&format!("v{p}"), false))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .collect();
        let w: Option<SeqVec<Complex64>> = (1..n)
            .map(|j| get(&format!("w{j}"), false))
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .collect();
        let extra = self
            .components
            .keys()
            .filter(|k| k.starts_with('w'))
            .filter_map(|k| k[1..].parse::<usize>().ok())
            .any(|j| j == 0 || j >= n);
        if extra {
            return Err(SolverError::Format(format!("w components inconsistent with n={n}")));
        }
        let pr = Problem::new(params);
        let mut x = complete_state(&pr, u);
        if let Some(v) = v {
            x.v = v;
        }
        if let Some(w) = w {
            x.w = w;
        }
        let scal = |c: &Option<Component>, len: usize, name: &str| -> Result<Option<Vec<Complex64>>, SolverError> {
            match c {
                None => Ok(None),
                Some(c) if c.re.len() == len && c.im.len() == len => {
                    Ok(Some(c.re.iter().zip(&c.im).map(|(&a, &b)| Complex64::new(a, b)).collect()))
                }
                Some(_) => Err(SolverError::Format(format!("{name} must have {len} entries"))),
            }
        };
        if let Some(l) = scal(&self.lambda, 3, "lambda")? {
            x.lambda.copy_from_slice(&l);
        }
        if let Some(a) = scal(&self.alpha, n - 1, "alpha")? {
            x.alpha = a;
        }
        x.symmetrize();
        let reference = match &self.reference {
            None => None,
            Some(r) => {
                let ut = (1..=3)
                    .map(|p| {
                        let name = format!("u{p}");
                        let c = r
                            .get(&name)
                            .ok_or_else(|| SolverError::Format(format!("reference lacks {name}")))?;
                        component_to_seq(c, &name)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Some(ReferenceOrbit {
                    utilde: ut.iter().map(|s| s.project(m - 1)).collect(),
                })
            }
        };
        Ok(Seed {
            params,
            x0: x,
            provenance: Provenance::File(source.to_string()),
            reference,
            warnings,
        })
    }
}

pub fn seed_from_file(path: &Path, params: ProblemParams) -> Result<Seed, SolverError> {
    let text = std::fs::read_to_string(path)?;
    let file: CoeffFile = serde_json::from_str(&text).map_err(|e| SolverError::Format(e.to_string()))?;
    file.to_seed(params, &path.display().to_string())
}

pub fn write_coeff_file(
    path: &Path,
    params: &ProblemParams,
    x: &StateX<Complex64>,
    reference: Option<&ReferenceOrbit<Complex64>>,
) -> Result<(), SolverError> {
    std::fs::write(path, CoeffFile::from_state(params, x, reference).to_json())?;
    Ok(())
}

fn sup(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Newton's method on `F^(m)` with re-symmetrization after every step.
pub fn newton_refine(
    pr: &Problem<Complex64>,
    x0: &StateX<Complex64>,
    settings: &NewtonSettings,
    reference: &ReferenceOrbit<Complex64>,
) -> Result<(StateX<Complex64>, NewtonReport), SolverError> {
    let (n, m) = (pr.params.n, pr.params.m);
    let mut x = x0.with_support(m - 1);
    let mut residuals = Vec::new();
    let mut defect = 0.0f64;
    for iter in 0..=settings.max_iter {
        let f = pr.galerkin_map(&x, reference);
        let r = sup(&f);
        if !r.is_finite() {
            return Err(SolverError::Diverged { iter });
        }
        residuals.push(r);
        if r <= settings.tol {
            return Ok((
                x,
                NewtonReport {
                    iterations: iter,
                    residuals,
                    symmetry_defect: defect,
                },
            ));
        }
        if iter == settings.max_iter {
            break;
        }
        let jac = pr.jacobian_galerkin(&x, reference);
        let rhs = DVector::from_vec(f);
        let step = jac.lu().solve(&rhs).ok_or(SolverError::Singular { iter })?;
        let mut xs = x.to_vec(m);
        for (a, d) in xs.iter_mut().zip(step.iter()) {
            *a -= d * settings.damping;
        }
        x = StateX::from_vec(&xs, n, m);
        defect = defect.max(x.realness_defect());
        x.symmetrize();
    }
    Err(SolverError::MaxIter {
        iter: settings.max_iter,
        residual: *residuals.last().unwrap(),
    })
}

/// Natural-parameter continuation on `steps` equal frequency increments.
pub fn continue_omega(
    params: ProblemParams,
    x: &StateX<Complex64>,
    reference: &ReferenceOrbit<Complex64>,
    omega_from: f64,
    omega_to: f64,
    steps: usize,
    settings: &NewtonSettings,
) -> Result<Vec<StateX<Complex64>>, SolverError> {
    let steps = steps.max(1);
    let count = if omega_from == omega_to { 1 } else { steps + 1 };
    let mut out: Vec<StateX<Complex64>> = Vec::with_capacity(count);
    let mut cur = x.clone();
    for i in 0..count {
        let om = if count == 1 {
            omega_from
        } else {
            omega_from + (omega_to - omega_from) * i as f64 / steps as f64
        };
        let pr = Problem::with_omega(params, om);
        match newton_refine(&pr, &cur, settings, reference) {
            Ok((next, _)) => {
                cur = next.clone();
                out.push(next);
            }
            Err(e) => {
                return Err(SolverError::Continuation {
                    step: i,
                    source: Box::new(e),
                    partial: out,
                })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_trefoil_values() {
        let s = seed_bundled_trefoil();
        assert_eq!(s.x0.u[0].get(0), Complex64::new(2.365605595111259e-01, 0.0));
        assert_eq!(s.x0.u[2].get(0), Complex64::zero());
        for p in 0..3 {
            for ell in 1..25 {
                assert_eq!(s.x0.u[p].get(-ell), s.x0.u[p].get(ell).conj());
            }
        }
        assert!(s.x0.realness_defect() < 1e-15);
    }

    #[test]
    fn trefoil_u3_matches_initial_height() {
        let s = seed_bundled_trefoil();
        let z0 = s.x0.u[2].evaluate(0.0);
        assert!((z0.re - 0.000409996364153).abs() <= 1e-9);
    }

    #[test]
    fn lyapunov_ansatz_structure() {
        let params = ProblemParams {
            n: 4,
            k: 2,
            p: 10,
            q: 9,
            m: 6,
            nu: 1.1,
        };
        let s = seed_lyapunov(params, 1e-2).unwrap();
        let nz = s.x0.u[2].coeffs().iter().filter(|c| c.norm() != 0.0).count();
        assert_eq!(nz, 2);
        for j in 1..4 {
            let expect = 1.0 / (2.0 * (j as f64 * params.zeta() / 2.0).sin());
            assert!((s.x0.w[j - 1].get(0).re - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn polygon_equilibrium_residual() {
        let params = ProblemParams {
            n: 5,
            k: 3,
            p: 3,
            q: 1,
            m: 4,
            nu: 1.03,
        };
        let s = seed_lyapunov(params, 0.0).unwrap();
        let pr = Problem::with_omega(params, params.s1().sqrt());
        let g = pr.map_g(&s.x0.lambda, &s.x0.u, &s.x0.v, &s.x0.w);
        for (p, c) in g.iter().enumerate() {
            for (ell, z) in c.modes() {
                if ell != 0 || p == 2 {
                    assert_eq!(z.norm(), 0.0, "p={p} l={ell}");
                }
            }
        }
        // the planar mode-0 residual cancels for the exact polygon
        assert!(g[0].get(0).norm() < 1e-14 && g[1].get(0).norm() < 1e-14);
    }

    #[test]
    fn coeff_file_roundtrip() {
        let s = seed_bundled_trefoil();
        let f = CoeffFile::from_state(&s.params, &s.x0, None);
        let back: CoeffFile = serde_json::from_str(&f.to_json()).unwrap();
        let seed = back.to_seed(s.params, "mem").unwrap();
        assert_eq!(seed.x0, s.x0);
    }

    #[test]
    fn coeff_file_wrong_n() {
        let s = seed_bundled_trefoil();
        let f = CoeffFile::from_state(&s.params, &s.x0, None);
        let mut params = s.params;
        params.n = 4;
        params.k = 2;
        params.p = 10;
        params.q = 9;
        assert!(matches!(f.to_seed(params, "mem"), Err(SolverError::Format(_))));
    }

    #[test]
    fn coeff_file_truncates() {
        let s = seed_bundled_trefoil();
        let f = CoeffFile::from_state(&s.params, &s.x0, None);
        let mut params = s.params;
        params.m = 10;
        let seed = f.to_seed(params, "mem").unwrap();
        assert_eq!(seed.x0.u[0].support(), 9);
        assert_eq!(seed.warnings.len(), 1);
    }
}
