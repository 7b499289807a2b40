//! From the rotating-frame orbit of the n-th body to the physical
//! choreography: symmetry reconstruction, the inertial frame, winding
//! numbers and sampled diagnostics.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::problem::{ProblemError, ProblemParams, ResonanceClass};
use crate::seqspace::{CoeffSeq, SeqVec};

#[derive(Debug, Error)]
pub enum ChoreographyError {
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error("{p}:{q} is not a simple-choreography resonance for n={n}, k={k}")]
    NotSimple { n: usize, k: usize, p: u64, q: u64 },
    #[error("expected a {expected:?}-frame trajectory")]
    WrongFrame { expected: Frame },
    #[error("curve comes within {rho:.3e} of the z-axis")]
    AxisCrossing { rho: f64 },
    #[error("meridian curve passes through the torus core")]
    CoreCrossing,
    #[error("cylindrical choreography: the meridian curve does not wind around the core (z-axis winding {toroidal})")]
    Cylindrical { toroidal: i64 },
    #[error("too few samples to follow the winding angle")]
    Undersampled,
    #[error("winding {0} is not an integer")]
    NonInteger(f64),
    #[error("trajectory format: {0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Rotating,
    Inertial,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Sample {
    pub fn pos(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Sampled body paths; `bodies[j - 1]` is body `j`, so the last entry is
/// the reference body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub frame: Frame,
    pub params: ProblemParams,
    pub bodies: Vec<Vec<Sample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotClass {
    /// turns of the inertial curve around the z-axis
    pub toroidal: i64,
    /// turns of `(rho - mean rho, z)` around the meridian origin
    pub poloidal: i64,
    /// turns of the rotating-frame curve around the z-axis per period
    pub z_axis_winding: i64,
    pub trivial: bool,
}

impl KnotClass {
    /// `(meridian turns, axial turns)`, the order in which a `p:q`
    /// resonance with no rotating-frame winding reads `(p, q)`.
    pub fn torus_type(&self) -> (u64, u64) {
        (self.poloidal.unsigned_abs(), self.toroidal.unsigned_abs())
    }
}

/// Real Fourier series `sum c_l e^{i l t}` of a conjugate-symmetric sequence.
struct Series {
    modes: Vec<(f64, Complex64)>,
}

impl Series {
    fn new(s: &CoeffSeq<Complex64>) -> Self {
        Series {
            modes: s
                .modes()
                .filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
                .map(|(l, c)| (l as f64, c))
                .collect(),
        }
    }

    fn eval(&self, t: f64) -> f64 {
        self.modes
            .iter()
            .map(|&(l, c)| (c * Complex64::from_polar(1.0, l * t)).re)
            .sum()
    }
}

struct Curve {
    comps: [Series; 3],
}

impl Curve {
    fn new(u: &SeqVec<Complex64>) -> Self {
        Curve {
            comps: [Series::new(&u[0]), Series::new(&u[1]), Series::new(&u[2])],
        }
    }

    fn at(&self, t: f64) -> [f64; 3] {
        [self.comps[0].eval(t), self.comps[1].eval(t), self.comps[2].eval(t)]
    }
}

fn rotate(a: f64, p: [f64; 3]) -> [f64; 3] {
    let (s, c) = a.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1], p[2]]
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn sample(t: f64, p: [f64; 3]) -> Sample {
    Sample {
        t,
        x: p[0],
        y: p[1],
        z: p[2],
    }
}

/// Rotating-frame paths `e^{j J zeta} u(t + j k zeta)` on `samples` points of `[0, 2 pi)`.
pub fn reconstruct_rotating(u: &SeqVec<Complex64>, params: ProblemParams, samples: usize) -> Trajectory {
    let curve = Curve::new(u);
    let n = params.n;
    let zeta = params.zeta();
    let bodies = (1..=n)
        .into_par_iter()
        .map(|j| {
            let rot = (j % n) as f64 * zeta;
            let shift = ((j * params.k) % n) as f64 * zeta;
            (0..samples)
                .map(|i| {
                    let t = TAU * i as f64 / samples as f64;
                    sample(t, rotate(rot, curve.at(t + shift)))
                })
                .collect()
        })
        .collect();
    Trajectory {
        frame: Frame::Rotating,
        params,
        bodies,
    }
}

fn simple_k_tilde(params: &ProblemParams) -> Result<i64, ChoreographyError> {
    let res = params.resonance()?;
    if res.class != ResonanceClass::SimpleChoreography {
        return Err(ChoreographyError::NotSimple {
            n: params.n,
            k: params.k,
            p: params.p,
            q: params.q,
        });
    }
    Ok(res.k_tilde)
}

/// `Q_n(t) = e^{t J q/p} u(t)` on `[0, 2 pi p)`.
fn inertial_point(curve: &Curve, params: &ProblemParams, t: f64) -> [f64; 3] {
    rotate(t * params.q as f64 / params.p as f64, curve.at(t))
}

/// Inertial paths over one closed loop `[0, 2 pi p)`, body `j` taken as
/// the time shift `Q_n(t + j k~ zeta)` of the reference body.
pub fn to_inertial(u: &SeqVec<Complex64>, params: ProblemParams, samples: usize) -> Result<Trajectory, ChoreographyError> {
    let kt = simple_k_tilde(&params)?;
    let curve = Curve::new(u);
    let n = params.n as i64;
    let zeta = params.zeta();
    let big = TAU * params.p as f64;
    let bodies = (1..=n)
        .into_par_iter()
        .map(|j| {
            let shift = (j * kt).rem_euclid(n * params.p as i64) as f64 * zeta;
            (0..samples)
                .map(|i| {
                    let t = big * i as f64 / samples as f64;
                    sample(t, inertial_point(&curve, &params, t + shift))
                })
                .collect()
        })
        .collect();
    Ok(Trajectory {
        frame: Frame::Inertial,
        params,
        bodies,
    })
}

/// `|Q_n(2 pi p) - Q_n(0)|`.
pub fn closure_defect(u: &SeqVec<Complex64>, params: ProblemParams) -> f64 {
    let curve = Curve::new(u);
    let end = inertial_point(&curve, &params, TAU * params.p as f64);
    dist(end, inertial_point(&curve, &params, 0.0))
}

/// Largest gap between `Q_n(t + j k~ zeta)` and the body path obtained
/// directly from the rotating-frame symmetry, over all bodies and samples.
pub fn choreography_defect(u: &SeqVec<Complex64>, params: ProblemParams, samples: usize) -> Result<f64, ChoreographyError> {
    let traj = to_inertial(u, params, samples)?;
    let curve = Curve::new(u);
    let n = params.n;
    let zeta = params.zeta();
    let qp = params.q as f64 / params.p as f64;
    let worst = traj
        .bodies
        .par_iter()
        .enumerate()
        .map(|(idx, path)| {
            let j = idx + 1;
            let rot = (j % n) as f64 * zeta;
            let shift = ((j * params.k) % n) as f64 * zeta;
            path.iter()
                .map(|s| {
                    let direct = rotate(s.t * qp + rot, curve.at(s.t + shift));
                    dist(direct, s.pos())
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(worst)
}

/// Max over samples of the distance from `R(angle) x` to the nearest sample
/// of the same path; small when the path is invariant under the rotation.
pub fn rotation_overlap(path: &[Sample], angle: f64) -> f64 {
    path.par_iter()
        .map(|s| {
            let r = rotate(angle, s.pos());
            path.iter().map(|o| dist(r, o.pos())).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Max over sample times of how far the configuration is from being
/// invariant under rotation by `2 pi / h`, `h = gcd(n, k)`.
pub fn polygon_defect(traj: &Trajectory) -> f64 {
    let h = num_integer::gcd(traj.params.n, traj.params.k);
    let angle = TAU / h as f64;
    let count = traj.bodies.first().map_or(0, |b| b.len());
    (0..count)
        .into_par_iter()
        .map(|i| {
            let config: Vec<[f64; 3]> = traj.bodies.iter().map(|b| b[i].pos()).collect();
            config
                .iter()
                .map(|&x| {
                    let r = rotate(angle, x);
                    config.iter().map(|&y| dist(r, y)).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// Smallest distance between two bodies at a common sample time.
pub fn min_pairwise_distance(traj: &Trajectory) -> f64 {
    let count = traj.bodies.first().map_or(0, |b| b.len());
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut best = f64::INFINITY;
            for a in 0..traj.bodies.len() {
                for b in a + 1..traj.bodies.len() {
                    best = best.min(dist(traj.bodies[a][i].pos(), traj.bodies[b][i].pos()));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Max-norm residual of the second-order delay equations for the n-th body
/// on `samples` equispaced times:
/// `w^2 u'' + 2 w sqrt(s1) J u' - s1 I u + sum_j (u - M_j u) / |u - M_j u|^3`.
pub fn dde_residual(u: &SeqVec<Complex64>, params: ProblemParams, samples: usize) -> f64 {
    let d1: SeqVec<Complex64> = u.iter().map(|s| s.differentiate()).collect();
    let d2: SeqVec<Complex64> = d1.iter().map(|s| s.differentiate()).collect();
    let (c0, c1, c2) = (Curve::new(u), Curve::new(&d1), Curve::new(&d2));
    let n = params.n;
    let zeta = params.zeta();
    let s1 = params.s1();
    let om = params.omega();
    let sq = s1.sqrt();
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let t = TAU * i as f64 / samples as f64;
            let (x, dx, ddx) = (c0.at(t), c1.at(t), c2.at(t));
            let mut r = [
                om * om * ddx[0] - 2.0 * om * sq * dx[1] - s1 * x[0],
                om * om * ddx[1] + 2.0 * om * sq * dx[0] - s1 * x[1],
                om * om * ddx[2],
            ];
            for j in 1..n {
                let other = rotate(j as f64 * zeta, c0.at(t + ((j * params.k) % n) as f64 * zeta));
                let d = [x[0] - other[0], x[1] - other[1], x[2] - other[2]];
                let r3 = dist(x, other).powi(3);
                for c in 0..3 {
                    r[c] += d[c] / r3;
                }
            }
            r.iter().fold(0.0f64, |a, v| a.max(v.abs()))
        })
        .reduce(|| 0.0, f64::max)
}

/// Accumulated turning of a closed sampled planar curve, in turns.
fn winding(points: impl Iterator<Item = (f64, f64)>) -> Result<f64, ChoreographyError> {
    let pts: Vec<(f64, f64)> = points.collect();
    let mut total = 0.0;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        let step = (a.0 * b.1 - a.1 * b.0).atan2(a.0 * b.0 + a.1 * b.1);
        if step.abs() > std::f64::consts::FRAC_PI_2 {
            return Err(ChoreographyError::Undersampled);
        }
        total += step;
    }
    Ok(total / TAU)
}

fn integral(w: f64) -> Result<i64, ChoreographyError> {
    if (w - w.round()).abs() > 1e-6 {
        return Err(ChoreographyError::NonInteger(w));
    }
    Ok(w.round() as i64)
}

/// Winding numbers of the reference body's inertial loop.
pub fn classify_knot(traj: &Trajectory) -> Result<KnotClass, ChoreographyError> {
    if traj.frame != Frame::Inertial {
        return Err(ChoreographyError::WrongFrame {
            expected: Frame::Inertial,
        });
    }
    let path = traj.bodies.last().ok_or(ChoreographyError::Format("no bodies".into()))?;
    let rho: Vec<f64> = path.iter().map(|s| s.x.hypot(s.y)).collect();
    let scale = path.iter().map(|s| dist(s.pos(), [0.0; 3])).fold(0.0, f64::max);
    let rho_min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
    if rho_min <= 1e-9 * scale.max(1.0) {
        return Err(ChoreographyError::AxisCrossing { rho: rho_min });
    }
    let toroidal = integral(winding(path.iter().map(|s| (s.x, s.y)))?)?;

    let p = traj.params.p as i64;
    let q = traj.params.q as i64;
    // the frame turns q times over the loop while u runs through p periods
    if (toroidal - q) % p != 0 {
        return Err(ChoreographyError::NonInteger((toroidal - q) as f64 / p as f64));
    }
    let z_axis_winding = (toroidal - q) / p;

    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    let meridian: Vec<(f64, f64)> = rho.iter().zip(path).map(|(r, s)| (r - mean, s.z)).collect();
    let reach = meridian.iter().map(|m| m.0.hypot(m.1)).fold(0.0, f64::max);
    let poloidal = if reach <= 1e-12 * scale.max(1.0) {
        0
    } else {
        let closest = meridian.iter().map(|m| m.0.hypot(m.1)).fold(f64::INFINITY, f64::min);
        if closest <= 1e-9 * reach {
            return Err(ChoreographyError::CoreCrossing);
        }
        let w = integral(winding(meridian.into_iter())?)?;
        if w == 0 {
            return Err(ChoreographyError::Cylindrical { toroidal });
        }
        w
    };
    Ok(KnotClass {
        toroidal,
        poloidal,
        z_axis_winding,
        trivial: toroidal.abs() <= 1 || poloidal.abs() <= 1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = ChoreographyError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(ChoreographyError::Format(format!("unknown export format {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub body: usize,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub frame: Frame,
    pub params: ProblemParams,
    pub rows: Vec<Row>,
}

impl Trajectory {
    /// Rows ordered by body, then time.
    pub fn rows(&self) -> Vec<Row> {
        self.bodies
            .iter()
            .enumerate()
            .flat_map(|(j, path)| {
                path.iter().map(move |s| Row {
                    t: s.t,
                    body: j + 1,
                    x: s.x,
                    y: s.y,
                    z: s.z,
                })
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,body,x,y,z\n");
        for r in self.rows() {
            let _ = writeln!(out, "{:.16e},{},{:.16e},{:.16e},{:.16e}", r.t, r.body, r.x, r.y, r.z);
        }
        out
    }

    pub fn to_json(&self) -> String {
        let file = TrajectoryFile {
            frame: self.frame,
            params: self.params,
            rows: self.rows(),
        };
        serde_json::to_string_pretty(&file).expect("trajectory serializes")
    }
}

/// Rows back from [`Trajectory::to_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<Row>, ChoreographyError> {
    let mut lines = text.lines();
    match lines.next() {
        Some("t,body,x,y,z") => {}
        _ => return Err(ChoreographyError::Format("missing csv header".into())),
    }
    lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 5 {
                return Err(ChoreographyError::Format(format!("bad row {l}")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| ChoreographyError::Format(e.to_string()));
            Ok(Row {
                t: num(f[0])?,
                body: f[1]
                    .parse()
                    .map_err(|_| ChoreographyError::Format(format!("bad body in {l}")))?,
                x: num(f[2])?,
                y: num(f[3])?,
                z: num(f[4])?,
            })
        })
        .collect()
}

pub fn export(traj: &Trajectory, format: ExportFormat, path: &Path) -> Result<(), ChoreographyError> {
    let text = match format {
        ExportFormat::Csv => traj.to_csv(),
        ExportFormat::Json => traj.to_json(),
    };
    std::fs::write(path, text)?;
    Ok(())
}
