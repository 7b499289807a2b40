//! Batch front end: run configurations, the seed -> solve -> prove -> export
//! pipeline, and result tables.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::choreography::{self, ExportFormat, KnotClass};
use crate::problem::{check_resonance, Problem, ProblemError, ProblemParams, ResonanceClass};
use crate::solver::{self, CoeffFile, NewtonReport, NewtonSettings, Seed, SolverError};
use crate::validator::{self, Certificate, ValidatorSettings, DEFAULT_R_STAR};

const PUBLISHED_RUNS: &str = include_str!("../data/published_runs.json");

pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_NOT_VERIFIED: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage} failed: {message}")]
    Numerical { stage: &'static str, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => EXIT_CONFIG,
            CliError::Numerical { .. } => EXIT_NUMERICAL,
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn seed(e: SolverError) -> Self {
        match e {
            SolverError::Io(source) => CliError::Config(format!("seed file: {source}")),
            other => CliError::Config(format!("seed: {other}")),
        }
    }
}

impl From<ProblemError> for CliError {
    fn from(e: ProblemError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Where the starting point comes from. Written as `bundled`,
/// `file:<path>` or `lyapunov:<amplitude>`.
#[derive(Debug, Clone, PartialEq)]
pub enum SeedSpec {
    Bundled,
    File(PathBuf),
    Lyapunov(f64),
}

impl FromStr for SeedSpec {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        if s == "bundled" {
            return Ok(SeedSpec::Bundled);
        }
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(SeedSpec::File(PathBuf::from(path)));
        }
        if let Some(amp) = s.strip_prefix("lyapunov:") {
            let a: f64 = amp
                .parse()
                .map_err(|_| CliError::Config(format!("bad amplitude in seed {s:?}")))?;
            return Ok(SeedSpec::Lyapunov(a));
        }
        Err(CliError::Config(format!("unknown seed {s:?}")))
    }
}

impl fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeedSpec::Bundled => write!(f, "bundled"),
            SeedSpec::File(p) => write!(f, "file:{}", p.display()),
            SeedSpec::Lyapunov(a) => write!(f, "lyapunov:{a}"),
        }
    }
}

impl Serialize for SeedSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SeedSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_r_star() -> f64 {
    DEFAULT_R_STAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub m: usize,
    pub nu: f64,
    pub seed: SeedSpec,
    #[serde(default)]
    pub newton: NewtonSettings,
    #[serde(default = "default_r_star")]
    pub r_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn params(&self) -> ProblemParams {
        ProblemParams {
            n: self.n,
            k: self.k,
            p: self.p,
            q: self.q,
            m: self.m,
            nu: self.nu,
        }
    }

    pub fn label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("n{}_k{}_{}_{}_m{}", self.n, self.k, self.p, self.q, self.m))
    }

    /// Check parameters and make relative seed paths relative to `base`.
    pub fn resolve(mut self, base: &Path) -> Result<Self, CliError> {
        self.params().validate()?;
        if !(self.r_star > 0.0) {
            return Err(CliError::Config(format!("r_star must be positive, got {}", self.r_star)));
        }
        if !(self.newton.tol > 0.0) || !(self.newton.damping > 0.0 && self.newton.damping <= 1.0) {
            return Err(CliError::Config("newton tol must be positive and damping in (0, 1]".into()));
        }
        if let SeedSpec::File(p) = &self.seed {
            if p.is_relative() {
                self.seed = SeedSpec::File(base.join(p));
            }
        }
        Ok(self)
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = read_text(path)?;
    let cfg: RunConfig = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    cfg.resolve(&base_dir(path))
}

/// A table file is a JSON array whose entries are either inline configs or
/// paths to config files.
pub fn load_config_set(path: &Path) -> Result<Vec<RunConfig>, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Entry {
        Path(PathBuf),
        Inline(Box<RunConfig>),
    }
    let text = read_text(path)?;
    let base = base_dir(path);
    let entries: Vec<Entry> = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    entries
        .into_iter()
        .map(|e| match e {
            Entry::Path(p) => load_config(&base.join(p)),
            Entry::Inline(c) => c.resolve(&base),
        })
        .collect()
}

/// Build the seed the config asks for, moved onto its Galerkin size.
pub fn load_seed(cfg: &RunConfig) -> Result<Seed, CliError> {
    let params = cfg.params();
    match &cfg.seed {
        SeedSpec::Bundled => {
            let seed = solver::seed_bundled_trefoil();
            let b = seed.params;
            if (b.n, b.k, b.p, b.q) != (params.n, params.k, params.p, params.q) {
                return Err(CliError::Config(format!(
                    "the bundled seed is n={}, k={}, {}:{}",
                    b.n, b.k, b.p, b.q
                )));
            }
            if b == params {
                return Ok(seed);
            }
            let mut out = CoeffFile::from_state(&b, &seed.x0, seed.reference.as_ref())
                .to_seed(params, "bundled")
                .map_err(CliError::seed)?;
            out.provenance = seed.provenance;
            Ok(out)
        }
        SeedSpec::File(path) => solver::seed_from_file(path, params).map_err(CliError::seed),
        SeedSpec::Lyapunov(a) => solver::seed_lyapunov(params, *a).map_err(CliError::seed),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublishedRun {
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub period: f64,
    pub m: usize,
    pub nu: f64,
    pub r0: f64,
    pub initial_condition: [f64; 6],
}

/// Reference rows shipped with the crate: period, proof parameters and
/// radius, and the rotating-frame initial condition of each orbit.
pub fn published_runs() -> Vec<PublishedRun> {
    serde_json::from_str(PUBLISHED_RUNS).expect("bundled table parses")
}

pub fn find_published(n: usize, k: usize, p: u64, q: u64) -> Option<PublishedRun> {
    published_runs().into_iter().find(|r| (r.n, r.k, r.p, r.q) == (n, k, p, q))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoReport {
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub s1: f64,
    pub omega: f64,
    pub period: f64,
    pub class: Option<ResonanceClass>,
    pub k_tilde: Option<i64>,
    pub h: usize,
    pub note: String,
}

impl fmt::Display for InfoReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n = {}, k = {}, p:q = {}:{}", self.n, self.k, self.p, self.q)?;
        writeln!(f, "s1     = {:.15}", self.s1)?;
        writeln!(f, "omega  = {:.15}", self.omega)?;
        writeln!(f, "T      = {:.15}", self.period)?;
        writeln!(f, "h      = {}", self.h)?;
        if let Some(kt) = self.k_tilde {
            writeln!(f, "k~     = {kt}")?;
        }
        write!(f, "{}", self.note)
    }
}

pub fn cmd_info(cfg: &RunConfig) -> InfoReport {
    let pr = cfg.params();
    let h = num_integer::gcd(cfg.n, cfg.k);
    let (class, k_tilde, note) = match check_resonance(cfg.n, cfg.k, cfg.p, cfg.q) {
        Ok(r) if r.class == ResonanceClass::SimpleChoreography => (
            Some(r.class),
            Some(r.k_tilde),
            format!(
                "simple choreography; on a torus the path is a ({}, {}) torus knot when the rotating orbit does not wind around the z-axis",
                cfg.p, cfg.q
            ),
        ),
        Ok(r) => (Some(r.class), None, "not a simple choreography (multiple choreography)".to_string()),
        Err(e) => (None, None, format!("not a simple choreography: {e}")),
    };
    InfoReport {
        n: cfg.n,
        k: cfg.k,
        p: cfg.p,
        q: cfg.q,
        s1: pr.s1(),
        omega: pr.omega(),
        period: pr.period(),
        class,
        k_tilde,
        h,
        note,
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub seed: Seed,
    pub xbar: crate::problem::StateX<num_complex::Complex64>,
    pub reference: crate::problem::ReferenceOrbit<num_complex::Complex64>,
    pub report: NewtonReport,
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutcome, CliError> {
    let seed = load_seed(cfg)?;
    let reference = seed.reference();
    let pr = Problem::new(cfg.params());
    let (xbar, report) = solver::newton_refine(&pr, &seed.x0, &cfg.newton, &reference).map_err(|e| CliError::Numerical {
        stage: "newton",
        message: e.to_string(),
    })?;
    Ok(SolveOutcome {
        seed,
        xbar,
        reference,
        report,
    })
}

/// Smallest distance, over the orbit, between the rotation-invariant
/// features `(rho, z, |v|)` of `u` and those of a rotating-frame initial
/// condition.
pub fn initial_condition_gap(
    u: &crate::seqspace::SeqVec<num_complex::Complex64>,
    params: ProblemParams,
    ic: &[f64; 6],
    samples: usize,
) -> f64 {
    let om = params.omega();
    let du: Vec<_> = u.iter().map(|s| s.differentiate()).collect();
    let target = [
        ic[0].hypot(ic[1]),
        ic[2],
        (ic[3] * ic[3] + ic[4] * ic[4] + ic[5] * ic[5]).sqrt(),
    ];
    (0..samples)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / samples as f64;
            let x: Vec<f64> = u.iter().map(|s| s.evaluate(t).re).collect();
            let v: Vec<f64> = du.iter().map(|s| s.evaluate(t).re * om).collect();
            let f = [x[0].hypot(x[1]), x[2], (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()];
            (0..3).map(|c| (f[c] - target[c]).powi(2)).sum::<f64>().sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub struct ProveOutcome {
    pub label: String,
    pub certificate: Certificate,
    pub newton: NewtonReport,
    pub knot: Result<KnotClass, String>,
    pub min_distance: f64,
    pub initial_condition_gap: Option<f64>,
    pub written: Vec<PathBuf>,
}

impl ProveOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.certificate.verified {
            EXIT_VERIFIED
        } else {
            EXIT_NOT_VERIFIED
        }
    }
}

impl fmt::Display for ProveOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.certificate;
        writeln!(f, "[{}] newton residuals: {:?}", self.label, self.newton.residuals)?;
        writeln!(
            f,
            "  Y0 = {:.6e}  Z0 = {:.6e}  Z1 = {:.6e}  Z2 = {:.6e}",
            c.y0, c.z0, c.z1, c.z2
        )?;
        match (c.r0_lo, c.r0_hi) {
            (Some(lo), Some(hi)) if c.verified => writeln!(f, "  verified: r0 in [{lo:.6e}, {hi:.6e}]")?,
            _ => writeln!(f, "  not verified: {}", c.failure_reason.as_deref().unwrap_or("unknown"))?,
        }
        match &self.knot {
            Ok(k) => {
                let (a, b) = k.torus_type();
                writeln!(
                    f,
                    "  knot: ({a}, {b}) torus knot{}, rotating z-axis winding {}",
                    if k.trivial { " (trivial)" } else { "" },
                    k.z_axis_winding
                )?;
            }
            Err(e) => writeln!(f, "  knot: {e}")?,
        }
        writeln!(f, "  min body distance {:.6}", self.min_distance)?;
        if let Some(g) = self.initial_condition_gap {
            writeln!(f, "  gap to tabulated initial condition {g:.3e}")?;
        }
        for p in &self.written {
            writeln!(f, "  wrote {}", p.display())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub samples: usize,
    pub write: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            samples: 4096,
            write: true,
        }
    }
}

fn write_file(path: &Path, text: &str, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))?;
    written.push(path.to_path_buf());
    Ok(())
}

fn run_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    let root = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    root.join(cfg.label())
}

fn knot_of(
    u: &crate::seqspace::SeqVec<num_complex::Complex64>,
    params: ProblemParams,
    samples: usize,
) -> Result<KnotClass, String> {
    choreography::to_inertial(u, params, samples)
        .and_then(|t| choreography::classify_knot(&t))
        .map_err(|e| e.to_string())
}

/// Seed, refine, validate; then write the certificate, the refined
/// coefficients and both trajectories.
pub fn cmd_prove(cfg: &RunConfig, out: Option<&Path>, opts: Options) -> Result<ProveOutcome, CliError> {
    let params = cfg.params();
    let solved = cmd_solve(cfg)?;
    let settings = ValidatorSettings { r_star: cfg.r_star };
    let mut cert = validator::validate(&solved.xbar, params, &solved.reference, &settings).map_err(|e| CliError::Numerical {
        stage: "validation setup",
        message: e.to_string(),
    })?;
    let u = &solved.xbar.u;
    let samples = opts.samples.max(2);
    let rotating = choreography::reconstruct_rotating(u, params, samples);
    let min_distance = choreography::min_pairwise_distance(&rotating);
    let knot = knot_of(u, params, samples);
    let initial_condition_gap =
        find_published(cfg.n, cfg.k, cfg.p, cfg.q).map(|r| initial_condition_gap(u, params, &r.initial_condition, 20_000));

    let mut written = Vec::new();
    if opts.write {
        let dir = run_dir(cfg, out);
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let xpath = dir.join("xbar.json");
        let coeffs = CoeffFile::from_state(&params, &solved.xbar, Some(&solved.reference)).to_json();
        write_file(&xpath, &coeffs, &mut written)?;
        cert.xbar_file = Some("xbar.json".into());
        write_file(&dir.join("rotating.csv"), &rotating.to_csv(), &mut written)?;
        if let Ok(inertial) = choreography::to_inertial(u, params, samples) {
            write_file(&dir.join("inertial.csv"), &inertial.to_csv(), &mut written)?;
        }
        write_file(&dir.join("certificate.json"), &cert.to_json(), &mut written)?;
    }
    Ok(ProveOutcome {
        label: cfg.label(),
        certificate: cert,
        newton: solved.report,
        knot,
        min_distance,
        initial_condition_gap,
        written,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub label: String,
    pub n: usize,
    pub k: usize,
    pub p: u64,
    pub q: u64,
    pub period: f64,
    pub m: usize,
    pub nu: f64,
    pub r0: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableReport {
    pub rows: Vec<TableRow>,
}

impl TableReport {
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().all(|r| r.r0.is_some()) {
            EXIT_VERIFIED
        } else {
            EXIT_NOT_VERIFIED
        }
    }
}

impl fmt::Display for TableReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "| n | k | p:q | T | m | nu | r0 | status |")?;
        writeln!(f, "|---|---|-----|---|---|----|----|--------|")?;
        for r in &self.rows {
            let r0 = r.r0.map_or("-".to_string(), |v| format!("{v:.2e}"));
            writeln!(
                f,
                "| {} | {} | {}:{} | {:.15} | {} | {} | {} | {} |",
                r.n, r.k, r.p, r.q, r.period, r.m, r.nu, r0, r.status
            )?;
        }
        Ok(())
    }
}

pub fn cmd_table(cfgs: &[RunConfig], out: Option<&Path>, opts: Options) -> TableReport {
    let rows = cfgs
        .iter()
        .map(|cfg| {
            let (r0, status) = match cmd_prove(cfg, out, opts) {
                Ok(o) if o.certificate.verified => (o.certificate.r0_lo, "verified".to_string()),
                Ok(o) => (None, format!("FAILED: {}", o.certificate.failure_reason.unwrap_or_default())),
                Err(e) => (None, format!("FAILED: {e}")),
            };
            TableRow {
                label: cfg.label(),
                n: cfg.n,
                k: cfg.k,
                p: cfg.p,
                q: cfg.q,
                period: cfg.params().period(),
                m: cfg.m,
                nu: cfg.nu,
                r0,
                status,
            }
        })
        .collect();
    TableReport { rows }
}

#[derive(Debug, Clone)]
pub struct ExportOutcome {
    pub knot: Result<KnotClass, String>,
    pub written: Vec<PathBuf>,
}

/// Write trajectories of the seed coefficients as they are, without refining.
pub fn cmd_export(cfg: &RunConfig, out: Option<&Path>, samples: usize, format: ExportFormat) -> Result<ExportOutcome, CliError> {
    let params = cfg.params();
    let seed = load_seed(cfg)?;
    let u = &seed.x0.u;
    let samples = samples.max(2);
    let dir = run_dir(cfg, out);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let ext = match format {
        ExportFormat::Csv => "csv",
        ExportFormat::Json => "json",
    };
    let mut written = Vec::new();
    let rotating = choreography::reconstruct_rotating(u, params, samples);
    let path = dir.join(format!("rotating.{ext}"));
    choreography::export(&rotating, format, &path).map_err(|e| CliError::Config(e.to_string()))?;
    written.push(path);
    if let Ok(inertial) = choreography::to_inertial(u, params, samples) {
        let path = dir.join(format!("inertial.{ext}"));
        choreography::export(&inertial, format, &path).map_err(|e| CliError::Config(e.to_string()))?;
        written.push(path);
    }
    Ok(ExportOutcome {
        knot: knot_of(u, params, samples),
        written,
    })
}
