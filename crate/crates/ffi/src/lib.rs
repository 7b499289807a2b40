//! C interface to the solver and validator.
//!
//! Handles are opaque and owned by the caller once returned; release each
//! with its `_free` function. Every call returns an [`RnbStatus`]; on
//! failure `rnb_last_error` describes what went wrong on this thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rotnbody::cli::{self, CliError, RunConfig};
use rotnbody::problem::{ProblemParams, ReferenceOrbit, StateX};
use rotnbody::solver;
use rotnbody::validator::{self, Certificate, ValidatorSettings};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnbStatus {
    Ok = 0,
    NotVerified = 1,
    Numerical = 2,
    Config = 3,
    NullPointer = 4,
    InvalidArgument = 5,
    Panic = 6,
}

pub struct RnbConfig {
    cfg: RunConfig,
}

pub struct RnbOrbit {
    params: ProblemParams,
    xbar: StateX<C64>,
    reference: ReferenceOrbit<C64>,
    residual: f64,
}

pub struct RnbCertificate {
    cert: Certificate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn fail(status: RnbStatus, msg: impl Into<String>) -> RnbStatus {
    set_error(msg);
    status
}

fn from_cli(e: CliError) -> RnbStatus {
    let status = match e.exit_code() {
        cli::EXIT_NUMERICAL => RnbStatus::Numerical,
        _ => RnbStatus::Config,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> RnbStatus) -> RnbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(RnbStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, RnbStatus> {
    if p.is_null() {
        return Err(fail(RnbStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(RnbStatus::InvalidArgument, "string is not UTF-8"))
}

/// Message for the last failed call on this thread; empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rnb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn rnb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Period `2 pi / omega` of the `p:q` orbit of `n` bodies.
///
/// # Safety
/// `out` must be a valid pointer to a double.
#[no_mangle]
pub unsafe extern "C" fn rnb_period(n: usize, p: u64, q: u64, out: *mut f64) -> RnbStatus {
    guard(|| {
        if out.is_null() {
            return fail(RnbStatus::NullPointer, "out is null");
        }
        if n < 2 || p == 0 || q == 0 {
            return fail(RnbStatus::InvalidArgument, "need n >= 2 and positive p, q");
        }
        let params = ProblemParams {
            n,
            k: 1,
            p,
            q,
            m: 2,
            nu: 1.0,
        };
        *out = params.period();
        RnbStatus::Ok
    })
}

/// Parse a run configuration. Relative seed paths are taken relative to
/// `base_dir`, which may be null for the current directory.
///
/// # Safety
/// `json` must be a NUL-terminated string, `base_dir` null or one, and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rnb_config_from_json(
    json: *const c_char,
    base_dir: *const c_char,
    out: *mut *mut RnbConfig,
) -> RnbStatus {
    guard(|| {
        if out.is_null() {
            return fail(RnbStatus::NullPointer, "out is null");
        }
        let text = match str_arg(json) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let base = if base_dir.is_null() {
            PathBuf::new()
        } else {
            match str_arg(base_dir) {
                Ok(s) => PathBuf::from(s),
                Err(s) => return s,
            }
        };
        let cfg: RunConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(RnbStatus::Config, e.to_string()),
        };
        match cfg.resolve(&base) {
            Ok(cfg) => {
                *out = Box::into_raw(Box::new(RnbConfig { cfg }));
                RnbStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// # Safety
/// `cfg` must come from `rnb_config_from_json` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rnb_config_free(cfg: *mut RnbConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Seed and Newton-refine the configured orbit.
///
/// # Safety
/// `cfg` must be a live config handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rnb_solve(cfg: *const RnbConfig, out: *mut *mut RnbOrbit) -> RnbStatus {
    guard(|| {
        if cfg.is_null() || out.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        let cfg = &(*cfg).cfg;
        match cli::cmd_solve(cfg) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RnbOrbit {
                    params: cfg.params(),
                    residual: s.report.residuals.last().copied().unwrap_or(f64::NAN),
                    xbar: s.xbar,
                    reference: s.reference,
                }));
                RnbStatus::Ok
            }
            Err(e) => from_cli(e),
        }
    })
}

/// # Safety
/// `orbit` must come from `rnb_solve` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rnb_orbit_free(orbit: *mut RnbOrbit) {
    if !orbit.is_null() {
        drop(Box::from_raw(orbit));
    }
}

/// Sup-norm of the Galerkin residual after the last Newton step.
///
/// # Safety
/// `orbit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rnb_orbit_residual(orbit: *const RnbOrbit, out: *mut f64) -> RnbStatus {
    guard(|| {
        if orbit.is_null() || out.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        *out = (*orbit).residual;
        RnbStatus::Ok
    })
}

/// Rotating-frame position `u(t)` of the reference body, written to `out[0..3]`.
///
/// # Safety
/// `orbit` must be a live handle and `out` point to three doubles.
#[no_mangle]
pub unsafe extern "C" fn rnb_orbit_position(orbit: *const RnbOrbit, t: f64, out: *mut f64) -> RnbStatus {
    guard(|| {
        if orbit.is_null() || out.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        if !t.is_finite() {
            return fail(RnbStatus::InvalidArgument, "t is not finite");
        }
        for (c, s) in (*orbit).xbar.u.iter().enumerate() {
            *out.add(c) = s.evaluate(t).re;
        }
        RnbStatus::Ok
    })
}

/// Write the refined coefficients (with their phase reference) as JSON.
///
/// # Safety
/// `orbit` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rnb_orbit_write(orbit: *const RnbOrbit, path: *const c_char) -> RnbStatus {
    guard(|| {
        if orbit.is_null() {
            return fail(RnbStatus::NullPointer, "orbit is null");
        }
        let path = match str_arg(path) {
            Ok(s) => s,
            Err(s) => return s,
        };
        let o = &*orbit;
        match solver::write_coeff_file(Path::new(path), &o.params, &o.xbar, Some(&o.reference)) {
            Ok(()) => RnbStatus::Ok,
            Err(e) => fail(RnbStatus::Config, e.to_string()),
        }
    })
}

/// Run the validator. Returns `Ok` when the proof succeeds and
/// `NotVerified` when it does not; a certificate is produced in both cases.
///
/// # Safety
/// `orbit` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rnb_validate(orbit: *const RnbOrbit, r_star: f64, out: *mut *mut RnbCertificate) -> RnbStatus {
    guard(|| {
        if orbit.is_null() || out.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        let o = &*orbit;
        match validator::validate(&o.xbar, o.params, &o.reference, &ValidatorSettings { r_star }) {
            Ok(cert) => {
                let verified = cert.verified;
                if !verified {
                    set_error(cert.failure_reason.clone().unwrap_or_default());
                }
                *out = Box::into_raw(Box::new(RnbCertificate { cert }));
                if verified {
                    RnbStatus::Ok
                } else {
                    RnbStatus::NotVerified
                }
            }
            Err(e) => fail(RnbStatus::Numerical, e.to_string()),
        }
    })
}

/// `Y0, Z0, Z1, Z2` written to `out[0..4]`.
///
/// # Safety
/// `cert` must be a live handle and `out` point to four doubles.
#[no_mangle]
pub unsafe extern "C" fn rnb_certificate_bounds(cert: *const RnbCertificate, out: *mut f64) -> RnbStatus {
    guard(|| {
        if cert.is_null() || out.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        let c = &(*cert).cert;
        for (i, v) in [c.y0, c.z0, c.z1, c.z2].into_iter().enumerate() {
            *out.add(i) = v;
        }
        RnbStatus::Ok
    })
}

/// Validated radius interval; `NotVerified` and untouched outputs when the
/// proof failed.
///
/// # Safety
/// `cert` must be a live handle, `lo` and `hi` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn rnb_certificate_radius(cert: *const RnbCertificate, lo: *mut f64, hi: *mut f64) -> RnbStatus {
    guard(|| {
        if cert.is_null() || lo.is_null() || hi.is_null() {
            return fail(RnbStatus::NullPointer, "null argument");
        }
        let c = &(*cert).cert;
        match (c.verified, c.r0_lo, c.r0_hi) {
            (true, Some(a), Some(b)) => {
                *lo = a;
                *hi = b;
                RnbStatus::Ok
            }
            _ => fail(RnbStatus::NotVerified, c.failure_reason.clone().unwrap_or_default()),
        }
    })
}

/// Certificate as JSON; release with `rnb_string_free`. Null on failure.
///
/// # Safety
/// `cert` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rnb_certificate_json(cert: *const RnbCertificate) -> *mut c_char {
    if cert.is_null() {
        set_error("cert is null");
        return std::ptr::null_mut();
    }
    match catch_unwind(AssertUnwindSafe(|| (*cert).cert.to_json())) {
        Ok(s) => CString::new(s).map(CString::into_raw).unwrap_or(std::ptr::null_mut()),
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rnb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `cert` must come from `rnb_validate` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn rnb_certificate_free(cert: *mut RnbCertificate) {
    if !cert.is_null() {
        drop(Box::from_raw(cert));
    }
}
