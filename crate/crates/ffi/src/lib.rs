//! C ABI for the hypodecay toolkit.
//!
//! Conventions: every fallible call returns an [`HdStatus`]; results go through out
//! pointers; handles are opaque and must be released with their `_free` function; strings
//! returned by the library are released with [`hd_string_free`]. On failure the message is
//! kept per thread and read with [`hd_last_error`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use hypodecay::corrector::{select_coefficients, CorrectorCoeffs, CorrectorError};
use hypodecay::experiment::{run, RunConfig, RunError};
use hypodecay::linalg::{validate_spec, SymMatrix, SystemSpec};

/// Status codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HdStatus {
    Ok = 0,
    /// A required pointer was null.
    NullPointer = 1,
    /// Bad dimensions, non-finite values, or a string that is not UTF-8.
    InvalidArgument = 2,
    /// Matrices violate the structural assumptions (asymmetric, D not positive definite).
    InvalidSystem = 3,
    /// Kalman rank deficient: no corrector exists.
    SkFails = 4,
    /// Coefficient search failed.
    CoefficientSearch = 5,
    /// Run configuration rejected (exit code 2 on the CLI).
    ConfigError = 6,
    /// Simulation aborted (exit code 3 on the CLI).
    NumericalError = 7,
    /// Caller buffer too small; the required length was written.
    BufferTooSmall = 8,
    /// Internal panic caught at the boundary.
    Panic = 9,
}

/// Validated system `U_t + A U_x = -diag(0, D) U`.
pub struct HdSystem {
    spec: SystemSpec,
}

/// Corrector coefficients selected for a system.
pub struct HdCoeffs {
    coeffs: CorrectorCoeffs,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).ok());
}

fn fail(status: HdStatus, msg: impl Into<String>) -> HdStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HdStatus) -> HdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(HdStatus::Panic, msg)
        }
    }
}

unsafe fn rows(ptr: *const f64, n: usize) -> Result<Vec<Vec<f64>>, HdStatus> {
    if ptr.is_null() {
        return Err(fail(HdStatus::NullPointer, "matrix pointer is null"));
    }
    let flat = std::slice::from_raw_parts(ptr, n * n);
    if flat.iter().any(|v| !v.is_finite()) {
        return Err(fail(HdStatus::InvalidArgument, "matrix entries must be finite"));
    }
    Ok(flat.chunks(n).map(|r| r.to_vec()).collect())
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, HdStatus> {
    if p.is_null() {
        return Err(fail(HdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(HdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Thread-local message of the last failed call, or null. Valid until the next call on
/// the same thread; do not free.
#[no_mangle]
pub extern "C" fn hd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version, static string.
#[no_mangle]
pub extern "C" fn hd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a system from row-major `a` (n×n) and `d` (n2×n2) with `n1 = n - n2`.
///
/// # Safety
/// `a` must point to n·n doubles, `d` to n2·n2 doubles, `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn hd_system_new(
    a: *const f64,
    n: usize,
    d: *const f64,
    n2: usize,
    out: *mut *mut HdSystem,
) -> HdStatus {
    guard(|| {
        if out.is_null() {
            return fail(HdStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if n < 2 || n2 == 0 || n2 >= n {
            return fail(HdStatus::InvalidArgument, format!("need n >= 2 and 0 < n2 < n, got n = {n}, n2 = {n2}"));
        }
        let (ra, rd) = match (rows(a, n), rows(d, n2)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let sa = SymMatrix::from_rows(&ra);
        let sd = SymMatrix::from_rows(&rd);
        let spec = match (sa, sd) {
            (Ok(sa), Ok(sd)) => validate_spec(sa, sd, n - n2),
            (Err(e), _) | (_, Err(e)) => return fail(HdStatus::InvalidSystem, e.to_string()),
        };
        match spec {
            Ok(spec) => {
                *out = Box::into_raw(Box::new(HdSystem { spec }));
                HdStatus::Ok
            }
            Err(e) => fail(HdStatus::InvalidSystem, e.to_string()),
        }
    })
}

/// # Safety
/// `sys` must come from [`hd_system_new`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_system_free(sys: *mut HdSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Kalman rank, κ = λ_min(D), and whether the SK (full Kalman rank) condition holds.
///
/// # Safety
/// `sys` must be a live handle; any out pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn hd_system_info(
    sys: *const HdSystem,
    kalman_rank: *mut usize,
    kappa: *mut f64,
    sk_holds: *mut bool,
) -> HdStatus {
    guard(|| {
        let Some(s) = sys.as_ref() else {
            return fail(HdStatus::NullPointer, "sys is null");
        };
        let f = s.spec.flags;
        if !kalman_rank.is_null() {
            *kalman_rank = f.kalman_rank;
        }
        if !kappa.is_null() {
            *kappa = s.spec.kappa;
        }
        if !sk_holds.is_null() {
            *sk_holds = f.sk_holds;
        }
        HdStatus::Ok
    })
}

/// Selects corrector coefficients.
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_coeffs_select(
    sys: *const HdSystem,
    delta: f64,
    safety: f64,
    out: *mut *mut HdCoeffs,
) -> HdStatus {
    guard(|| {
        if out.is_null() {
            return fail(HdStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(s) = sys.as_ref() else {
            return fail(HdStatus::NullPointer, "sys is null");
        };
        match select_coefficients(&s.spec, delta, safety) {
            Ok(coeffs) => {
                *out = Box::into_raw(Box::new(HdCoeffs { coeffs }));
                HdStatus::Ok
            }
            Err(e @ CorrectorError::SKConditionFails { .. }) => fail(HdStatus::SkFails, e.to_string()),
            Err(e @ CorrectorError::BadParameters { .. }) => fail(HdStatus::InvalidArgument, e.to_string()),
            Err(e) => fail(HdStatus::CoefficientSearch, e.to_string()),
        }
    })
}

/// # Safety
/// `c` must come from [`hd_coeffs_select`] and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_coeffs_free(c: *mut HdCoeffs) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Time-weight coefficient η₀ and whether every constraint family holds.
///
/// # Safety
/// `c` must be a live handle; out pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn hd_coeffs_info(c: *const HdCoeffs, eta0: *mut f64, constraints_ok: *mut bool) -> HdStatus {
    guard(|| {
        let Some(c) = c.as_ref() else {
            return fail(HdStatus::NullPointer, "coeffs is null");
        };
        if !eta0.is_null() {
            *eta0 = c.coeffs.eta0;
        }
        if !constraints_ok.is_null() {
            *constraints_ok = c.coeffs.report.ok();
        }
        HdStatus::Ok
    })
}

/// Copies the n-1 corrector weights ε_k into `buf`. `len` receives the count; with a
/// null or short buffer the call returns `BufferTooSmall` after writing `len`.
///
/// # Safety
/// `c` must be live, `len` writable, and `buf` (if non-null) hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn hd_coeffs_eps(c: *const HdCoeffs, buf: *mut f64, cap: usize, len: *mut usize) -> HdStatus {
    guard(|| {
        let Some(c) = c.as_ref() else {
            return fail(HdStatus::NullPointer, "coeffs is null");
        };
        if len.is_null() {
            return fail(HdStatus::NullPointer, "len is null");
        }
        let eps = &c.coeffs.eps;
        *len = eps.len();
        if buf.is_null() || cap < eps.len() {
            return fail(HdStatus::BufferTooSmall, format!("need {} doubles", eps.len()));
        }
        ptr::copy_nonoverlapping(eps.as_ptr(), buf, eps.len());
        HdStatus::Ok
    })
}

/// Full coefficient record as JSON; free with [`hd_string_free`].
///
/// # Safety
/// `c` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hd_coeffs_to_json(c: *const HdCoeffs, out: *mut *mut c_char) -> HdStatus {
    guard(|| {
        if out.is_null() {
            return fail(HdStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let Some(c) = c.as_ref() else {
            return fail(HdStatus::NullPointer, "coeffs is null");
        };
        let s = serde_json::to_string(&c.coeffs).expect("coefficients serialize");
        match CString::new(s) {
            Ok(cs) => {
                *out = cs.into_raw();
                HdStatus::Ok
            }
            Err(e) => fail(HdStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn hd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs a JSON run configuration, writing outputs under `out_dir`. `exit_code` receives
/// the CLI-equivalent code (0 pass, 2 config, 3 numerical, 4 certificate failed); the
/// status is `Ok` whenever the run completed, even with failed certificates.
///
/// # Safety
/// Both strings must be NUL-terminated; `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hd_run_config(
    config_json: *const c_char,
    out_dir: *const c_char,
    exit_code: *mut i32,
) -> HdStatus {
    guard(|| {
        if exit_code.is_null() {
            return fail(HdStatus::NullPointer, "exit_code is null");
        }
        let (json, dir) = match (c_str(config_json, "config_json"), c_str(out_dir, "out_dir")) {
            (Ok(j), Ok(d)) => (j, d),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let result = RunConfig::from_json(json).and_then(|cfg| run(&cfg, Path::new(dir)));
        match result {
            Ok(r) => {
                *exit_code = r.exit_code;
                if r.exit_code != 0 {
                    set_error("one or more certificates failed");
                }
                HdStatus::Ok
            }
            Err(e) => {
                *exit_code = e.exit_code();
                let status = match e {
                    RunError::Numerical(_) => HdStatus::NumericalError,
                    _ => HdStatus::ConfigError,
                };
                fail(status, e.to_string())
            }
        }
    })
}
