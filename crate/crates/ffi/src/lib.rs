//! C ABI over `susy-sigma`.
//!
//! Graphs are opaque handles created from JSON and released with
//! [`ss_graph_free`].  Every fallible function returns an [`SsStatus`]; on a
//! non-zero status the message is available from [`ss_last_error`] on the same
//! thread.  Strings handed out by the library must be released with
//! [`ss_string_free`].  Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use susy_sigma::graph::Graph;
use susy_sigma::sampler::ChainConfig;
use susy_sigma::scaling::{laplace_closed_form, ScaleParams};
use susy_sigma::sigma_core::{log_rho, FieldConfig, RhoMode};
use susy_sigma::verify::{run_check, CheckSpec};
use susy_sigma::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    /// Malformed graph or tower JSON.
    Fixture = 3,
    /// Argument outside the domain of the operation (lengths, signs, ...).
    Domain = 4,
    /// Invalid sampler or check configuration.
    Config = 5,
    UnknownCheck = 6,
    /// The check ran but did not pass; the report is still returned.
    CheckFailed = 7,
    Internal = 8,
    Panic = 9,
}

/// Opaque graph handle.
pub struct SsGraph {
    graph: Graph,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::Graph(_) | Error::Fixture(_) | Error::Json(_) | Error::Io(_) => SsStatus::Fixture,
        Error::Domain(_) | Error::Shape(_) | Error::Invariant(_) => SsStatus::Domain,
        Error::Config(_) => SsStatus::Config,
        Error::UnknownCheck(_) => SsStatus::UnknownCheck,
        _ => SsStatus::Internal,
    }
}

/// Run `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<SsStatus, (SsStatus, String)>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(s)) => s,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside susy-sigma");
            SsStatus::Panic
        }
    }
}

fn lib<T>(r: susy_sigma::Result<T>) -> Result<T, (SsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (SsStatus, String)> {
    if p.is_null() {
        return Err((SsStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (SsStatus::InvalidUtf8, e.to_string()))
}

unsafe fn graph_arg<'a>(g: *const SsGraph) -> Result<&'a Graph, (SsStatus, String)> {
    g.as_ref().map(|h| &h.graph).ok_or((SsStatus::NullPointer, "null graph handle".into()))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize) -> Result<&'a [f64], (SsStatus, String)> {
    if p.is_null() {
        return Err((SsStatus::NullPointer, "null array argument".into()));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn null_out() -> (SsStatus, String) {
    (SsStatus::NullPointer, "null output pointer".into())
}

/// Message of the last failed call on this thread (empty if none).  The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ss_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parse a graph from its JSON description
/// (`{"vertices": [...], "pinned": "...", "edges": [{"i", "j", "w"}]}`).
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_graph_from_json(json: *const c_char, out: *mut *mut SsGraph) -> SsStatus {
    guard(|| {
        let text = str_arg(json)?;
        let out = out.as_mut().ok_or_else(null_out)?;
        let parsed = serde_json::from_str(text).map_err(|e| (SsStatus::Fixture, e.to_string()))?;
        let graph = lib(Graph::from_json(&parsed))?;
        *out = Box::into_raw(Box::new(SsGraph { graph }));
        Ok(SsStatus::Ok)
    })
}

/// Release a graph handle.  Passing null is a no-op.
///
/// # Safety
/// `g` must come from [`ss_graph_from_json`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_graph_free(g: *mut SsGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Number of free (non-pinned) vertices.
///
/// # Safety
/// `g` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ss_graph_n_free(g: *const SsGraph, out: *mut usize) -> SsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        *out.as_mut().ok_or_else(null_out)? = g.n_free();
        Ok(SsStatus::Ok)
    })
}

/// Closed-form Laplace transform for per-vertex parameters `a[i] > 0`, `b[i]`
/// over the `n` free vertices (in JSON order).
///
/// # Safety
/// `a`, `b` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_laplace(g: *const SsGraph, a: *const f64, b: *const f64, n: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let (a, b) = (slice_arg(a, n)?, slice_arg(b, n)?);
        let out = out.as_mut().ok_or_else(null_out)?;
        if n != g.n_free() {
            return Err((SsStatus::Domain, format!("expected {} parameters, got {n}", g.n_free())));
        }
        let p = lib(ScaleParams::new(a, b))?;
        *out = lib(laplace_closed_form(g, &p))?;
        Ok(SsStatus::Ok)
    })
}

/// `log ρ^W(u, s)` for fields on the `n` free vertices.
///
/// # Safety
/// `u`, `s` must point to `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ss_log_rho(g: *const SsGraph, u: *const f64, s: *const f64, n: usize, out: *mut f64) -> SsStatus {
    guard(|| {
        let g = graph_arg(g)?;
        let (u, s) = (slice_arg(u, n)?, slice_arg(s, n)?);
        let out = out.as_mut().ok_or_else(null_out)?;
        if n != g.n_free() {
            return Err((SsStatus::Domain, format!("expected {} field values, got {n}", g.n_free())));
        }
        *out = lib(log_rho(g, &FieldConfig::from_free(u, s), RhoMode::Direct))?;
        Ok(SsStatus::Ok)
    })
}

/// Run a registered check and return its JSON report in `*out_json`.
///
/// `graph` may be null to use the bundled fixtures.  Returns
/// [`SsStatus::CheckFailed`] (with the report still set) when the verdict
/// is a failure.
///
/// # Safety
/// `id` must be a NUL-terminated string, `graph` null or a live handle and
/// `out_json` a valid pointer.  Release the report with [`ss_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ss_run_check(
    id: *const c_char,
    graph: *const SsGraph,
    n_samples: usize,
    seed: u64,
    out_json: *mut *mut c_char,
) -> SsStatus {
    guard(|| {
        let id = str_arg(id)?;
        let out = out_json.as_mut().ok_or_else(null_out)?;
        *out = ptr::null_mut();
        let mut spec = CheckSpec::new(id).with_chain(ChainConfig::default().with_samples(n_samples).with_seed(seed));
        spec.graph = graph.as_ref().map(|h| h.graph.clone());
        let report = lib(run_check(&spec))?;
        let text = serde_json::to_string(&report).map_err(|e| (SsStatus::Internal, e.to_string()))?;
        *out = CString::new(text).map_err(|e| (SsStatus::Internal, e.to_string()))?.into_raw();
        if report.passed() {
            Ok(SsStatus::Ok)
        } else {
            set_error(format!("check `{id}` failed"));
            Ok(SsStatus::CheckFailed)
        }
    })
}

/// Release a string returned by the library.  Passing null is a no-op.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
