//! C ABI for the levylab core: opaque spec handles, status codes aligned
//! with the CLI exit-code contract, and a config-in/JSON-out entry point for
//! running whole experiment suites from other languages.
//!
//! Conventions:
//! * Every function is safe to call with null pointers; errors come back as
//!   status codes (or null returns) and the message is retrievable with
//!   [`levylab_last_error`].
//! * Strings returned as `*mut c_char` are owned by the caller and must be
//!   released with [`levylab_string_free`].
//! * Handles returned as `*mut LevylabSpec` must be released with
//!   [`levylab_spec_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use levylab::experiment::{run, ExperimentConfig, RunError};
use levylab::levy::{sample_path, ProcessSpec, TimeGrid};
use levylab::mcstats::RngSeed;

/// Status codes; the numeric values 0..=3 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevylabStatus {
    /// Success; for experiment runs, every asserted suite passed.
    LevylabOk = 0,
    /// The run completed but at least one asserted suite failed.
    LevylabSuiteFailure = 1,
    /// Invalid configuration, spec, grid or argument.
    LevylabConfigError = 2,
    /// Numerical breakdown (no density, truncation, degenerate weights).
    LevylabNumericalError = 3,
    /// A required pointer argument was null.
    LevylabNullPointer = 4,
    /// A string argument was not valid UTF-8.
    LevylabInvalidUtf8 = 5,
    /// An output buffer did not have the required length.
    LevylabBufferTooSmall = 6,
}

use LevylabStatus::*;

/// Opaque process-spec handle.
pub struct LevylabSpec {
    inner: ProcessSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<Vec<u8>>) {
    let cstring = CString::new(message).unwrap_or_else(|_| {
        CString::new("error message contained an interior nul byte").expect("static message")
    });
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn clear_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

/// Version string of the library; static storage, do not free.
#[no_mangle]
pub extern "C" fn levylab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copy of the last error message on this thread, or null when the last call
/// succeeded. Free with [`levylab_string_free`].
#[no_mangle]
pub extern "C" fn levylab_last_error() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must be null or a pointer previously returned by a levylab function
/// that documents this deallocator, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn levylab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn utf8_arg<'a>(ptr: *const c_char) -> Result<&'a str, LevylabStatus> {
    if ptr.is_null() {
        set_error("null pointer argument");
        return Err(LevylabNullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8");
        LevylabInvalidUtf8
    })
}

/// Parse a process spec from its JSON form
/// `{"drift":, "gaussian_var":, "jumps": {...}}`. Returns null on error.
///
/// # Safety
/// `json` must be null or a valid nul-terminated C string.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_parse(json: *const c_char) -> *mut LevylabSpec {
    let Ok(text) = utf8_arg(json) else { return std::ptr::null_mut() };
    match serde_json::from_str::<ProcessSpec>(text) {
        Ok(inner) => {
            clear_error();
            Box::into_raw(Box::new(LevylabSpec { inner }))
        }
        Err(e) => {
            set_error(format!("invalid spec: {e}"));
            std::ptr::null_mut()
        }
    }
}

/// Serialize a spec handle back to JSON. Free with [`levylab_string_free`].
///
/// # Safety
/// `spec` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_to_json(spec: *const LevylabSpec) -> *mut c_char {
    let Some(spec) = spec.as_ref() else {
        set_error("null spec handle");
        return std::ptr::null_mut();
    };
    clear_error();
    let json = serde_json::to_string(&spec.inner).expect("specs serialize");
    CString::new(json).expect("JSON has no nul bytes").into_raw()
}

/// Release a spec handle.
///
/// # Safety
/// `spec` must be null or a live handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_free(spec: *mut LevylabSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Centered copy of the spec (mean rate exactly zero). Returns a new handle.
///
/// # Safety
/// `spec` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_center(spec: *const LevylabSpec) -> *mut LevylabSpec {
    let Some(spec) = spec.as_ref() else {
        set_error("null spec handle");
        return std::ptr::null_mut();
    };
    clear_error();
    Box::into_raw(Box::new(LevylabSpec { inner: spec.inner.center() }))
}

unsafe fn scalar_out(
    spec: *const LevylabSpec,
    out: *mut f64,
    f: impl Fn(&ProcessSpec) -> f64,
) -> LevylabStatus {
    let Some(spec) = spec.as_ref() else {
        set_error("null spec handle");
        return LevylabNullPointer;
    };
    if out.is_null() {
        set_error("null output pointer");
        return LevylabNullPointer;
    }
    *out = f(&spec.inner);
    clear_error();
    LevylabOk
}

/// Mean rate `E[ξ_1]` of the spec.
///
/// # Safety
/// `spec` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_mean_rate(
    spec: *const LevylabSpec,
    out: *mut f64,
) -> LevylabStatus {
    scalar_out(spec, out, ProcessSpec::mean_rate)
}

/// Variance rate `Var[ξ_1]` of the spec.
///
/// # Safety
/// `spec` must be null or a live handle; `out` null or writable.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_variance_rate(
    spec: *const LevylabSpec,
    out: *mut f64,
) -> LevylabStatus {
    scalar_out(spec, out, ProcessSpec::variance_rate)
}

/// Lévy exponent `Φ(λ)` with `E[e^{iλξ_u}] = e^{-uΦ(λ)}`, split into real
/// and imaginary parts.
///
/// # Safety
/// `spec` must be null or a live handle; `out_re`/`out_im` null or writable.
#[no_mangle]
pub unsafe extern "C" fn levylab_spec_char_exponent(
    spec: *const LevylabSpec,
    lambda: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> LevylabStatus {
    let Some(spec) = spec.as_ref() else {
        set_error("null spec handle");
        return LevylabNullPointer;
    };
    if out_re.is_null() || out_im.is_null() {
        set_error("null output pointer");
        return LevylabNullPointer;
    }
    let phi = spec.inner.char_exponent(lambda);
    *out_re = phi.re;
    *out_im = phi.im;
    clear_error();
    LevylabOk
}

/// Sample one path on the equispaced grid `[t0, horizon]` with `steps`
/// steps, writing `steps + 1` node values into `out_values`. The draw is the
/// counter-based stream for `(seed, path_index)`: identical inputs give
/// identical paths on any machine and thread layout.
///
/// # Safety
/// `spec` must be null or a live handle; `out_values` must be null or point
/// to at least `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn levylab_sample_path(
    spec: *const LevylabSpec,
    t0: f64,
    horizon: f64,
    steps: usize,
    start: f64,
    seed: u64,
    path_index: u64,
    out_values: *mut f64,
    out_len: usize,
) -> LevylabStatus {
    let Some(spec) = spec.as_ref() else {
        set_error("null spec handle");
        return LevylabNullPointer;
    };
    if out_values.is_null() {
        set_error("null output pointer");
        return LevylabNullPointer;
    }
    let grid = match TimeGrid::new(t0, horizon, steps) {
        Ok(grid) => grid,
        Err(e) => {
            set_error(format!("invalid grid: {e}"));
            return LevylabConfigError;
        }
    };
    if out_len != grid.len() {
        set_error(format!("output buffer holds {out_len} values, need {}", grid.len()));
        return LevylabBufferTooSmall;
    }
    let path = sample_path(&spec.inner, &grid, start, RngSeed::new(seed), path_index);
    std::ptr::copy_nonoverlapping(path.values.as_ptr(), out_values, path.values.len());
    clear_error();
    LevylabOk
}

/// Run a full experiment from its JSON config (same format as the CLI; see
/// the shipped schema). On success and on suite failure, `*out_report_json`
/// receives the report JSON (free with [`levylab_string_free`]); on config
/// or numerical errors it is set to null and the message is available from
/// [`levylab_last_error`].
///
/// # Safety
/// `config_json` must be null or a valid nul-terminated C string;
/// `out_report_json` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn levylab_run_config(
    config_json: *const c_char,
    out_report_json: *mut *mut c_char,
) -> LevylabStatus {
    if out_report_json.is_null() {
        set_error("null output pointer");
        return LevylabNullPointer;
    }
    *out_report_json = std::ptr::null_mut();
    let text = match utf8_arg(config_json) {
        Ok(text) => text,
        Err(status) => return status,
    };
    let config = match ExperimentConfig::from_json(text) {
        Ok(config) => config,
        Err(e) => {
            set_error(e);
            return LevylabConfigError;
        }
    };
    match run(&config) {
        Ok(output) => {
            let json =
                serde_json::to_string_pretty(&output.report).expect("reports serialize");
            *out_report_json = CString::new(json).expect("JSON has no nul bytes").into_raw();
            clear_error();
            if output.report.pass {
                LevylabOk
            } else {
                LevylabSuiteFailure
            }
        }
        Err(RunError::Config(msg)) => {
            set_error(msg);
            LevylabConfigError
        }
        Err(RunError::Numerical(msg)) => {
            set_error(msg);
            LevylabNumericalError
        }
    }
}
