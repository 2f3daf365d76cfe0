//! C ABI over the graspguard simulation library.
//!
//! Scenarios and traces travel as opaque handles; every fallible call
//! returns a [`GgStatus`] code and leaves a human-readable message behind
//! [`gg_last_error`] (thread local). Handles must be released with their
//! matching `gg_*_free` function exactly once.

#![deny(unsafe_op_in_unsafe_fn)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use graspguard::filters::FilterVariant;
use graspguard::scenario::Scenario;
use graspguard::sim::{metrics, run_scenario};
use graspguard::trace::TraceRecord;

/// Status code of a C-ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgStatus {
    GgOk = 0,
    GgNullPointer = 1,
    GgUtf8 = 2,
    GgIo = 3,
    GgParse = 4,
    GgInvalid = 5,
    GgRuntime = 6,
}

/// Safety filter selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GgFilter {
    GgFilterCbf = 0,
    GgFilterRacbf = 1,
    GgFilterRcbf = 2,
    GgFilterDobcbf = 3,
}

impl From<GgFilter> for FilterVariant {
    fn from(f: GgFilter) -> Self {
        match f {
            GgFilter::GgFilterCbf => FilterVariant::Cbf,
            GgFilter::GgFilterRacbf => FilterVariant::Racbf,
            GgFilter::GgFilterRcbf => FilterVariant::Rcbf,
            GgFilter::GgFilterDobcbf => FilterVariant::Dobcbf,
        }
    }
}

/// Per-filter summary of one run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GgMetrics {
    pub min_h1: f64,
    pub min_h2: f64,
    pub min_h3: f64,
    pub min_h_max: f64,
    pub mean_input_deviation: f64,
    /// 1 when any sampled barrier dipped below -1e-6.
    pub violation: u8,
}

/// One outer control step of a trace; `flags` is a bitmask
/// (1 = QP infeasible, 2 = adaptation gain condition, 4 = singular Jacobian).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct GgTraceRow {
    pub t: f64,
    pub p: f64,
    pub p_dot: f64,
    pub f_c: f64,
    pub f_c_est: f64,
    pub u_nom: f64,
    pub u_safe: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h_max: f64,
    pub d: f64,
    pub d_hat: f64,
    pub m_d: f64,
    pub theta_hat_k: f64,
    pub theta_hat_b: f64,
    pub flags: u32,
}

/// Opaque scenario handle.
pub struct GgScenario {
    inner: Scenario,
}

/// Opaque trace handle.
pub struct GgTrace {
    variant: FilterVariant,
    records: Vec<TraceRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Message describing the most recent failure on this thread. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gg_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// # Safety
/// `path` must be a valid NUL-terminated string.
unsafe fn path_from(ptr_in: *const c_char) -> Result<String, GgStatus> {
    if ptr_in.is_null() {
        set_error("null path");
        return Err(GgStatus::GgNullPointer);
    }
    let cstr = unsafe { CStr::from_ptr(ptr_in) };
    cstr.to_str().map(str::to_owned).map_err(|_| {
        set_error("path is not valid UTF-8");
        GgStatus::GgUtf8
    })
}

/// Load a scenario from a TOML file; returns NULL on failure (see
/// [`gg_last_error`]).
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gg_scenario_load(path: *const c_char) -> *mut GgScenario {
    let Ok(path) = (unsafe { path_from(path) }) else {
        return ptr::null_mut();
    };
    match Scenario::from_path(Path::new(&path)) {
        Ok(inner) => Box::into_raw(Box::new(GgScenario { inner })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Parse a scenario from TOML text; returns NULL on failure.
///
/// # Safety
/// `text` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gg_scenario_from_toml(text: *const c_char) -> *mut GgScenario {
    let Ok(text) = (unsafe { path_from(text) }) else {
        return ptr::null_mut();
    };
    match Scenario::from_toml(&text) {
        Ok(inner) => Box::into_raw(Box::new(GgScenario { inner })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Check every scenario invariant without running.
///
/// # Safety
/// `scenario` must be a live handle from `gg_scenario_load`/`gg_scenario_from_toml`.
#[no_mangle]
pub unsafe extern "C" fn gg_scenario_validate(scenario: *const GgScenario) -> GgStatus {
    let Some(scenario) = (unsafe { scenario.as_ref() }) else {
        set_error("null scenario");
        return GgStatus::GgNullPointer;
    };
    let validation = scenario.inner.validate();
    if validation.ok() {
        GgStatus::GgOk
    } else {
        set_error(&validation.errors.join("; "));
        GgStatus::GgInvalid
    }
}

/// Release a scenario handle.
///
/// # Safety
/// `scenario` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gg_scenario_free(scenario: *mut GgScenario) {
    if !scenario.is_null() {
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Run one filter over a scenario. A non-negative `seed_override` replaces
/// the scenario seed. Returns NULL on failure.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn gg_run(
    scenario: *const GgScenario,
    filter: GgFilter,
    seed_override: i64,
) -> *mut GgTrace {
    let Some(handle) = (unsafe { scenario.as_ref() }) else {
        set_error("null scenario");
        return ptr::null_mut();
    };
    let mut config = handle.inner.clone();
    if seed_override >= 0 {
        config.seed = seed_override as u64;
    }
    let variant = FilterVariant::from(filter);
    match run_scenario(&config, variant) {
        Ok(records) => Box::into_raw(Box::new(GgTrace { variant, records })),
        Err(e) => {
            set_error(&e.to_string());
            ptr::null_mut()
        }
    }
}

/// Number of records in a trace (zero for a null handle).
///
/// # Safety
/// `trace` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn gg_trace_len(trace: *const GgTrace) -> usize {
    unsafe { trace.as_ref() }.map_or(0, |t| t.records.len())
}

/// Copy record `index` into `out`.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_trace_row(
    trace: *const GgTrace,
    index: usize,
    out: *mut GgTraceRow,
) -> GgStatus {
    let Some(trace) = (unsafe { trace.as_ref() }) else {
        set_error("null trace");
        return GgStatus::GgNullPointer;
    };
    if out.is_null() {
        set_error("null output row");
        return GgStatus::GgNullPointer;
    }
    let Some(r) = trace.records.get(index) else {
        set_error("row index out of range");
        return GgStatus::GgInvalid;
    };
    unsafe {
        *out = GgTraceRow {
            t: r.t,
            p: r.p,
            p_dot: r.p_dot,
            f_c: r.f_c,
            f_c_est: r.f_c_est,
            u_nom: r.u_nom,
            u_safe: r.u_safe,
            h1: r.h1,
            h2: r.h2,
            h3: r.h3,
            h_max: r.h_max,
            d: r.d,
            d_hat: r.d_hat,
            m_d: r.m_d,
            theta_hat_k: r.theta_hat_k,
            theta_hat_b: r.theta_hat_b,
            flags: r.flags.bits(),
        };
    }
    GgStatus::GgOk
}

/// Summarize a trace into `out`.
///
/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gg_trace_metrics(
    trace: *const GgTrace,
    out: *mut GgMetrics,
) -> GgStatus {
    let Some(trace) = (unsafe { trace.as_ref() }) else {
        set_error("null trace");
        return GgStatus::GgNullPointer;
    };
    if out.is_null() {
        set_error("null output metrics");
        return GgStatus::GgNullPointer;
    }
    match metrics(trace.variant, &trace.records) {
        Ok(m) => {
            unsafe {
                *out = GgMetrics {
                    min_h1: m.min_h1,
                    min_h2: m.min_h2,
                    min_h3: m.min_h3,
                    min_h_max: m.min_h_max,
                    mean_input_deviation: m.mean_input_deviation,
                    violation: m.violation as u8,
                };
            }
            GgStatus::GgOk
        }
        Err(e) => {
            set_error(&e.to_string());
            GgStatus::GgRuntime
        }
    }
}

/// Write a trace as CSV (same format as the CLI).
///
/// # Safety
/// `trace` must be a live handle and `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gg_trace_write_csv(
    trace: *const GgTrace,
    path: *const c_char,
) -> GgStatus {
    let Some(trace) = (unsafe { trace.as_ref() }) else {
        set_error("null trace");
        return GgStatus::GgNullPointer;
    };
    let Ok(path) = (unsafe { path_from(path) }) else {
        return GgStatus::GgNullPointer;
    };
    match graspguard::trace::write_csv_path(&trace.records, Path::new(&path)) {
        Ok(()) => GgStatus::GgOk,
        Err(e) => {
            set_error(&e.to_string());
            GgStatus::GgIo
        }
    }
}

/// Release a trace handle.
///
/// # Safety
/// `trace` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gg_trace_free(trace: *mut GgTrace) {
    if !trace.is_null() {
        drop(unsafe { Box::from_raw(trace) });
    }
}
