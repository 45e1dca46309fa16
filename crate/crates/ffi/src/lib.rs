//! C ABI over `vsl-core`.
//!
//! Objects are opaque handles created by `*_new`/`*_from_*` functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`VslStatus`]; on failure a message is kept per thread and can be copied
//! out with [`vsl_last_error_message`]. Outputs are written through pointers
//! only on success. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use vsl_core::analysis::{self, Basin, Regime};
use vsl_core::engine::{self, ScenarioConfig, ScenarioTrace};
use vsl_core::{Bottleneck, Error, FundamentalDiagram, LaneDrop};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VslStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument outside the domain of the function, or a broken precondition.
    InvalidArgument = 2,
    /// Invalid model or scenario configuration (including malformed JSON).
    Config = 3,
    /// A conservation or bounds invariant failed during a run.
    Invariant = 4,
    /// Index past the end, or an output buffer too small.
    OutOfRange = 5,
    Io = 6,
    Panic = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> VslStatus {
    match err {
        Error::Domain(_) | Error::Contract(_) => VslStatus::InvalidArgument,
        Error::Config { .. } | Error::Json(_) => VslStatus::Config,
        Error::Invariant { .. } => VslStatus::Invariant,
        Error::Io { .. } | Error::Csv(_) => VslStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (VslStatus, String)>) -> VslStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VslStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            VslStatus::Panic
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (VslStatus, String)>;
}

impl<T> IntoFfi<T> for vsl_core::Result<T> {
    fn ffi(self) -> Result<T, (VslStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), (VslStatus, String)> {
    if p.is_null() {
        Err((VslStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// Copies `s` NUL-terminated into `buf` (capacity `cap`) and stores the
/// length without the terminator in `len_out`. With a null or short buffer
/// only the length is reported and the status is `OutOfRange`.
unsafe fn copy_str(
    s: &str,
    buf: *mut c_char,
    cap: usize,
    len_out: *mut usize,
) -> Result<(), (VslStatus, String)> {
    if !len_out.is_null() {
        *len_out = s.len();
    }
    if buf.is_null() || cap < s.len() + 1 {
        return Err((
            VslStatus::OutOfRange,
            format!(
                "buffer of {cap} bytes cannot hold {} bytes plus terminator",
                s.len()
            ),
        ));
    }
    ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
    *buf.add(s.len()) = 0;
    Ok(())
}

/// Copies the calling thread's last error message; see [`VslStatus`].
/// Returns the message length (excluding the terminator) regardless of
/// whether it fit.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn vsl_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && cap > 0 {
            let n = e.len().min(cap - 1);
            ptr::copy_nonoverlapping(e.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn vsl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Model

/// Fundamental diagram plus bottleneck.
pub struct VslModel(LaneDrop);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VslConstants {
    pub k_c: f64,
    pub k_1: f64,
    pub k_2: f64,
    pub k_3: f64,
    pub v_1: f64,
    pub v_2: f64,
}

/// # Safety
/// `out` must be a valid pointer; the handle written there is owned by the caller.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_new(
    v_f: f64,
    w: f64,
    k_j: f64,
    capacity: f64,
    delta: f64,
    out: *mut *mut VslModel,
) -> VslStatus {
    guard(|| {
        non_null(out, "out")?;
        let fd = FundamentalDiagram::new(v_f, w, k_j).ffi()?;
        let b = Bottleneck::new(&fd, capacity, delta).ffi()?;
        let m = LaneDrop::new(fd, b).ffi()?;
        *out = Box::into_raw(Box::new(VslModel(m)));
        Ok(())
    })
}

/// The reference parameter set (v_f 30, w 35/8, k_j 2/7, C 6/11, delta 0.2).
///
/// # Safety
/// As [`vsl_model_new`].
#[no_mangle]
pub unsafe extern "C" fn vsl_model_reference(out: *mut *mut VslModel) -> VslStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = Box::into_raw(Box::new(VslModel(LaneDrop::reference())));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_free(model: *mut VslModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_constants(
    model: *const VslModel,
    out: *mut VslConstants,
) -> VslStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let c = (*model).0.constants;
        *out = VslConstants {
            k_c: c.k_c,
            k_1: c.k_1,
            k_2: c.k_2,
            k_3: c.k_3,
            v_1: c.v_1,
            v_2: c.v_2,
        };
        Ok(())
    })
}

/// Bottleneck discharge at density `k`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_discharge(
    model: *const VslModel,
    k: f64,
    out: *mut f64,
) -> VslStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = (*model).0.discharge_flux(k).ffi()?;
        Ok(())
    })
}

/// Speed-limited in-flux for demand `d_minus`, limit `u` and downstream density `k`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_inflow(
    model: *const VslModel,
    d_minus: f64,
    u: f64,
    k: f64,
    out: *mut f64,
) -> VslStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        *out = (*model).0.inflow_flux(d_minus, u, k).ffi()?;
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VslRegime {
    Uncongested = 0,
    Congested = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VslBasin {
    Any = 0,
    AtMostK1 = 1,
    AboveK1 = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct VslEquilibrium {
    pub k_star: f64,
    pub u_star: f64,
    pub g_star: f64,
    pub regime: VslRegime,
    pub basin: VslBasin,
}

/// Equilibria under a constant speed limit. At most two exist; pass `cap >= 2`
/// to be safe. `count_out` receives the number found even when `cap` is too small.
///
/// # Safety
/// `out` must point to `cap` writable elements; `count_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn vsl_model_open_loop_equilibria(
    model: *const VslModel,
    d_minus: f64,
    u_star: f64,
    out: *mut VslEquilibrium,
    cap: usize,
    count_out: *mut usize,
) -> VslStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(count_out, "count_out")?;
        let eqs = analysis::open_loop_equilibria(&(*model).0, d_minus, u_star).ffi()?;
        *count_out = eqs.len();
        if eqs.len() > cap || (out.is_null() && !eqs.is_empty()) {
            return Err((
                VslStatus::OutOfRange,
                format!("{} equilibria do not fit in {cap} slots", eqs.len()),
            ));
        }
        for (i, eq) in eqs.iter().enumerate() {
            *out.add(i) = VslEquilibrium {
                k_star: eq.k_star,
                u_star: eq.u_star,
                g_star: eq.g_star,
                regime: match eq.regime {
                    Regime::Uncongested => VslRegime::Uncongested,
                    Regime::Congested => VslRegime::Congested,
                },
                basin: match eq.basin {
                    Basin::Any => VslBasin::Any,
                    Basin::AtMostK1 => VslBasin::AtMostK1,
                    Basin::AboveK1 => VslBasin::AboveK1,
                },
            };
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// Scenarios and traces

/// A validated scenario configuration.
pub struct VslScenario(ScenarioConfig);

/// The records and summary of a completed run.
pub struct VslTrace(ScenarioTrace);

/// Parses and validates a scenario from NUL-terminated UTF-8 JSON.
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_scenario_from_json(
    json: *const c_char,
    out: *mut *mut VslScenario,
) -> VslStatus {
    guard(|| {
        non_null(json, "json")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (VslStatus::Config, format!("json is not UTF-8: {e}")))?;
        let cfg = ScenarioConfig::from_json_str(text).ffi()?;
        *out = Box::into_raw(Box::new(VslScenario(cfg)));
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsl_scenario_free(scenario: *mut VslScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsl_scenario_set_seed(scenario: *mut VslScenario, seed: u64) -> VslStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        (*scenario).0.seed = seed;
        Ok(())
    })
}

/// Runs the scenario to its horizon, keeping the full trace.
///
/// # Safety
/// `scenario` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_scenario_run(
    scenario: *const VslScenario,
    out: *mut *mut VslTrace,
) -> VslStatus {
    guard(|| {
        non_null(scenario, "scenario")?;
        non_null(out, "out")?;
        let trace = engine::run(&(*scenario).0).ffi()?;
        *out = Box::into_raw(Box::new(VslTrace(trace)));
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_free(trace: *mut VslTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of step records (0 for a null handle).
///
/// # Safety
/// `trace` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_len(trace: *const VslTrace) -> usize {
    if trace.is_null() {
        0
    } else {
        (*trace).0.records.len()
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VslStepRecord {
    pub t: f64,
    pub k_obs: f64,
    pub u: f64,
    pub f: f64,
    pub g: f64,
    pub lambda: f64,
    pub d_minus: f64,
    pub r: f64,
    /// Number of cell densities available through [`vsl_trace_field`].
    pub n_cells: usize,
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_record(
    trace: *const VslTrace,
    index: usize,
    out: *mut VslStepRecord,
) -> VslStatus {
    guard(|| {
        non_null(trace, "trace")?;
        non_null(out, "out")?;
        let recs = &(*trace).0.records;
        let rec = recs.get(index).ok_or_else(|| {
            (
                VslStatus::OutOfRange,
                format!("record {index} of {}", recs.len()),
            )
        })?;
        *out = VslStepRecord {
            t: rec.t,
            k_obs: rec.k_obs,
            u: rec.u,
            f: rec.f,
            g: rec.g,
            lambda: rec.lambda,
            d_minus: rec.d_minus,
            r: rec.r,
            n_cells: rec.field.len(),
        };
        Ok(())
    })
}

/// Copies the cell densities of record `index` into `out` (capacity `cap`).
///
/// # Safety
/// `trace` must be a live handle and `out` must point to `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_field(
    trace: *const VslTrace,
    index: usize,
    out: *mut f64,
    cap: usize,
) -> VslStatus {
    guard(|| {
        non_null(trace, "trace")?;
        let recs = &(*trace).0.records;
        let rec = recs.get(index).ok_or_else(|| {
            (
                VslStatus::OutOfRange,
                format!("record {index} of {}", recs.len()),
            )
        })?;
        if rec.field.len() > cap || (out.is_null() && !rec.field.is_empty()) {
            return Err((
                VslStatus::OutOfRange,
                format!("{} cells do not fit in {cap} slots", rec.field.len()),
            ));
        }
        ptr::copy_nonoverlapping(rec.field.as_ptr(), out, rec.field.len());
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct VslSummary {
    pub steps: usize,
    /// NaN when no vehicle departed.
    pub avg_travel_time: f64,
    pub total_arrivals: f64,
    pub total_departures: f64,
    pub late_mean_discharge: f64,
    pub late_min_discharge: f64,
    pub late_max_discharge: f64,
    pub late_mean_k_obs: f64,
    pub capacity_drop_steps: usize,
    pub late_capacity_drop_steps: usize,
    pub max_step_conservation_error: f64,
    pub max_cumulative_conservation_error: f64,
}

/// # Safety
/// `trace` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_summary(
    trace: *const VslTrace,
    out: *mut VslSummary,
) -> VslStatus {
    guard(|| {
        non_null(trace, "trace")?;
        non_null(out, "out")?;
        let s = &(*trace).0.summary;
        *out = VslSummary {
            steps: s.steps,
            avg_travel_time: s.avg_travel_time.unwrap_or(f64::NAN),
            total_arrivals: s.total_arrivals,
            total_departures: s.total_departures,
            late_mean_discharge: s.late_mean_discharge,
            late_min_discharge: s.late_min_discharge,
            late_max_discharge: s.late_max_discharge,
            late_mean_k_obs: s.late_mean_k_obs,
            capacity_drop_steps: s.capacity_drop_steps,
            late_capacity_drop_steps: s.late_capacity_drop_steps,
            max_step_conservation_error: s.max_step_conservation_error,
            max_cumulative_conservation_error: s.max_cumulative_conservation_error,
        };
        Ok(())
    })
}

/// Full summary as JSON; see [`copy_str`] semantics for `buf`, `cap`, `len_out`.
///
/// # Safety
/// `trace` must be a live handle; `buf` must be null or point to `cap`
/// writable bytes; `len_out` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn vsl_trace_summary_json(
    trace: *const VslTrace,
    buf: *mut c_char,
    cap: usize,
    len_out: *mut usize,
) -> VslStatus {
    guard(|| {
        non_null(trace, "trace")?;
        let json = serde_json::to_string(&(*trace).0.summary)
            .map_err(|e| (VslStatus::Panic, e.to_string()))?;
        copy_str(&json, buf, cap, len_out)
    })
}
