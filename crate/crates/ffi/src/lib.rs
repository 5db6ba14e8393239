//! C interface to the `ticksize` library.
//!
//! Every function returns a [`TsStatus`]; on failure the message is kept
//! per thread and read with [`ts_last_error_message`]. Objects cross the
//! boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Strings returned to the caller are released with
//! [`ts_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ticksize::distfit::triangular_density;
use ticksize::epps::{corrected_corr_price_changes, corrected_corr_returns, CorrectionOptions, CorrectionReport};
use ticksize::microstructure::subset_bounds;
use ticksize::series::{build_returns, PriceSeries, ReturnSeries, Windowing};
use ticksize::sim::{epps_experiment, EppsExperiment, SimConfig};
use ticksize::{Error, TickSize};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    EmptyInput = 3,
    Degenerate = 4,
    FitFailed = 5,
    MemoryBudget = 6,
    Io = 7,
    Panic = 8,
    OutOfRange = 9,
}

pub struct TsReturnSeries(ReturnSeries);
pub struct TsExperiment(EppsExperiment);
pub struct TsReport(CorrectionReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsBounds {
    pub min: f64,
    pub max: f64,
    pub spacing: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TsEppsPoint {
    pub dt: u32,
    pub raw: f64,
    pub compensated: f64,
    pub raw_price_changes: f64,
    pub compensated_price_changes: f64,
    pub ground_truth_c: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::EmptyInput(_) => TsStatus::EmptyInput,
        Error::Degenerate(_) => TsStatus::Degenerate,
        Error::Fit { .. } => TsStatus::FitFailed,
        Error::MemoryBudget { .. } => TsStatus::MemoryBudget,
        Error::Io(_) | Error::Csv(_) => TsStatus::Io,
        _ => TsStatus::InvalidArgument,
    }
}

struct Fail(TsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TsStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic".into());
            TsStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(TsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(TsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Optional JSON argument: null means defaults.
unsafe fn json_arg<T: serde::de::DeserializeOwned + Default>(p: *const c_char, what: &str) -> Result<T, Fail> {
    if p.is_null() {
        return Ok(T::default());
    }
    serde_json::from_str(str_arg(p, what)?)
        .map_err(|e| Fail(TsStatus::InvalidArgument, format!("{what}: {e}")))
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

/// Message of the last failed call on this thread, or null. The caller
/// owns the returned string.
#[no_mangle]
pub extern "C" fn ts_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match &*e.borrow() {
        Some(m) => m.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Density of the difference of two uniform rounding errors on `[-q/2, q/2]`,
/// centered at `center`.
#[no_mangle]
pub unsafe extern "C" fn ts_triangular_density(x: f64, center: f64, q: f64, out: *mut f64) -> TsStatus {
    guard(|| {
        if !(q > 0.0 && q.is_finite()) {
            return Err(Fail(TsStatus::InvalidArgument, format!("tick size {q} must be positive")));
        }
        write_out(out, triangular_density(x, center, q), "out")
    })
}

/// Support interval and band spacing of the returns with price change `n`.
#[no_mangle]
pub unsafe extern "C" fn ts_subset_bounds(n: i64, q: f64, s_min: f64, s_max: f64, out: *mut TsBounds) -> TsStatus {
    guard(|| {
        let b = subset_bounds(n, q, s_min, s_max)?;
        write_out(
            out,
            TsBounds {
                min: b.min,
                max: b.max,
                spacing: b.spacing,
            },
            "out",
        )
    })
}

/// Non-overlapping returns of a price path given in ticks on a unit grid.
/// `q` is the tick size as a decimal string.
#[no_mangle]
pub unsafe extern "C" fn ts_returns_from_prices(
    prices: *const i64,
    len: usize,
    q: *const c_char,
    dt: u32,
    out: *mut *mut TsReturnSeries,
) -> TsStatus {
    guard(|| {
        if prices.is_null() && len > 0 {
            return Err(null("prices"));
        }
        let q = TickSize::parse(str_arg(q, "q")?)?;
        let slice = if len == 0 { &[][..] } else { std::slice::from_raw_parts(prices, len) };
        let series = PriceSeries::from_prices("ffi", q, 0, slice)?;
        let r = build_returns(&series, dt, Windowing::NonOverlapping)?;
        write_out(out, Box::into_raw(Box::new(TsReturnSeries(r))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_returns_len(h: *const TsReturnSeries, out: *mut usize) -> TsStatus {
    guard(|| write_out(out, deref(h, "series")?.0.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn ts_returns_free(h: *mut TsReturnSeries) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Run the simulated Epps experiment. `config_json` may be null for the
/// default configuration; unknown keys are rejected.
#[no_mangle]
pub unsafe extern "C" fn ts_simulate(config_json: *const c_char, out: *mut *mut TsExperiment) -> TsStatus {
    guard(|| {
        let cfg: SimConfig = json_arg(config_json, "config")?;
        let e = epps_experiment(&cfg)?;
        write_out(out, Box::into_raw(Box::new(TsExperiment(e))), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_experiment_len(h: *const TsExperiment, out: *mut usize) -> TsStatus {
    guard(|| write_out(out, deref(h, "experiment")?.0.points.len(), "out"))
}

#[no_mangle]
pub unsafe extern "C" fn ts_experiment_point(h: *const TsExperiment, index: usize, out: *mut TsEppsPoint) -> TsStatus {
    guard(|| {
        let e = &deref(h, "experiment")?.0;
        let p = e
            .points
            .get(index)
            .ok_or_else(|| Fail(TsStatus::OutOfRange, format!("index {index} >= {}", e.points.len())))?;
        write_out(
            out,
            TsEppsPoint {
                dt: p.dt,
                raw: p.raw,
                compensated: p.compensated,
                raw_price_changes: p.raw_price_changes,
                compensated_price_changes: p.compensated_price_changes,
                ground_truth_c: p.ground_truth_c,
            },
            "out",
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_experiment_free(h: *mut TsExperiment) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

unsafe fn correct(
    r1: *const TsReturnSeries,
    r2: *const TsReturnSeries,
    options_json: *const c_char,
    out: *mut *mut TsReport,
    f: fn(&ReturnSeries, &ReturnSeries, &CorrectionOptions) -> ticksize::Result<CorrectionReport>,
) -> TsStatus {
    guard(|| {
        let opts: CorrectionOptions = json_arg(options_json, "options")?;
        let report = f(&deref(r1, "r1")?.0, &deref(r2, "r2")?.0, &opts)?;
        write_out(out, Box::into_raw(Box::new(TsReport(report))), "out")
    })
}

/// Compensated return correlation. `options_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn ts_correct_returns(
    r1: *const TsReturnSeries,
    r2: *const TsReturnSeries,
    options_json: *const c_char,
    out: *mut *mut TsReport,
) -> TsStatus {
    correct(r1, r2, options_json, out, corrected_corr_returns)
}

/// Compensated price-change correlation. `options_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn ts_correct_price_changes(
    r1: *const TsReturnSeries,
    r2: *const TsReturnSeries,
    options_json: *const c_char,
    out: *mut *mut TsReport,
) -> TsStatus {
    correct(r1, r2, options_json, out, corrected_corr_price_changes)
}

#[no_mangle]
pub unsafe extern "C" fn ts_report_raw(h: *const TsReport, out: *mut f64) -> TsStatus {
    guard(|| write_out(out, deref(h, "report")?.0.raw, "out"))
}

#[no_mangle]
pub unsafe extern "C" fn ts_report_compensated(h: *const TsReport, out: *mut f64) -> TsStatus {
    guard(|| write_out(out, deref(h, "report")?.0.compensated, "out"))
}

/// Value of one named correction term.
#[no_mangle]
pub unsafe extern "C" fn ts_report_term(h: *const TsReport, name: *const c_char, out: *mut f64) -> TsStatus {
    guard(|| {
        let r = &deref(h, "report")?.0;
        let id = str_arg(name, "name")?.parse()?;
        write_out(out, r.term(id), "out")
    })
}

/// The full report as JSON; the caller owns the string.
#[no_mangle]
pub unsafe extern "C" fn ts_report_json(h: *const TsReport, out: *mut *mut c_char) -> TsStatus {
    guard(|| {
        let r = &deref(h, "report")?.0;
        let text = r.to_json().map_err(|e| Fail(TsStatus::InvalidArgument, e.to_string()))?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_out(out, owned_string(text), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn ts_report_free(h: *mut TsReport) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}
