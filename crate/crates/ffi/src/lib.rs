//! C ABI over `brightbeam`.
//!
//! States and scenarios are opaque handles owned by the caller and released
//! with the matching `_free` function. Every fallible call returns a
//! [`BbStatus`]; on failure the message is available from
//! [`bb_last_error_message`] on the same thread. Handles are immutable, so
//! sharing them between threads is safe.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use brightbeam::entanglement::{duan_simon, generate_entangled_correlated};
use brightbeam::gaussian::{
    apply_beamsplitter, apply_loss, apply_phase, compose_correlated, db_to_var, make_coherent, make_squeezed,
    var_to_db, BrightGaussianState, SqueezedInputSpec,
};
use brightbeam::harness::{load_scenario, parse_scenario, run_scenario, Method, Scenario};
use brightbeam::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BbStatus {
    Ok = 0,
    NullPointer = 1,
    /// Argument out of range or scenario validation failure.
    InvalidArgument = 2,
    /// The configuration leaves a required carrier dark.
    Degenerate = 3,
    /// File access or scenario parsing failed.
    Io = 4,
    /// A panic was caught at the boundary; treat the library as unusable.
    Panic = 5,
}

/// Opaque Gaussian state.
pub struct BbState(BrightGaussianState);

/// Opaque scenario.
pub struct BbScenario(Scenario);

/// Squeezed input beam. A negative `correlated_group` means the input shares
/// no classical phase noise with others.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct BbSqueezedInput {
    pub amplitude: f64,
    pub squeezing_db: f64,
    pub antisqueezing_db: f64,
    pub excess_phase_db: f64,
    pub correlated_group: i64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BbWitnessReport {
    pub v_sq_plus: f64,
    pub v_sq_minus: f64,
    pub gain: f64,
    pub sum: f64,
    pub product: f64,
    pub bound: f64,
    pub witnessed: bool,
}

/// Scenario outcome. Fields without a value are NaN: the separate
/// correlations of a single-port measurement and the Monte-Carlo columns
/// when sampling is off.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct BbReport {
    /// `'A'`, `'B'` or `'C'`.
    pub method: c_char,
    pub v_sq_plus: f64,
    pub v_sq_minus: f64,
    pub sum: f64,
    pub bound: f64,
    pub witnessed: bool,
    pub mc_sum: f64,
    pub mc_stderr: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: Error) -> BbStatus {
    let code = match &e {
        Error::Domain(_) | Error::Validation { .. } => BbStatus::InvalidArgument,
        Error::Degenerate(_) => BbStatus::Degenerate,
        Error::Parse { .. } | Error::Io(_) => BbStatus::Io,
    };
    set_error(e.to_string());
    code
}

/// Runs `f` behind a panic guard and maps its error onto a status.
fn guard(f: impl FnOnce() -> Result<(), BbStatus>) -> BbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BbStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("panic inside brightbeam".to_string());
            BbStatus::Panic
        }
    }
}

fn null(what: &str) -> BbStatus {
    set_error(format!("{what} is NULL"));
    BbStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, BbStatus> {
    // SAFETY: the caller passes a pointer obtained from this library or a valid struct.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn emit_state(out: *mut *mut BbState, state: Result<BrightGaussianState, Error>) -> Result<(), BbStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let state = state.map_err(status_of)?;
    // SAFETY: `out` is non-null and points to writable storage per the contract.
    unsafe { *out = Box::into_raw(Box::new(BbState(state))) };
    Ok(())
}

fn to_spec(s: &BbSqueezedInput) -> SqueezedInputSpec {
    SqueezedInputSpec {
        amplitude: s.amplitude,
        squeezing_db: s.squeezing_db,
        antisqueezing_db: s.antisqueezing_db,
        excess_phase_db: s.excess_phase_db,
        correlated_group: u32::try_from(s.correlated_group).ok(),
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, BbStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: non-null, NUL-terminated per the contract.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| {
        set_error(format!("{what} is not valid UTF-8"));
        BbStatus::InvalidArgument
    })
}

/// Message of the last failed call on this thread, or NULL after a success.
/// The pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn bb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn bb_state_coherent(amplitude: f64, out: *mut *mut BbState) -> BbStatus {
    guard(|| unsafe { emit_state(out, make_coherent(amplitude)) })
}

/// # Safety
/// `spec` must point to a valid input description and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_state_squeezed(spec: *const BbSqueezedInput, out: *mut *mut BbState) -> BbStatus {
    guard(|| unsafe {
        let spec = deref(spec, "spec")?;
        emit_state(out, make_squeezed(&to_spec(spec)))
    })
}

/// Tensor product `a ⊗ b`; inputs of one correlation group share their
/// classical phase noise with the given correlation in [0, 1].
///
/// # Safety
/// `a` and `b` must be live handles and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_state_compose(
    a: *const BbState,
    b: *const BbState,
    correlation: f64,
    out: *mut *mut BbState,
) -> BbStatus {
    guard(|| unsafe {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        emit_state(out, compose_correlated(&[a.0.clone(), b.0.clone()], correlation))
    })
}

/// # Safety
/// `state` must be a live handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_state_beamsplitter(
    state: *const BbState,
    i: usize,
    j: usize,
    ratio: f64,
    theta: f64,
    out: *mut *mut BbState,
) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        emit_state(out, apply_beamsplitter(&s.0, i, j, ratio, theta))
    })
}

/// # Safety
/// `state` must be a live handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_state_loss(state: *const BbState, mode: usize, eta: f64, out: *mut *mut BbState) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        emit_state(out, apply_loss(&s.0, mode, eta))
    })
}

/// # Safety
/// `state` must be a live handle and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_state_phase(state: *const BbState, mode: usize, phi: f64, out: *mut *mut BbState) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        emit_state(out, apply_phase(&s.0, mode, phi))
    })
}

/// Number of modes, or 0 for a NULL handle.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn bb_state_num_modes(state: *const BbState) -> usize {
    // SAFETY: NULL or live per the contract.
    unsafe { state.as_ref() }.map_or(0, |s| s.0.num_modes())
}

/// # Safety
/// `state` must be a live handle and `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn bb_state_amplitude(state: *const BbState, mode: usize, out: *mut f64) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if mode >= s.0.num_modes() {
            set_error(format!("mode {mode} out of range for {} modes", s.0.num_modes()));
            return Err(BbStatus::InvalidArgument);
        }
        *out = s.0.amplitude(mode);
        Ok(())
    })
}

/// Copies the `2n × 2n` covariance, row-major in `(X₀, Y₀, X₁, Y₁, …)` order.
/// `len` is the capacity of `buf` in doubles and must be at least `4n²`.
///
/// # Safety
/// `state` must be a live handle and `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bb_state_covariance(state: *const BbState, buf: *mut f64, len: usize) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let cov = s.0.cov();
        let dim = cov.nrows();
        if len < dim * dim {
            set_error(format!("buffer holds {len} values, covariance needs {}", dim * dim));
            return Err(BbStatus::InvalidArgument);
        }
        let out = std::slice::from_raw_parts_mut(buf, dim * dim);
        for r in 0..dim {
            for c in 0..dim {
                out[r * dim + c] = cov[(r, c)];
            }
        }
        Ok(())
    })
}

/// # Safety
/// `state` must be NULL or a handle from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bb_state_free(state: *mut BbState) {
    if !state.is_null() {
        // SAFETY: allocated by `Box::into_raw` in `emit_state`.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Interferes two squeezed inputs on a splitter of intensity `ratio` at
/// relative phase `theta`.
///
/// # Safety
/// `a` and `b` must point to valid input descriptions and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_generate_entangled(
    a: *const BbSqueezedInput,
    b: *const BbSqueezedInput,
    theta: f64,
    ratio: f64,
    excess_correlation: f64,
    out: *mut *mut BbState,
) -> BbStatus {
    guard(|| unsafe {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        emit_state(out, generate_entangled_correlated(&to_spec(a), &to_spec(b), theta, ratio, excess_correlation))
    })
}

/// Sum and product criteria of a two-mode state at gain `g`.
///
/// # Safety
/// `state` must be a live handle and `out` must point to a writable report.
#[no_mangle]
pub unsafe extern "C" fn bb_duan_simon(state: *const BbState, g: f64, out: *mut BbWitnessReport) -> BbStatus {
    guard(|| unsafe {
        let s = deref(state, "state")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = duan_simon(&s.0, g).map_err(status_of)?;
        *out = BbWitnessReport {
            v_sq_plus: r.v_sq_plus_x,
            v_sq_minus: r.v_sq_minus_y,
            gain: r.gain_used,
            sum: r.sum_value,
            product: r.product_value,
            bound: r.bound,
            witnessed: r.witnessed,
        };
        Ok(())
    })
}

unsafe fn emit_scenario(out: *mut *mut BbScenario, s: Result<Scenario, Error>) -> Result<(), BbStatus> {
    if out.is_null() {
        return Err(null("out"));
    }
    let s = s.map_err(status_of)?;
    // SAFETY: non-null, writable per the contract.
    unsafe { *out = Box::into_raw(Box::new(BbScenario(s))) };
    Ok(())
}

/// Loads and validates a scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_load(path: *const c_char, out: *mut *mut BbScenario) -> BbStatus {
    guard(|| unsafe {
        let path = c_str(path, "path")?;
        emit_scenario(out, load_scenario(path))
    })
}

/// Parses and validates scenario text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must point to writable storage.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_parse(text: *const c_char, out: *mut *mut BbScenario) -> BbStatus {
    guard(|| unsafe {
        let text = c_str(text, "text")?;
        emit_scenario(out, parse_scenario(text))
    })
}

/// # Safety
/// `scenario` must be a live handle and `out` must point to a writable report.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_run(scenario: *const BbScenario, out: *mut BbReport) -> BbStatus {
    guard(|| unsafe {
        let s = deref(scenario, "scenario")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let row = run_scenario(&s.0).map_err(status_of)?;
        let method = match row.method {
            Method::A => b'A',
            Method::B => b'B',
            Method::C => b'C',
        };
        *out = BbReport {
            method: method as c_char,
            v_sq_plus: row.v_sq_plus.unwrap_or(f64::NAN),
            v_sq_minus: row.v_sq_minus.unwrap_or(f64::NAN),
            sum: row.sum,
            bound: row.bound,
            witnessed: row.witnessed,
            mc_sum: row.mc.map_or(f64::NAN, |m| m.sum),
            mc_stderr: row.mc.map_or(f64::NAN, |m| m.stderr),
        };
        Ok(())
    })
}

/// # Safety
/// `scenario` must be NULL or a handle from this library that is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bb_scenario_free(scenario: *mut BbScenario) {
    if !scenario.is_null() {
        // SAFETY: allocated by `Box::into_raw` in `emit_scenario`.
        drop(unsafe { Box::from_raw(scenario) });
    }
}

/// Variance for a level `db` decibels above shot noise.
#[no_mangle]
pub extern "C" fn bb_db_to_var(db: f64) -> f64 {
    db_to_var(db)
}

/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn bb_var_to_db(v: f64, out: *mut f64) -> BbStatus {
    guard(|| unsafe {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = var_to_db(v).map_err(status_of)?;
        Ok(())
    })
}
