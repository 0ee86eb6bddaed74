//! C ABI over `lrb-core`.
//!
//! Models are opaque handles built from the same JSON configuration the
//! `lrb` binary reads. Every entry point returns an [`LrbStatus`]; results go
//! through out-pointers. After a non-zero status, [`lrb_last_error`] holds a
//! message for the calling thread. Strings returned by the library are freed
//! with [`lrb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lrb_core::bridges::{cauchy_bridge_density, stable_half_bridge_cdf};
use lrb_core::cli::{json_17, price_value, reserve_value, ModelConfig};
use lrb_core::error::LrbError;
use lrb_core::lrb::LrbSpec;
use lrb_core::simulate::{sample_path, RngStream, SimOptions};

/// Status codes shared by every function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrbStatus {
    Ok = 0,
    /// Null pointer, invalid UTF-8, short buffer or malformed configuration.
    InvalidArgument = 1,
    /// Argument outside the domain, or terminal law inconsistent with the family.
    Domain = 2,
    Unsupported = 3,
    /// A series, quadrature or sampler missed its tolerance.
    Numeric = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

/// Opaque model handle.
pub struct LrbModel {
    config: ModelConfig,
    spec: LrbSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &LrbError) -> LrbStatus {
    match e {
        LrbError::Config(_) => LrbStatus::InvalidArgument,
        LrbError::Domain(_) | LrbError::Model(_) => LrbStatus::Domain,
        LrbError::Unsupported(_) => LrbStatus::Unsupported,
        LrbError::Numeric { .. } => LrbStatus::Numeric,
    }
}

struct Fail(LrbStatus, String);

impl From<LrbError> for Fail {
    fn from(e: LrbError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn invalid(msg: &str) -> Fail {
    Fail(LrbStatus::InvalidArgument, msg.to_owned())
}

/// Runs `f`, records any error and converts panics into [`LrbStatus::Panic`].
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LrbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LrbStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            LrbStatus::Panic
        }
    }
}

unsafe fn model<'a>(m: *const LrbModel) -> Result<&'a LrbModel, Fail> {
    m.as_ref().ok_or_else(|| invalid("null model handle"))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(invalid("null output pointer"));
    }
    out.write(v);
    Ok(())
}

unsafe fn string_out(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| invalid("output contains a NUL byte"))?;
    write(out, c.into_raw())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn lrb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Frees a string returned through an out-pointer. Null is ignored.
///
/// # Safety
/// `s` must come from this library and must not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lrb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a model from a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_from_json(json: *const c_char, out: *mut *mut LrbModel) -> LrbStatus {
    guard(|| {
        if json.is_null() {
            return Err(invalid("null configuration"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| invalid("configuration is not UTF-8"))?;
        let config = ModelConfig::from_json(text)?;
        let spec = config.spec()?;
        write(out, Box::into_raw(Box::new(LrbModel { config, spec })))
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `m` must come from [`lrb_model_from_json`] and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_free(m: *mut LrbModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Horizon `T` of the model.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_horizon(m: *const LrbModel, out: *mut f64) -> LrbStatus {
    guard(|| write(out, model(m)?.spec.horizon))
}

/// `psi_t(xi)`, the likelihood ratio of the bridge against the Lévy process.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_psi(m: *const LrbModel, t: f64, xi: f64, out: *mut f64) -> LrbStatus {
    guard(|| write(out, model(m)?.spec.psi(t, xi)?))
}

/// Density of `xi_t` at `y` given `xi_s = x`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_transition_density(
    m: *const LrbModel,
    s: f64,
    x: f64,
    t: f64,
    y: f64,
    out: *mut f64,
) -> LrbStatus {
    guard(|| write(out, model(m)?.spec.transition_density(s, x, t, y)?))
}

/// Density of `xi_t` at `y` from the origin.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_marginal_density(m: *const LrbModel, t: f64, y: f64, out: *mut f64) -> LrbStatus {
    guard(|| write(out, model(m)?.spec.marginal_density(t, y)?))
}

/// `E[xi_T | xi_s = xi]`.
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_terminal_mean(m: *const LrbModel, s: f64, xi: f64, out: *mut f64) -> LrbStatus {
    guard(|| write(out, model(m)?.spec.condition(s, xi)?.terminal_mean()?))
}

/// Samples `n_paths` paths on `grid` into `values`, row-major with one row per
/// path. Path `i` uses stream `i` of `seed`, so output matches `lrb simulate`.
///
/// # Safety
/// `grid` must hold `n_grid` values and `values` room for `n_paths * n_grid`.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_sample_paths(
    m: *const LrbModel,
    grid: *const f64,
    n_grid: usize,
    n_paths: usize,
    seed: u64,
    values: *mut f64,
    values_len: usize,
) -> LrbStatus {
    guard(|| {
        let m = model(m)?;
        if grid.is_null() || values.is_null() {
            return Err(invalid("null grid or value buffer"));
        }
        let need = n_paths.checked_mul(n_grid).ok_or_else(|| invalid("path buffer size overflows"))?;
        if values_len < need {
            return Err(invalid("value buffer is too short"));
        }
        let grid = std::slice::from_raw_parts(grid, n_grid);
        let dst = std::slice::from_raw_parts_mut(values, need);
        let opts = SimOptions { vg_method: m.config.vg_method.unwrap_or_default(), ..SimOptions::default() };
        for (i, row) in dst.chunks_exact_mut(n_grid.max(1)).enumerate().take(n_paths) {
            let p = sample_path(&m.spec, grid, &opts, RngStream::new(seed, i as u64))?;
            row.copy_from_slice(&p.values);
        }
        Ok(())
    })
}

/// Prices the configured instrument; the result is the JSON document that
/// `lrb price` prints.
///
/// # Safety
/// `m` must be a live handle and `out` writable. Free the string with
/// [`lrb_string_free`].
#[no_mangle]
pub unsafe extern "C" fn lrb_model_price_json(m: *const LrbModel, seed: u64, out: *mut *mut c_char) -> LrbStatus {
    guard(|| {
        let v = price_value(&model(m)?.config, seed)?;
        string_out(out, json_17(&v))
    })
}

/// Reserve report for a paid-claims history of `n` points `(times[i], paid[i])`;
/// `n` may be zero. The result is the JSON document that `lrb reserve` prints.
///
/// # Safety
/// `times` and `paid` must hold `n` values and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_model_reserve_json(
    m: *const LrbModel,
    times: *const f64,
    paid: *const f64,
    n: usize,
    out: *mut *mut c_char,
) -> LrbStatus {
    guard(|| {
        let m = model(m)?;
        let claims: Vec<(f64, f64)> = if n == 0 {
            Vec::new()
        } else {
            if times.is_null() || paid.is_null() {
                return Err(invalid("null claims arrays"));
            }
            let (t, x) = (std::slice::from_raw_parts(times, n), std::slice::from_raw_parts(paid, n));
            t.iter().copied().zip(x.iter().copied()).collect()
        };
        for w in claims.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(invalid("claims must increase strictly in time and paid amount"));
            }
        }
        let v = reserve_value(&m.config, &claims, None, &[])?;
        string_out(out, json_17(&v))
    })
}

/// CDF of the stable-1/2 bridge from 0 to `z` over `[0, horizon]`, at time `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_stable_half_bridge_cdf(
    t: f64,
    horizon: f64,
    y: f64,
    z: f64,
    c: f64,
    out: *mut f64,
) -> LrbStatus {
    guard(|| {
        if !(t > 0.0 && t < horizon && z > 0.0 && c > 0.0) {
            return Err(Fail(LrbStatus::Domain, "needs 0 < t < horizon, z > 0, c > 0".into()));
        }
        write(out, stable_half_bridge_cdf(t, horizon, y, z, c))
    })
}

/// Density of the Cauchy bridge from 0 to `z` over `[0, horizon]`, at time `t`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrb_cauchy_bridge_density(
    t: f64,
    horizon: f64,
    y: f64,
    z: f64,
    c: f64,
    out: *mut f64,
) -> LrbStatus {
    guard(|| {
        if !(t > 0.0 && t < horizon && c > 0.0) {
            return Err(Fail(LrbStatus::Domain, "needs 0 < t < horizon, c > 0".into()));
        }
        write(out, cauchy_bridge_density(t, horizon, y, z, c))
    })
}
