//! C ABI for the thermobeam model.
//!
//! A model is built from a flat TOML config into an opaque `TbSystem` handle. Every
//! fallible call returns a `TbStatus`; on failure the message is kept per thread and read
//! back with `tb_last_error`. Output pointers are written only on `TB_STATUS_OK`, except
//! the required length reported with `TB_STATUS_BUFFER_TOO_SMALL`.
//!
//! Handles are immutable after creation apart from a lazily filled spectrum cache, so a
//! handle may be shared across threads for reads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::OnceLock;

use thermobeam::assembly::{assemble, SemidiscreteSystem};
use thermobeam::dynamics::simulate;
use thermobeam::spectra::{eigenvalues, resolvent_norm, SpectrumReport};
use thermobeam::studies::config::parse_model;
use thermobeam::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TbStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Config text was not UTF-8, or a key or value was rejected.
    Config = 2,
    /// An argument is outside the operation's domain (length, time step, ...).
    InvalidArgument = 3,
    /// Factorization, eigensolver or time stepping failed.
    Numerical = 4,
    /// The caller's buffer is too short; the required length was written.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Internal = 6,
}

/// Opaque model handle.
pub struct TbSystem {
    sys: SemidiscreteSystem,
    spectrum: OnceLock<SpectrumReport>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: TbStatus, message: impl Into<String>) -> TbStatus {
    set_error(message.into());
    status
}

fn status_of(e: &Error) -> TbStatus {
    match e {
        _ if e.is_config_error() => TbStatus::Config,
        Error::Domain(_) | Error::Dimension { .. } | Error::InvalidKernel(_) | Error::Mesh(_) | Error::Logic(_) => {
            TbStatus::InvalidArgument
        }
        _ => TbStatus::Numerical,
    }
}

/// Runs `f` with panics and library errors mapped to status codes.
fn guard(f: impl FnOnce() -> Result<(), TbStatus>) -> TbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TbStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(TbStatus::Internal, format!("internal error: {msg}"))
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, TbStatus>;
}

impl<T> OrStatus<T> for thermobeam::Result<T> {
    fn or_status(self) -> Result<T, TbStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), TbStatus> {
    if p.is_null() {
        Err(fail(TbStatus::NullPointer, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `sys` must be null or a live handle.
unsafe fn handle<'a>(sys: *const TbSystem) -> Result<&'a TbSystem, TbStatus> {
    non_null(sys, "sys")?;
    Ok(&*sys)
}

/// # Safety
/// `ptr` must be valid for `len` reads when non-null.
unsafe fn state_slice<'a>(sys: &TbSystem, ptr: *const f64, len: usize) -> Result<&'a [f64], TbStatus> {
    non_null(ptr, "state")?;
    if len != sys.sys.dim() {
        return Err(fail(
            TbStatus::InvalidArgument,
            format!("state length {len} does not match dimension {}", sys.sys.dim()),
        ));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

fn spectrum(sys: &TbSystem) -> Result<&SpectrumReport, TbStatus> {
    if let Some(s) = sys.spectrum.get() {
        return Ok(s);
    }
    let report = eigenvalues(&sys.sys).or_status()?;
    Ok(sys.spectrum.get_or_init(|| report))
}

/// Message of the last failed call on this thread, or null. Valid until the next failing
/// call on the same thread.
#[no_mangle]
pub extern "C" fn tb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a model from flat TOML (`params.*`, `law.*`, `bcs`, `mesh.*`, `thermal`).
/// An empty string gives the default model.
///
/// # Safety
/// `config_toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_system_new(config_toml: *const c_char, out: *mut *mut TbSystem) -> TbStatus {
    guard(|| {
        non_null(config_toml, "config_toml")?;
        non_null(out, "out")?;
        let text = CStr::from_ptr(config_toml)
            .to_str()
            .map_err(|e| fail(TbStatus::Config, format!("config is not UTF-8: {e}")))?;
        let config = parse_model(text).or_status()?;
        let sys = assemble(&config).or_status()?;
        let boxed = Box::new(TbSystem {
            sys,
            spectrum: OnceLock::new(),
        });
        *out = Box::into_raw(boxed);
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sys` must be null or a handle from `tb_system_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tb_system_free(sys: *mut TbSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Length of a state vector.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_system_dim(sys: *const TbSystem, out: *mut usize) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        non_null(out, "out")?;
        *out = s.sys.dim();
        Ok(())
    })
}

/// Largest real part of the generator spectrum.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_spectral_abscissa(sys: *const TbSystem, out: *mut f64) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        non_null(out, "out")?;
        *out = spectrum(s)?.abscissa;
        Ok(())
    })
}

/// Copies all eigenvalues, sorted by decreasing real part, into `re` and `im`.
/// `len` receives the count; when `capacity` is smaller nothing is copied and
/// `TB_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `re` and `im` must be valid for `capacity` writes; `len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_eigenvalues(
    sys: *const TbSystem,
    re: *mut f64,
    im: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        non_null(len, "len")?;
        let eig = &spectrum(s)?.eigenvalues;
        *len = eig.len();
        if capacity < eig.len() {
            return Err(fail(
                TbStatus::BufferTooSmall,
                format!("{} eigenvalues, capacity {capacity}", eig.len()),
            ));
        }
        non_null(re, "re")?;
        non_null(im, "im")?;
        let re = std::slice::from_raw_parts_mut(re, eig.len());
        let im = std::slice::from_raw_parts_mut(im, eig.len());
        for (i, e) in eig.iter().enumerate() {
            re[i] = e.re;
            im[i] = e.im;
        }
        Ok(())
    })
}

/// Energy-norm `‖(iλ − A)⁻¹‖`. When `iλ` is numerically an eigenvalue the result is the
/// finite cap `1e12 / ‖A‖` in whitened coordinates.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_resolvent_norm(sys: *const TbSystem, lambda: f64, out: *mut f64) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        non_null(out, "out")?;
        *out = resolvent_norm(&s.sys, lambda).or_status()?;
        Ok(())
    })
}

/// Energy `½‖U‖²` of a state.
///
/// # Safety
/// `state` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_energy(sys: *const TbSystem, state: *const f64, len: usize, out: *mut f64) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        let u = state_slice(s, state, len)?;
        non_null(out, "out")?;
        *out = s.sys.energy(u).or_status()?;
        Ok(())
    })
}

/// Dissipation rate `-dE/dt` of a state.
///
/// # Safety
/// `state` must be valid for `len` reads; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_dissipation(sys: *const TbSystem, state: *const f64, len: usize, out: *mut f64) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        let u = state_slice(s, state, len)?;
        non_null(out, "out")?;
        *out = s.sys.dissipation(u).or_status()?;
        Ok(())
    })
}

/// Writes `U̇` for the state `U` into `out` (both of length `len`).
///
/// # Safety
/// `state` must be valid for `len` reads and `out` for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn tb_apply_generator(
    sys: *const TbSystem,
    state: *const f64,
    len: usize,
    out: *mut f64,
) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        let u = state_slice(s, state, len)?;
        non_null(out, "out")?;
        let v = s.sys.apply_generator(u).or_status()?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&v);
        Ok(())
    })
}

/// Integrates from `state` over `[0, t_final]` with the implicit midpoint rule, overwriting
/// `state` with the final state. `energy_final` receives `E(t_final)`; `decay_rate`, when
/// non-null, receives the fitted energy decay exponent or NaN if the history admits no fit.
///
/// # Safety
/// `state` must be valid for `len` reads and writes; `energy_final` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tb_simulate(
    sys: *const TbSystem,
    state: *mut f64,
    len: usize,
    dt: f64,
    t_final: f64,
    energy_final: *mut f64,
    decay_rate: *mut f64,
) -> TbStatus {
    guard(|| {
        let s = handle(sys)?;
        let u0 = state_slice(s, state, len)?;
        non_null(energy_final, "energy_final")?;
        let report = simulate(&s.sys, u0, dt, t_final).or_status()?;
        std::slice::from_raw_parts_mut(state, len).copy_from_slice(&report.final_state);
        *energy_final = *report.energies.last().unwrap_or(&f64::NAN);
        if !decay_rate.is_null() {
            *decay_rate = report.fit.map_or(f64::NAN, |f| f.rate);
        }
        Ok(())
    })
}
