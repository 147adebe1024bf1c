//! C ABI over the `dephase` library.
//!
//! Every entry point returns a [`DphStatus`]. On failure a message is kept
//! per thread and can be read with [`dph_last_error_message`]. Panics are
//! caught at the boundary and reported as `DPH_STATUS_PANIC`.
//!
//! Probes are opaque handles owned by the caller: create them with
//! [`dph_probe_new`] or [`dph_probe_from_amplitudes`], release them with
//! [`dph_probe_free`]. Strings returned by the library are released with
//! [`dph_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dephase::{asymptotics, clustering, optimizer, qfi, Error, NoiseSetting, ProbeState, SpinDim, StateKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DphStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

/// Opaque probe handle.
pub struct DphProbe {
    state: ProbeState,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DphQfi {
    pub f_theta: f64,
    /// `+inf` when the diffusion information diverges (pure state).
    pub f_delta: f64,
    /// `Im Tr(ρ L_θ L_Δ)`.
    pub cross_im: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DphPrediction {
    pub inv_f_theta: f64,
    pub inv_f_delta: f64,
    pub mass: f64,
    pub gradient_integral: f64,
    /// Nonzero when the mass is above the validity threshold.
    pub valid: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(DphStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = if e.is_numerical() {
            DphStatus::Numerical
        } else {
            DphStatus::InvalidArgument
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DphStatus::NullPointer, format!("`{what}` is null"))
}

/// Runs `f` behind `catch_unwind` and records any failure.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DphStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DphStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            DphStatus::Panic
        }
    }
}

unsafe fn probe_ref<'a>(p: *const DphProbe) -> Result<&'a ProbeState, Failure> {
    p.as_ref().map(|h| &h.state).ok_or_else(|| null("probe"))
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(DphStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

fn setting(delta: f64, theta: f64) -> Result<NoiseSetting, Failure> {
    Ok(NoiseSetting::new(delta, theta)?)
}

fn boxed(state: ProbeState) -> *mut DphProbe {
    Box::into_raw(Box::new(DphProbe { state }))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn dph_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a named probe (`cosine`, `noon`, `flat`, `gaussian:<w>`,
/// `coherent`, `holland-burnett`) with `twice_j + 1` amplitudes.
///
/// # Safety
/// `label` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_probe_new(label: *const c_char, twice_j: u32, out: *mut *mut DphProbe) -> DphStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind: StateKind = str_arg(label, "label")?.parse()?;
        let state = kind.build(SpinDim::new(twice_j)?)?;
        *out = boxed(state);
        Ok(())
    })
}

/// Builds a probe from `len = twice_j + 1` real amplitudes in ascending `m`.
/// The profile is normalized.
///
/// # Safety
/// `amplitudes` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_probe_from_amplitudes(
    amplitudes: *const f64,
    len: usize,
    out: *mut *mut DphProbe,
) -> DphStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if amplitudes.is_null() {
            return Err(null("amplitudes"));
        }
        if len == 0 || len > u32::MAX as usize {
            return Err(Failure(DphStatus::InvalidArgument, format!("bad length {len}")));
        }
        let amps = std::slice::from_raw_parts(amplitudes, len).to_vec();
        let state = ProbeState::custom(SpinDim::new((len - 1) as u32)?, amps, "custom")?;
        *out = boxed(state);
        Ok(())
    })
}

/// Releases a probe. Null is ignored.
///
/// # Safety
/// `probe` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dph_probe_free(probe: *mut DphProbe) {
    if !probe.is_null() {
        drop(Box::from_raw(probe));
    }
}

/// Number of amplitudes (`2j + 1`).
///
/// # Safety
/// `probe` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_probe_len(probe: *const DphProbe, out: *mut usize) -> DphStatus {
    guard(|| {
        let s = probe_ref(probe)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = s.amplitudes().len();
        Ok(())
    })
}

/// Copies the amplitudes into `buf`. Fails with `DPH_STATUS_BUFFER_TOO_SMALL`
/// when `capacity` is short.
///
/// # Safety
/// `buf` must have room for `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn dph_probe_amplitudes(probe: *const DphProbe, buf: *mut f64, capacity: usize) -> DphStatus {
    guard(|| {
        let a = probe_ref(probe)?.amplitudes();
        if buf.is_null() {
            return Err(null("buf"));
        }
        if capacity < a.len() {
            return Err(Failure(
                DphStatus::BufferTooSmall,
                format!("need {} doubles, got {capacity}", a.len()),
            ));
        }
        ptr::copy_nonoverlapping(a.as_ptr(), buf, a.len());
        Ok(())
    })
}

/// Exact phase and diffusion QFI and the compatibility term.
///
/// # Safety
/// `probe` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_qfi(probe: *const DphProbe, delta: f64, theta: f64, out: *mut DphQfi) -> DphStatus {
    guard(|| {
        let s = probe_ref(probe)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let solver = qfi::QfiSolver::new(&qfi::build_density(s, setting(delta, theta)?))?;
        let f_delta = match solver.f_delta() {
            Ok(v) => v,
            Err(Error::Divergent(_)) => f64::INFINITY,
            Err(e) => return Err(e.into()),
        };
        *out = DphQfi {
            f_theta: solver.f_theta(),
            f_delta,
            cross_im: solver.cross_term(),
        };
        Ok(())
    })
}

/// Large-`j` continuum predictions.
///
/// # Safety
/// `probe` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_predict(probe: *const DphProbe, delta: f64, out: *mut DphPrediction) -> DphStatus {
    guard(|| {
        let s = probe_ref(probe)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = asymptotics::predict(s, setting(delta, 0.0)?);
        *out = DphPrediction {
            inv_f_theta: p.inv_f_theta,
            inv_f_delta: p.inv_f_delta,
            mass: p.mass,
            gradient_integral: p.gradient_integral,
            valid: i32::from(p.valid),
        };
        Ok(())
    })
}

/// Optimal symmetric probe for the phase QFI. `value` may be null.
///
/// # Safety
/// `out` must be writable; `value`, if non-null, too.
#[no_mangle]
pub unsafe extern "C" fn dph_optimize(twice_j: u32, delta: f64, value: *mut f64, out: *mut *mut DphProbe) -> DphStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let r = optimizer::optimal_probe(SpinDim::new(twice_j)?, delta)?;
        if !value.is_null() {
            *value = r.best_value;
        }
        *out = boxed(r.best_state);
        Ok(())
    })
}

/// Dephasing rate at which clusters of `n_small` and `n_large` particles
/// give the same QFI per particle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_crossover(n_small: u32, n_large: u32, out: *mut f64) -> DphStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = clustering::crossover_delta(n_small as usize, n_large as usize)?;
        Ok(())
    })
}

/// Full QFI report as a JSON string; release it with [`dph_string_free`].
///
/// # Safety
/// `probe` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dph_qfi_report_json(
    probe: *const DphProbe,
    delta: f64,
    theta: f64,
    out: *mut *mut c_char,
) -> DphStatus {
    guard(|| {
        let s = probe_ref(probe)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = qfi::qfi_report(s, setting(delta, theta)?)?;
        let text = serde_json::to_string(&report).map_err(|e| Failure(DphStatus::Numerical, e.to_string()))?;
        *out = CString::new(text)
            .map_err(|e| Failure(DphStatus::InvalidArgument, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn dph_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
