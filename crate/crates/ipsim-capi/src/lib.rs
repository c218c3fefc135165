//! C ABI for the pool simulator: opaque handles, status codes, JSON in and
//! out. Callers configure a simulation with the same JSON document the CLI
//! accepts, run it, and read statistics back as JSON or scalar getters.
//!
//! Conventions:
//! - Every fallible function returns an [`IpsimStatus`]; out-parameters are
//!   written only on `Ok`.
//! - Strings returned through out-parameters are owned by the caller and
//!   must be released with [`ipsim_string_free`].
//! - [`ipsim_last_error_message`] describes the most recent failure on the
//!   calling thread; the pointer is valid until the next failing call.

use ipsim::config::RunConfig;
use ipsim::scenario::run_scenario;
use ipsim::stats::RunStats;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

/// Result of a C API call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IpsimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The configuration document failed to parse or validate.
    InvalidConfig = 3,
    /// The handle is not in the right state (e.g. stats before run).
    InvalidState = 4,
    /// The simulation failed at runtime.
    RuntimeError = 5,
}

/// Opaque simulation handle.
pub struct IpsimSim {
    config: RunConfig,
    stats: Option<RunStats>,
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ipsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message for the last error on this thread, or null if none occurred.
#[no_mangle]
pub extern "C" fn ipsim_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map(|s| s.as_ptr())
            .unwrap_or(std::ptr::null())
    })
}

/// Create a simulation from a JSON run configuration.
///
/// On success writes a handle to `out_sim`; release it with
/// [`ipsim_sim_free`].
///
/// # Safety
/// `config_json` must be a valid NUL-terminated string and `out_sim` a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_new(
    config_json: *const c_char,
    out_sim: *mut *mut IpsimSim,
) -> IpsimStatus {
    if config_json.is_null() || out_sim.is_null() {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    }
    let text = match CStr::from_ptr(config_json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config_json is not valid UTF-8");
            return IpsimStatus::InvalidUtf8;
        }
    };
    match RunConfig::from_json_str(text) {
        Ok(config) => {
            let handle = Box::new(IpsimSim {
                config,
                stats: None,
            });
            *out_sim = Box::into_raw(handle);
            IpsimStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            IpsimStatus::InvalidConfig
        }
    }
}

/// Execute the simulation to completion. Running again replaces the stats
/// with a fresh, identical run.
///
/// # Safety
/// `sim` must be a live handle from [`ipsim_sim_new`].
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_run(sim: *mut IpsimSim) -> IpsimStatus {
    let Some(sim) = sim.as_mut() else {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    };
    let result = catch_unwind(AssertUnwindSafe(|| run_scenario(&sim.config)));
    match result {
        Ok(Ok(stats)) => {
            sim.stats = Some(stats);
            IpsimStatus::Ok
        }
        Ok(Err(e)) => {
            set_error(e.to_string());
            IpsimStatus::RuntimeError
        }
        Err(_) => {
            set_error("simulation panicked");
            IpsimStatus::RuntimeError
        }
    }
}

/// Serialize the completed run's statistics as JSON.
///
/// # Safety
/// `sim` must be a live handle; `out_json` must be valid. The returned
/// string is freed with [`ipsim_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_stats_json(
    sim: *const IpsimSim,
    out_json: *mut *mut c_char,
) -> IpsimStatus {
    if out_json.is_null() {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    }
    let Some(sim) = sim.as_ref() else {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    };
    let Some(stats) = &sim.stats else {
        set_error("simulation has not been run");
        return IpsimStatus::InvalidState;
    };
    let json = serde_json::to_string(stats).expect("stats always serialize");
    let cstring = CString::new(json).expect("JSON contains no NUL bytes");
    *out_json = cstring.into_raw();
    IpsimStatus::Ok
}

unsafe fn scalar_getter(
    sim: *const IpsimSim,
    out: *mut f64,
    get: impl Fn(&RunStats) -> f64,
) -> IpsimStatus {
    if out.is_null() {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    }
    let Some(sim) = sim.as_ref() else {
        set_error("null argument");
        return IpsimStatus::NullArgument;
    };
    let Some(stats) = &sim.stats else {
        set_error("simulation has not been run");
        return IpsimStatus::InvalidState;
    };
    *out = get(stats);
    IpsimStatus::Ok
}

/// Fraction of adversary allocations returning a never-seen IP; NaN when
/// the scenario had no adversary allocations.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_unique_ip_yield(
    sim: *const IpsimSim,
    out: *mut f64,
) -> IpsimStatus {
    scalar_getter(sim, out, |s| s.unique_ip_yield().unwrap_or(f64::NAN))
}

/// Fraction of adversary allocations returning a never-seen IP with live
/// latent configuration; NaN when the scenario had no adversary.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_lc_yield(sim: *const IpsimSim, out: *mut f64) -> IpsimStatus {
    scalar_getter(sim, out, |s| s.lc_yield().unwrap_or(f64::NAN))
}

/// Maximum pool allocation ratio observed over the run.
///
/// # Safety
/// `sim` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_ar_max(sim: *const IpsimSim, out: *mut f64) -> IpsimStatus {
    scalar_getter(sim, out, |s| s.ar_max_observed)
}

/// Release a string returned by this library.
///
/// # Safety
/// `s` must have come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ipsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Release a simulation handle.
///
/// # Safety
/// `sim` must have come from [`ipsim_sim_new`] and not have been freed
/// already.
#[no_mangle]
pub unsafe extern "C" fn ipsim_sim_free(sim: *mut IpsimSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
