//! C ABI over the `netctrl` library.
//!
//! Systems are opaque handles created from JSON text. Every entry point
//! returns a [`NetctrlStatus`]; on failure a message is available from
//! [`netctrl_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use netctrl::classical::{kalman_rank, Status};
use netctrl::error::Error;
use netctrl::io::{parse_system_str, render_check_report, run_check, MethodSelection, SystemFile, ToleranceOverrides};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetctrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    InvalidSystem = 4,
    InvalidArgument = 5,
    Numerical = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetctrlMethod {
    Theorem = 0,
    Kalman = 1,
    Pbh = 2,
    /// All methods; the verdict is the agreed one, or not applicable.
    All = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetctrlVerdict {
    Controllable = 0,
    Uncontrollable = 1,
    NotApplicable = 2,
}

/// Opaque system handle.
pub struct NetctrlSystem {
    text: String,
    file: SystemFile,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> NetctrlStatus {
    match e {
        Error::Parse { .. } => NetctrlStatus::Parse,
        Error::InvalidSystem(_) => NetctrlStatus::InvalidSystem,
        Error::NumericalFailure { .. } => NetctrlStatus::Numerical,
        Error::InvalidInput(_) | Error::Generation(_) | Error::Io(_) => NetctrlStatus::InvalidArgument,
    }
}

fn fail(status: NetctrlStatus, msg: &str) -> NetctrlStatus {
    set_last_error(msg);
    status
}

fn guard(f: impl FnOnce() -> NetctrlStatus) -> NetctrlStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NetctrlStatus::Panic, &format!("internal panic: {msg}"))
        }
    }
}

macro_rules! try_lib {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return fail(status_of(&err), &err.to_string()),
        }
    };
}

fn selection(m: NetctrlMethod) -> MethodSelection {
    match m {
        NetctrlMethod::Theorem => MethodSelection::Theorem,
        NetctrlMethod::Kalman => MethodSelection::Kalman,
        NetctrlMethod::Pbh => MethodSelection::Pbh,
        NetctrlMethod::All => MethodSelection::All,
    }
}

fn verdict_of(s: Status) -> NetctrlVerdict {
    match s {
        Status::Controllable => NetctrlVerdict::Controllable,
        Status::Uncontrollable => NetctrlVerdict::Uncontrollable,
        Status::NotApplicable => NetctrlVerdict::NotApplicable,
    }
}

/// Parses a NUL-terminated JSON system document into a new handle.
///
/// # Safety
/// `json` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netctrl_system_from_json(json: *const c_char, out: *mut *mut NetctrlSystem) -> NetctrlStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(NetctrlStatus::NullPointer, "null pointer argument");
        }
        *out = ptr::null_mut();
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t.to_owned(),
            Err(e) => return fail(NetctrlStatus::InvalidUtf8, &format!("input is not UTF-8: {e}")),
        };
        let file = try_lib!(parse_system_str(&text));
        *out = Box::into_raw(Box::new(NetctrlSystem { text, file }));
        NetctrlStatus::Ok
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `sys` must come from [`netctrl_system_from_json`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn netctrl_system_free(sys: *mut NetctrlSystem) {
    if !sys.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sys))));
    }
}

/// Writes N (nodes), n (node state dimension) and m (inputs per node).
///
/// # Safety
/// `sys` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn netctrl_system_dims(
    sys: *const NetctrlSystem,
    nodes: *mut usize,
    state: *mut usize,
    input: *mut usize,
) -> NetctrlStatus {
    guard(|| {
        if sys.is_null() || nodes.is_null() || state.is_null() || input.is_null() {
            return fail(NetctrlStatus::NullPointer, "null pointer argument");
        }
        let d = (*sys).file.system.dims();
        *nodes = d.nodes;
        *state = d.state;
        *input = d.input;
        NetctrlStatus::Ok
    })
}

/// Runs `method` and returns the JSON report as a new string, to be
/// released with [`netctrl_string_free`].
///
/// # Safety
/// `sys` must be a live handle; `report` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netctrl_check(
    sys: *const NetctrlSystem,
    method: NetctrlMethod,
    report: *mut *mut c_char,
) -> NetctrlStatus {
    guard(|| {
        if sys.is_null() || report.is_null() {
            return fail(NetctrlStatus::NullPointer, "null pointer argument");
        }
        *report = ptr::null_mut();
        let r = try_lib!(run_check(&(*sys).text, selection(method), None, &ToleranceOverrides::default()));
        let text = render_check_report(&r);
        *report = CString::new(text).expect("JSON has no NUL").into_raw();
        NetctrlStatus::Ok
    })
}

/// Numerical rank of the controllability matrix of the lifted pair.
///
/// # Safety
/// `sys` must be a live handle; `rank` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netctrl_kalman_rank(sys: *const NetctrlSystem, rank: *mut usize) -> NetctrlStatus {
    guard(|| {
        if sys.is_null() || rank.is_null() {
            return fail(NetctrlStatus::NullPointer, "null pointer argument");
        }
        let file = &(*sys).file;
        let tol = file.tolerances.unwrap_or_default();
        let pair = try_lib!(file.system.assemble());
        *rank = try_lib!(kalman_rank(&pair, &tol)).rank;
        NetctrlStatus::Ok
    })
}

/// Verdict of `method`. For [`NetctrlMethod::All`] this is the verdict all
/// decided methods agree on, or not applicable if none decide.
///
/// # Safety
/// `sys` must be a live handle; `verdict` must be writable.
#[no_mangle]
pub unsafe extern "C" fn netctrl_verdict(
    sys: *const NetctrlSystem,
    method: NetctrlMethod,
    verdict: *mut NetctrlVerdict,
) -> NetctrlStatus {
    guard(|| {
        if sys.is_null() || verdict.is_null() {
            return fail(NetctrlStatus::NullPointer, "null pointer argument");
        }
        let r = try_lib!(run_check(&(*sys).text, selection(method), None, &ToleranceOverrides::default()));
        let status = match method {
            NetctrlMethod::Theorem => r.theorem.as_ref().map(|t| t.verdict.status),
            NetctrlMethod::Kalman => r.kalman.as_ref().map(|(v, _)| v.status),
            NetctrlMethod::Pbh => r.pbh.as_ref().map(|v| v.status),
            NetctrlMethod::All => Some(r.overall()),
        };
        *verdict = verdict_of(status.unwrap_or(Status::NotApplicable));
        NetctrlStatus::Ok
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn netctrl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn netctrl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn netctrl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
