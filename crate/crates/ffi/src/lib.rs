//! C ABI over the routed-mpst toolkit.
//!
//! Objects cross the boundary as opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible call returns
//! an [`RmStatus`]; on failure a message is kept per thread and can be read
//! with [`rm_last_error`]. Strings returned through `char **` outputs are
//! allocated here and must be released with [`rm_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use routed_mpst::analysis::{check_deadlock_freedom, check_encoding_bisim, check_trace_equivalence, ExploreOptions};
use routed_mpst::efsm::{build_efsm, render_dot, Efsm};
use routed_mpst::encoding::encode_global;
use routed_mpst::projection::project;
use routed_mpst::scribble::{parse_module_named, Module};
use routed_mpst::simulator::{run_session, SimConfig};
use routed_mpst::wellformed::{check_wf, check_wf_routed};
use routed_mpst::{GlobalType, Role};
use std::ffi::c_char;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    Elaboration = 5,
    Projection = 6,
    Encoding = 7,
    Analysis = 8,
    Simulation = 9,
    Panic = 10,
}

/// A parsed Scribble module.
pub struct RmModule {
    inner: Module,
}

/// An elaborated global protocol.
pub struct RmProtocol {
    inner: GlobalType,
}

/// The state machine of one role.
pub struct RmEfsm {
    inner: Efsm,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul bytes were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(RmStatus, String);

type FfiResult<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> RmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            RmStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(Fail(RmStatus::NullArgument, format!("{what} is null")));
    }
    // SAFETY: caller passes a nul-terminated string valid for this call.
    unsafe { CStr::from_ptr(p) }.to_str().map_err(|_| Fail(RmStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn read_role(p: *const c_char, what: &str) -> FfiResult<Role> {
    let s = unsafe { read_str(p, what)? };
    Role::new(s).map_err(|e| Fail(RmStatus::InvalidArgument, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    // SAFETY: caller passes a live handle obtained from this library.
    unsafe { p.as_ref() }.ok_or_else(|| Fail(RmStatus::NullArgument, format!("{what} is null")))
}

fn check_out<T>(out: *mut T) -> FfiResult<()> {
    if out.is_null() {
        Err(Fail(RmStatus::NullArgument, "output pointer is null".to_string()))
    } else {
        Ok(())
    }
}

unsafe fn write_string(out: *mut *mut c_char, s: String) {
    let c = CString::new(s.replace('\0', " ")).expect("interior nul bytes were replaced");
    // SAFETY: `out` was checked non-null by the caller of this helper.
    unsafe { *out = c.into_raw() };
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rm_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: `s` was produced by `CString::into_raw`.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse Scribble source. `file` names the source in diagnostics and may be
/// NULL.
///
/// # Safety
/// `text` and `file` must be NULL or nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_module_parse(
    text: *const c_char,
    file: *const c_char,
    out: *mut *mut RmModule,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let text = unsafe { read_str(text, "text")? };
        let file = if file.is_null() { "<input>" } else { unsafe { read_str(file, "file")? } };
        let module =
            parse_module_named(text, file).map_err(|e| Fail(RmStatus::Parse, format!("{}: error: {e}", e.span())))?;
        unsafe { *out = Box::into_raw(Box::new(RmModule { inner: module })) };
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a module from [`rm_module_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_module_free(m: *mut RmModule) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Elaborate protocol `name` of a module.
///
/// # Safety
/// Handles and strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_module_elaborate(
    m: *const RmModule,
    name: *const c_char,
    out: *mut *mut RmProtocol,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let m = unsafe { handle(m, "module")? };
        let name = unsafe { read_str(name, "protocol name")? };
        let g = m
            .inner
            .elaborate(name, None)
            .map_err(|e| Fail(RmStatus::Elaboration, format!("{}: error: {e}", e.span())))?;
        unsafe { *out = Box::into_raw(Box::new(RmProtocol { inner: g })) };
        Ok(())
    })
}

/// # Safety
/// `p` must be NULL or a protocol from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_free(p: *mut RmProtocol) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Render a protocol as text.
///
/// # Safety
/// `p` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_to_string(p: *const RmProtocol, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let p = unsafe { handle(p, "protocol")? };
        unsafe { write_string(out, p.inner.to_string()) };
        Ok(())
    })
}

/// Project onto `role` and render the local type as text.
///
/// # Safety
/// Handles and strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_project(
    p: *const RmProtocol,
    role: *const c_char,
    out: *mut *mut c_char,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let p = unsafe { handle(p, "protocol")? };
        let r = unsafe { read_role(role, "role")? };
        let t = project(&p.inner, &r).map_err(|e| Fail(RmStatus::Projection, e.to_string()))?;
        unsafe { write_string(out, t.to_string()) };
        Ok(())
    })
}

/// Route a canonical protocol through `router`.
///
/// # Safety
/// Handles and strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_encode(
    p: *const RmProtocol,
    router: *const c_char,
    out: *mut *mut RmProtocol,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let p = unsafe { handle(p, "protocol")? };
        let s = unsafe { read_role(router, "router")? };
        let g = encode_global(&p.inner, &s).map_err(|e| Fail(RmStatus::Encoding, e.to_string()))?;
        unsafe { *out = Box::into_raw(Box::new(RmProtocol { inner: g })) };
        Ok(())
    })
}

/// Check well-formedness, with respect to `router` unless it is NULL. A
/// protocol that is not well-formed is reported through `ok`, not the status.
///
/// # Safety
/// Handles and strings must be valid; `ok` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_check(p: *const RmProtocol, router: *const c_char, ok: *mut bool) -> RmStatus {
    guard(|| {
        check_out(ok)?;
        let p = unsafe { handle(p, "protocol")? };
        let report = if router.is_null() {
            check_wf(&p.inner)
        } else {
            check_wf_routed(&p.inner, &unsafe { read_role(router, "router")? })
        };
        if !report.is_ok() {
            set_error(report.to_string());
        }
        unsafe { *ok = report.is_ok() };
        Ok(())
    })
}

/// Run trace equivalence, deadlock freedom and encoding correspondence at
/// `depth` on a canonical protocol. Writes the key-value report to `report`
/// and the overall result to `passed`.
///
/// # Safety
/// Handles and strings must be valid; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_verify(
    p: *const RmProtocol,
    router: *const c_char,
    depth: usize,
    report: *mut *mut c_char,
    passed: *mut bool,
) -> RmStatus {
    guard(|| {
        check_out(report)?;
        check_out(passed)?;
        let p = unsafe { handle(p, "protocol")? };
        let s = unsafe { read_role(router, "router")? };
        let opts = ExploreOptions::with_depth(depth);
        let analysis = |e: routed_mpst::analysis::AnalysisError| Fail(RmStatus::Analysis, e.to_string());
        let encoded = encode_global(&p.inner, &s).map_err(|e| Fail(RmStatus::Encoding, e.to_string()))?;
        let reports = [
            ("trace-equivalence", check_trace_equivalence(&p.inner, opts).map_err(analysis)?),
            ("trace-equivalence-routed", check_trace_equivalence(&encoded, opts).map_err(analysis)?),
            ("deadlock-freedom", check_deadlock_freedom(&encoded, &s, opts).map_err(analysis)?),
            ("encoding-bisimulation", check_encoding_bisim(&p.inner, &s, opts).map_err(analysis)?),
        ];
        let all = reports.iter().all(|(_, r)| r.passed());
        let mut text: String = reports.iter().map(|(n, r)| r.to_key_values(n) + "\n").collect();
        text.push_str(if all { "verdict=pass\n" } else { "verdict=fail\n" });
        unsafe {
            write_string(report, text);
            *passed = all;
        }
        Ok(())
    })
}

/// Simulate one routed session with seeded choices and write its log.
///
/// # Safety
/// Handles and strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_simulate(
    p: *const RmProtocol,
    router: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let p = unsafe { handle(p, "protocol")? };
        let s = unsafe { read_role(router, "router")? };
        let cfg = SimConfig { seed, ..SimConfig::default() };
        let log = run_session(&p.inner, &s, &Default::default(), &cfg)
            .map_err(|e| Fail(RmStatus::Simulation, e.to_string()))?;
        unsafe { write_string(out, log.to_text()) };
        Ok(())
    })
}

/// Build the state machine of `role`.
///
/// # Safety
/// Handles and strings must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_protocol_efsm(
    p: *const RmProtocol,
    role: *const c_char,
    out: *mut *mut RmEfsm,
) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let p = unsafe { handle(p, "protocol")? };
        let r = unsafe { read_role(role, "role")? };
        let t = project(&p.inner, &r).map_err(|e| Fail(RmStatus::Projection, e.to_string()))?;
        unsafe { *out = Box::into_raw(Box::new(RmEfsm { inner: build_efsm(&t, &r) })) };
        Ok(())
    })
}

/// # Safety
/// `e` must be NULL or a machine from [`rm_protocol_efsm`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_efsm_free(e: *mut RmEfsm) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}

/// Number of states, or 0 for NULL.
///
/// # Safety
/// `e` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rm_efsm_state_count(e: *const RmEfsm) -> usize {
    unsafe { e.as_ref() }.map_or(0, |e| e.inner.states.len())
}

/// Number of transitions, or 0 for NULL.
///
/// # Safety
/// `e` must be NULL or a valid handle.
#[no_mangle]
pub unsafe extern "C" fn rm_efsm_transition_count(e: *const RmEfsm) -> usize {
    unsafe { e.as_ref() }.map_or(0, |e| e.inner.transitions.len())
}

/// Render as a DOT digraph.
///
/// # Safety
/// `e` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_efsm_to_dot(e: *const RmEfsm, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let e = unsafe { handle(e, "efsm")? };
        unsafe { write_string(out, render_dot(&e.inner)) };
        Ok(())
    })
}

/// Render as the JSON IR with sorted keys.
///
/// # Safety
/// `e` must be a valid handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_efsm_to_json(e: *const RmEfsm, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        check_out(out)?;
        let e = unsafe { handle(e, "efsm")? };
        unsafe { write_string(out, e.inner.to_json_string()) };
        Ok(())
    })
}
