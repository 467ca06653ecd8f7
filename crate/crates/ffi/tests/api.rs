use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use routed_mpst_ffi::*;

fn protocols_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../protocols")
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    assert!(!p.is_null());
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { rm_string_free(p) };
    s
}

fn last_error() -> String {
    let p = rm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn load(stem: &str) -> *mut RmProtocol {
    let text = std::fs::read_to_string(protocols_dir().join(format!("{stem}.scr"))).unwrap();
    let text = CString::new(text).unwrap();
    let file = CString::new(format!("{stem}.scr")).unwrap();
    let name = CString::new(stem).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rm_module_parse(text.as_ptr(), file.as_ptr(), &mut m) }, RmStatus::Ok);
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { rm_module_elaborate(m, name.as_ptr(), &mut p) }, RmStatus::Ok);
    unsafe { rm_module_free(m) };
    p
}

#[test]
fn travel_agency_efsm_through_handles() {
    let p = load("TravelAgency");
    let a = CString::new("A").unwrap();
    let mut e = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_efsm(p, a.as_ptr(), &mut e) }, RmStatus::Ok);
    assert_eq!(unsafe { rm_efsm_state_count(e) }, 9);
    assert_eq!(unsafe { rm_efsm_transition_count(e) }, 10);
    let mut dot = ptr::null_mut();
    assert_eq!(unsafe { rm_efsm_to_dot(e, &mut dot) }, RmStatus::Ok);
    assert!(take_string(dot).contains("3 -> 4 [label=\"S?Full\"];"));
    let mut json = ptr::null_mut();
    assert_eq!(unsafe { rm_efsm_to_json(e, &mut json) }, RmStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 9);
    unsafe {
        rm_efsm_free(e);
        rm_protocol_free(p);
    }
}

#[test]
fn project_encode_check_and_verify() {
    let p = load("PingPong");
    let c = CString::new("C").unwrap();
    let s = CString::new("S").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_project(p, c.as_ptr(), &mut out) }, RmStatus::Ok);
    assert!(take_string(out).contains("PING"));
    let mut enc = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_encode(p, s.as_ptr(), &mut enc) }, RmStatus::Ok);
    let mut ok = false;
    assert_eq!(unsafe { rm_protocol_check(enc, s.as_ptr(), &mut ok) }, RmStatus::Ok);
    assert!(ok);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_to_string(enc, &mut text) }, RmStatus::Ok);
    assert!(!take_string(text).is_empty());
    let mut report = ptr::null_mut();
    let mut passed = false;
    assert_eq!(unsafe { rm_protocol_verify(p, s.as_ptr(), 6, &mut report, &mut passed) }, RmStatus::Ok);
    assert!(passed);
    assert!(take_string(report).ends_with("verdict=pass\n"));
    let mut log = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_simulate(p, s.as_ptr(), 7, &mut log) }, RmStatus::Ok);
    assert!(take_string(log).starts_with("# delivery=routed"));
    unsafe {
        rm_protocol_free(enc);
        rm_protocol_free(p);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { rm_module_parse(ptr::null(), ptr::null(), &mut m) }, RmStatus::NullArgument);
    assert!(last_error().contains("null"));

    let bad = CString::new("global protocol P(role A) { M() from A to ; }").unwrap();
    let file = CString::new("bad.scr").unwrap();
    assert_eq!(unsafe { rm_module_parse(bad.as_ptr(), file.as_ptr(), &mut m) }, RmStatus::Parse);
    assert!(last_error().starts_with("bad.scr:1:"));

    let p = load("TravelAgency");
    let nobody = CString::new("Z").unwrap();
    let mut ok = true;
    assert_eq!(unsafe { rm_protocol_check(p, nobody.as_ptr(), &mut ok) }, RmStatus::Ok);
    assert!(!ok);
    let invalid = CString::new("not a role").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_project(p, invalid.as_ptr(), &mut out) }, RmStatus::InvalidArgument);
    assert!(out.is_null());
    let mut enc = ptr::null_mut();
    let s = CString::new("S").unwrap();
    assert_eq!(unsafe { rm_protocol_encode(p, s.as_ptr(), &mut enc) }, RmStatus::Ok);
    let mut twice = ptr::null_mut();
    assert_eq!(unsafe { rm_protocol_encode(enc, s.as_ptr(), &mut twice) }, RmStatus::Encoding);
    unsafe {
        rm_protocol_free(enc);
        rm_protocol_free(p);
        rm_module_free(ptr::null_mut());
        rm_string_free(ptr::null_mut());
        assert_eq!(rm_efsm_state_count(ptr::null()), 0);
    }
}
