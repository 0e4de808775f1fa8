use std::ffi::{CStr, CString};
use std::ptr;

use cng_core::fixtures::{example_instance, two_node};
use cng_core::io::instance_to_json;
use cng_ffi::*;

fn load(inst: &cng_core::CngInstance) -> *mut CngInstance {
    let json = CString::new(instance_to_json(inst).unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { cng_instance_from_json(json.as_ptr(), &mut h) }, CngCode::Ok);
    assert!(!h.is_null());
    h
}

#[test]
fn payoffs_of_published_profile() {
    let h = load(&example_instance());
    let (x, a) = ([1u8, 1, 1, 0, 1], [0u8, 0, 1, 0, 1]);
    let (mut fd, mut fa) = (0.0, 0.0);
    let code = unsafe { cng_payoffs(h, x.as_ptr(), a.as_ptr(), 5, &mut fd, &mut fa) };
    assert_eq!(code, CngCode::Ok);
    assert!((fd - 29.2).abs() < 1e-9);
    assert!((fa - 13.74).abs() < 1e-9);
    assert_eq!(unsafe { cng_instance_n(h) }, 5);
    unsafe { cng_instance_free(h) };
}

#[test]
fn solve_and_inspect() {
    let h = load(&two_node());
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cng_solve(h, ptr::null(), &mut r) }, CngCode::Ok);
    unsafe {
        assert_eq!(cng_result_status(r), CngSolveStatus::ProvedOptimalNe);
        assert_eq!(cng_result_phi(r), 0.0);
        assert_eq!(cng_result_defender_payoff(r), 6.0);
        assert_eq!(cng_result_attacker_payoff(r), 5.0);
        assert!(cng_result_iterations(r) >= 1);
        let n = cng_result_n(r);
        let (mut x, mut a) = (vec![9u8; n], vec![9u8; n]);
        assert_eq!(cng_result_profile(r, x.as_mut_ptr(), a.as_mut_ptr(), n), CngCode::Ok);
        assert_eq!((x, a), (vec![1, 0], vec![1, 0]));

        let mut s = ptr::null_mut();
        assert_eq!(cng_result_to_json(r, &mut s), CngCode::Ok);
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        assert!(text.contains(r#""status":"PROVED_OPTIMAL_NE""#), "{text}");
        cng_string_free(s);
        cng_result_free(r);
        cng_instance_free(h);
    }
}

#[test]
fn prices() {
    let h = load(&two_node());
    let opts = cng_solve_options_default();
    let mut pos = 0.0;
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { cng_price_of_security(h, &opts, &mut pos, &mut r) },
        CngCode::Ok
    );
    assert!((pos - 11.0 / 6.0).abs() < 1e-12);
    unsafe { cng_result_free(r) };
    let mut poa = 0.0;
    assert_eq!(
        unsafe { cng_price_of_aggression(h, &opts, &mut poa, ptr::null_mut()) },
        CngCode::Ok
    );
    assert!((poa - 2.0).abs() < 1e-12);
    unsafe { cng_instance_free(h) };

    let mut inst = two_node();
    inst.attacker_budget = 0.0;
    let h = load(&inst);
    assert_eq!(
        unsafe { cng_price_of_aggression(h, &opts, &mut poa, ptr::null_mut()) },
        CngCode::DivisionByZero
    );
    assert!(poa.is_infinite());
    unsafe { cng_instance_free(h) };
}

#[test]
fn round_trip_json() {
    let inst = example_instance();
    let h = load(&inst);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { cng_instance_to_json(h, &mut s) }, CngCode::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap();
    assert_eq!(text, instance_to_json(&inst).unwrap());
    unsafe {
        cng_string_free(s);
        cng_instance_free(h);
    }
}

fn last_error() -> String {
    let p = cng_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn errors_are_reported() {
    let mut h = ptr::null_mut();
    let bad = CString::new("{\"n\":1}").unwrap();
    assert_eq!(unsafe { cng_instance_from_json(bad.as_ptr(), &mut h) }, CngCode::Json);
    assert!(h.is_null());
    assert!(last_error().contains("json"));

    assert_eq!(
        unsafe { cng_instance_from_json(ptr::null(), &mut h) },
        CngCode::NullPointer
    );

    let mut inst = two_node();
    inst.eta = 0.1;
    let json = CString::new(serde_json_free(&inst)).unwrap();
    assert_eq!(
        unsafe { cng_instance_from_json(json.as_ptr(), &mut h) },
        CngCode::InvalidInstance
    );
    assert!(last_error().contains("delta < eta < epsilon"));

    let h = load(&two_node());
    let opts = CngSolveOptions {
        time_limit_s: -1.0,
        ..cng_solve_options_default()
    };
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { cng_solve(h, &opts, &mut r) }, CngCode::InvalidArgument);
    let x = [1u8];
    let (mut fd, mut fa) = (0.0, 0.0);
    assert_eq!(
        unsafe { cng_payoffs(h, x.as_ptr(), x.as_ptr(), 1, &mut fd, &mut fa) },
        CngCode::InvalidArgument
    );
    unsafe { cng_instance_free(h) };
}

/// Instance JSON without validation, to build invalid inputs.
fn serde_json_free(inst: &cng_core::CngInstance) -> String {
    cng_core::io::to_canonical_json(inst).unwrap()
}

#[test]
fn header_is_generated() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cng.h")).unwrap();
    for name in [
        "cng_solve",
        "cng_instance_free",
        "CNG_CODE_OK",
        "CngSolveOptions",
        "cng_last_error",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
