use std::ffi::{CStr, CString};
use std::ptr;

use dephase_ffi::*;

fn last_error() -> String {
    let p = dph_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn probe(label: &str, twice_j: u32) -> *mut DphProbe {
    let label = CString::new(label).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dph_probe_new(label.as_ptr(), twice_j, &mut p) }, DphStatus::Ok);
    assert!(!p.is_null());
    p
}

#[test]
fn named_probe_round_trip() {
    let p = probe("cosine", 10);
    let mut len = 0usize;
    assert_eq!(unsafe { dph_probe_len(p, &mut len) }, DphStatus::Ok);
    assert_eq!(len, 11);
    let mut buf = vec![0.0; len];
    assert_eq!(unsafe { dph_probe_amplitudes(p, buf.as_mut_ptr(), buf.len()) }, DphStatus::Ok);
    assert!((buf.iter().map(|a| a * a).sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(dph_last_error_message().is_null());
    unsafe { dph_probe_free(p) };
}

#[test]
fn amplitudes_are_normalized_on_entry() {
    let amps = [1.0, 0.0, 1.0];
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dph_probe_from_amplitudes(amps.as_ptr(), 3, &mut p) }, DphStatus::Ok);
    let mut q = DphQfi::default();
    assert_eq!(unsafe { dph_qfi(p, 0.0, 0.0, &mut q) }, DphStatus::Ok);
    assert!((q.f_theta - 4.0).abs() < 1e-12);
    assert!(q.f_delta.is_infinite());
    unsafe { dph_probe_free(p) };
}

#[test]
fn qubit_qfi_and_prediction() {
    let p = probe("flat", 1);
    let mut q = DphQfi::default();
    assert_eq!(unsafe { dph_qfi(p, 0.7, 0.2, &mut q) }, DphStatus::Ok);
    assert!((q.f_theta - (-0.7f64).exp()).abs() < 1e-12);
    assert!(q.cross_im.abs() < 1e-12);
    unsafe { dph_probe_free(p) };

    let p = probe("cosine", 200);
    let mut pr = DphPrediction::default();
    assert_eq!(unsafe { dph_predict(p, 0.03, &mut pr) }, DphStatus::Ok);
    assert_eq!(pr.valid, 1);
    assert!((pr.inv_f_theta - 0.030243).abs() < 1e-5);
    unsafe { dph_probe_free(p) };
}

#[test]
fn buffer_too_small() {
    let p = probe("noon", 4);
    let mut buf = [0.0; 3];
    assert_eq!(unsafe { dph_probe_amplitudes(p, buf.as_mut_ptr(), 3) }, DphStatus::BufferTooSmall);
    assert!(last_error().contains("need 5"));
    unsafe { dph_probe_free(p) };
}

#[test]
fn null_pointers_are_reported() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dph_probe_new(ptr::null(), 2, &mut p) }, DphStatus::NullPointer);
    assert!(last_error().contains("label"));
    let label = CString::new("cosine").unwrap();
    assert_eq!(unsafe { dph_probe_new(label.as_ptr(), 2, ptr::null_mut()) }, DphStatus::NullPointer);
    let mut q = DphQfi::default();
    assert_eq!(unsafe { dph_qfi(ptr::null(), 0.1, 0.0, &mut q) }, DphStatus::NullPointer);
    assert_eq!(unsafe { dph_probe_from_amplitudes(ptr::null(), 3, &mut p) }, DphStatus::NullPointer);
    assert_eq!(unsafe { dph_crossover(1, 2, ptr::null_mut()) }, DphStatus::NullPointer);
    unsafe {
        dph_probe_free(ptr::null_mut());
        dph_string_free(ptr::null_mut());
    }
}

#[test]
fn invalid_arguments_are_reported() {
    let label = CString::new("wobbly").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { dph_probe_new(label.as_ptr(), 2, &mut p) }, DphStatus::InvalidArgument);
    assert!(last_error().contains("wobbly"));
    assert!(p.is_null());

    let bad = [0.0, 0.0];
    assert_eq!(unsafe { dph_probe_from_amplitudes(bad.as_ptr(), 2, &mut p) }, DphStatus::InvalidArgument);
    assert_eq!(unsafe { dph_probe_from_amplitudes(bad.as_ptr(), 0, &mut p) }, DphStatus::InvalidArgument);

    let c = probe("cosine", 4);
    let mut q = DphQfi::default();
    assert_eq!(unsafe { dph_qfi(c, -0.1, 0.0, &mut q) }, DphStatus::InvalidArgument);
    assert_eq!(unsafe { dph_qfi(c, f64::NAN, 0.0, &mut q) }, DphStatus::InvalidArgument);
    unsafe { dph_probe_free(c) };

    let mut d = 0.0;
    assert_eq!(unsafe { dph_crossover(2, 2, &mut d) }, DphStatus::InvalidArgument);
}

#[test]
fn invalid_utf8_label() {
    let bytes = [0xffu8, 0xfe, 0];
    let mut p = ptr::null_mut();
    let s = unsafe { dph_probe_new(bytes.as_ptr().cast(), 2, &mut p) };
    assert_eq!(s, DphStatus::InvalidUtf8);
}

#[test]
fn error_is_cleared_by_next_success() {
    let mut d = 0.0;
    assert_ne!(unsafe { dph_crossover(0, 1, &mut d) }, DphStatus::Ok);
    assert!(!dph_last_error_message().is_null());
    assert_eq!(unsafe { dph_crossover(1, 2, &mut d) }, DphStatus::Ok);
    assert!(dph_last_error_message().is_null());
    assert!((d - 0.2512).abs() < 1e-3);
}

#[test]
fn optimize_returns_owned_probe() {
    let mut p = ptr::null_mut();
    let mut v = 0.0;
    assert_eq!(unsafe { dph_optimize(2, 0.0, &mut v, &mut p) }, DphStatus::Ok);
    assert!((v - 4.0).abs() < 1e-8);
    let mut len = 0;
    assert_eq!(unsafe { dph_probe_len(p, &mut len) }, DphStatus::Ok);
    assert_eq!(len, 3);
    unsafe { dph_probe_free(p) };
    assert_eq!(unsafe { dph_optimize(2, 0.1, ptr::null_mut(), &mut p) }, DphStatus::Ok);
    unsafe { dph_probe_free(p) };
}

#[test]
fn json_report_round_trip() {
    let p = probe("gaussian:2", 12);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { dph_qfi_report_json(p, 0.1, 0.0, &mut s) }, DphStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { dph_string_free(s) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["twice_j"], 12);
    let mut q = DphQfi::default();
    assert_eq!(unsafe { dph_qfi(p, 0.1, 0.0, &mut q) }, DphStatus::Ok);
    assert_eq!(v["f_theta"].as_f64().unwrap(), q.f_theta);
    unsafe { dph_probe_free(p) };
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/dephase.h");
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["dph_probe_new", "dph_qfi", "dph_last_error_message", "DPH_STATUS_BUFFER_TOO_SMALL", "DphPrediction"] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let Ok(out) = std::process::Command::new("cc").args(["-fsyntax-only", "-x", "c", header]).output() else {
        eprintln!("no C compiler found; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
