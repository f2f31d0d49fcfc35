use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use orbicell_ffi::*;

const K2: [u32; 2] = [1, 2];

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    oc_string_free(s);
    out
}

unsafe fn last_error() -> String {
    let e = oc_last_error();
    assert!(!e.is_null());
    CStr::from_ptr(e).to_str().unwrap().to_string()
}

#[test]
fn presentation_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(oc_presentation_new(2, K2.as_ptr(), 1, 2, 2, OcMode::Complex, true, &mut p), OcStatus::Ok);
        assert!(oc_last_error().is_null());
        let mut len = 0;
        assert_eq!(oc_presentation_poincare(p, ptr::null_mut(), 0, &mut len), OcStatus::Ok);
        let mut buf = vec![0usize; len];
        assert_eq!(oc_presentation_poincare(p, buf.as_mut_ptr(), len, &mut len), OcStatus::Ok);
        assert_eq!(buf, vec![1, 0, 0, 4, 4, 1]);

        let mut n = 0;
        oc_presentation_len(p, &mut n);
        let mut deg = 0;
        for i in 0..n {
            assert_eq!(oc_presentation_degree(p, i, &mut deg), OcStatus::Ok);
        }
        assert_eq!(oc_presentation_degree(p, n, &mut deg), OcStatus::InvalidInput);

        // too small a buffer still reports the full length
        let (mut c, mut idx) = ([0i64; 1], [0usize; 1]);
        let mut terms = 0;
        assert_eq!(oc_presentation_product(p, 0, 0, c.as_mut_ptr(), idx.as_mut_ptr(), 1, &mut terms), OcStatus::Ok);
        assert_eq!((terms, c[0], idx[0]), (1, 1, 0));

        let mut s = ptr::null_mut();
        assert_eq!(oc_presentation_to_json(p, &mut s), OcStatus::Ok);
        let json: serde_json::Value = serde_json::from_str(&take(s)).unwrap();
        assert_eq!(json["poincare"], serde_json::json!([1, 0, 0, 4, 4, 1]));
        assert_eq!(json["basis"].as_array().unwrap().len(), n);
        oc_presentation_free(p);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(oc_presentation_new(2, K2.as_ptr(), 1, 2, 1, OcMode::Complex, true, &mut p), OcStatus::Unsupported);
        assert!(p.is_null());
        assert!(last_error().contains("m > 1"));
        assert_eq!(oc_presentation_new(2, K2.as_ptr(), 1, 0, 2, OcMode::Complex, false, &mut p), OcStatus::InvalidInput);
        assert_eq!(oc_presentation_new(2, K2.as_ptr(), 1, 3, 2, OcMode::Real, false, &mut p), OcStatus::InvalidInput);
        let bad = [1u32, 5];
        assert_eq!(oc_presentation_new(2, bad.as_ptr(), 1, 2, 2, OcMode::Complex, false, &mut p), OcStatus::InvalidInput);
        assert_eq!(oc_presentation_new(2, ptr::null(), 1, 2, 2, OcMode::Complex, false, &mut p), OcStatus::NullPointer);
        assert_eq!(oc_presentation_len(ptr::null(), ptr::null_mut()), OcStatus::NullPointer);
        oc_presentation_free(ptr::null_mut());
        oc_string_free(ptr::null_mut());
    }
}

#[test]
fn products_need_products() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(oc_presentation_new(2, K2.as_ptr(), 1, 2, 1, OcMode::Complex, false, &mut p), OcStatus::Ok);
        let mut terms = 0;
        let st = oc_presentation_product(p, 0, 0, ptr::null_mut(), ptr::null_mut(), 0, &mut terms);
        assert_eq!(st, OcStatus::Unsupported);
        oc_presentation_free(p);
    }
}

#[test]
fn verify_k2() {
    unsafe {
        let mut rep = ptr::null_mut();
        assert_eq!(oc_verify(2, K2.as_ptr(), 1, 2, 2, OcMode::Complex, 100, &mut rep), OcStatus::Ok);
        let text = take(rep);
        assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
        assert_eq!(oc_verify(2, K2.as_ptr(), 1, 2, 2, OcMode::Complex, 3, &mut rep), OcStatus::Unsupported);
        assert!(rep.is_null());
    }
}

#[test]
fn cellular_verdicts() {
    let pi3 = CString::new(
        r#"{"elements":["0","a","b","c","1"],"covers":[["0","a"],["0","b"],["0","c"],["a","1"],["b","1"],["c","1"]]}"#,
    )
    .unwrap();
    let delta0 = CString::new(r#"{"ranks":{"0":1}}"#).unwrap();
    let bad = CString::new(
        r#"{"elements":["a","b","c","d","e","f","T"],"covers":[["a","c"],["a","d"],["b","c"],["b","d"],["c","e"],["d","f"],["e","T"],["f","T"]]}"#,
    )
    .unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(oc_cellular_form(pi3.as_ptr(), delta0.as_ptr(), &mut out), OcStatus::Ok);
        assert!(take(out).contains("\"rank_profile\":[1,3,2]"));
        assert_eq!(oc_cellular_form(bad.as_ptr(), ptr::null(), &mut out), OcStatus::VerificationFailed);
        assert!(take(out).contains("positive homology below T"));
        let junk = CString::new("{").unwrap();
        assert_eq!(oc_cellular_form(junk.as_ptr(), ptr::null(), &mut out), OcStatus::InvalidInput);
        assert_eq!(oc_cellular_form(ptr::null(), ptr::null(), &mut out), OcStatus::NullPointer);
    }
}

/// Compile `tests/c/smoke.c` against the generated header and the static
/// library that cargo built next to this test binary.
#[test]
fn c_smoke() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("liborbicell_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}
