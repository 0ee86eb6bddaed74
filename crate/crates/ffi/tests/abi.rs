use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use lrb_ffi::*;

const VG: &str = r#"{"family": {"name": "vg", "m": 2.0, "theta": 0.0, "sigma": 1.0}, "horizon": 1.0, "seed": 7,
    "terminal": {"atoms": [[0.0, 0.3], [1.0, 0.7]]},
    "market": {"instrument": {"kind": "binary_bond", "t": 0.5, "xi": 0.45}}}"#;

const GIG: &str = r#"{"family": {"name": "stable_half", "c": 2.0}, "horizon": 1.0,
    "terminal": {"density": {"law": "gig", "lambda": 0.5, "delta": 2.0, "gamma": 1.0}}}"#;

fn build(json: &str) -> *mut LrbModel {
    let text = CString::new(json).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lrb_model_from_json(text.as_ptr(), &mut m) }, LrbStatus::Ok);
    assert!(!m.is_null());
    m
}

fn last_error() -> String {
    let p = lrb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { lrb_string_free(p) };
    s
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(lrb_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn densities_through_the_handle() {
    let m = build(VG);
    let mut h = 0.0;
    assert_eq!(unsafe { lrb_model_horizon(m, &mut h) }, LrbStatus::Ok);
    assert_eq!(h, 1.0);
    let mut psi0 = 0.0;
    assert_eq!(unsafe { lrb_model_psi(m, 0.0, 0.0, &mut psi0) }, LrbStatus::Ok);
    assert!((psi0 - 1.0).abs() < 1e-12);
    let (mut a, mut b) = (0.0, 0.0);
    unsafe {
        assert_eq!(lrb_model_marginal_density(m, 0.4, 0.3, &mut a), LrbStatus::Ok);
        assert_eq!(lrb_model_transition_density(m, 0.0, 0.0, 0.4, 0.3, &mut b), LrbStatus::Ok);
    }
    assert!(a > 0.0 && (a - b).abs() <= 1e-14 * a);
    let mut mean = 0.0;
    assert_eq!(unsafe { lrb_model_terminal_mean(m, 0.0, 0.0, &mut mean) }, LrbStatus::Ok);
    assert!((mean - 0.7).abs() < 1e-14);
    unsafe { lrb_model_free(m) };
}

#[test]
fn errors_map_to_status_codes() {
    let bad = CString::new("{\"family\": 3}").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { lrb_model_from_json(bad.as_ptr(), &mut m) }, LrbStatus::InvalidArgument);
    assert!(m.is_null());
    assert!(!last_error().is_empty());

    let mut out = 0.0;
    assert_eq!(unsafe { lrb_model_psi(ptr::null(), 0.1, 0.0, &mut out) }, LrbStatus::InvalidArgument);
    assert!(last_error().contains("null"));

    let m = build(VG);
    assert_eq!(unsafe { lrb_model_psi(m, 2.0, 0.0, &mut out) }, LrbStatus::Domain);
    assert_eq!(unsafe { lrb_model_psi(m, 0.5, 0.0, ptr::null_mut()) }, LrbStatus::InvalidArgument);
    // A successful call clears the message.
    assert_eq!(unsafe { lrb_model_psi(m, 0.5, 0.0, &mut out) }, LrbStatus::Ok);
    assert!(lrb_last_error().is_null());
    unsafe { lrb_model_free(m) };

    let gamma_call = r#"{"family": {"name": "gamma", "m": 0.5}, "horizon": 1.0,
        "terminal": {"density": {"law": "gamma", "shape": 2.0, "rate": 2.0}},
        "market": {"instrument": {"kind": "call", "s": 0.1, "xi": 0.05, "t": 0.5, "strike": 0.8}}}"#;
    let m = build(gamma_call);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lrb_model_price_json(m, 1, &mut s) }, LrbStatus::Unsupported);
    assert!(s.is_null());
    unsafe { lrb_model_free(m) };
}

#[test]
fn sampling_is_deterministic_and_checks_the_buffer() {
    let m = build(VG);
    let grid = [0.0, 0.25, 0.5, 1.0];
    let mut a = vec![0.0; 40];
    let mut b = vec![0.0; 40];
    unsafe {
        assert_eq!(lrb_model_sample_paths(m, grid.as_ptr(), 4, 10, 3, a.as_mut_ptr(), 40), LrbStatus::Ok);
        assert_eq!(lrb_model_sample_paths(m, grid.as_ptr(), 4, 10, 3, b.as_mut_ptr(), 40), LrbStatus::Ok);
        assert_eq!(lrb_model_sample_paths(m, grid.as_ptr(), 4, 10, 3, b.as_mut_ptr(), 39), LrbStatus::InvalidArgument);
    }
    assert_eq!(a, b);
    for row in a.chunks(4) {
        assert_eq!(row[0], 0.0);
        assert!(row[3] == 0.0 || row[3] == 1.0);
    }
    unsafe { lrb_model_free(m) };
}

#[test]
fn json_reports() {
    let m = build(VG);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lrb_model_price_json(m, 7, &mut s) }, LrbStatus::Ok);
    let price: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
    assert!(price["price"].as_f64().unwrap() > 0.0);
    unsafe { lrb_model_free(m) };

    let m = build(GIG);
    let (t, x) = ([0.1, 0.25, 0.4], [0.2, 0.9, 1.5]);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lrb_model_reserve_json(m, t.as_ptr(), x.as_ptr(), 3, &mut s) }, LrbStatus::Ok);
    let r: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
    let (u, closed) = (r["U"].as_f64().unwrap(), r["U_closed_form"].as_f64().unwrap());
    assert!((u - closed).abs() <= 1e-9 * closed);
    let bad = [0.2, 0.1, 0.3];
    assert_eq!(unsafe { lrb_model_reserve_json(m, bad.as_ptr(), x.as_ptr(), 3, &mut s) }, LrbStatus::InvalidArgument);
    unsafe { lrb_model_free(m) };
}

#[test]
fn closed_form_bridges() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(lrb_stable_half_bridge_cdf(0.5, 1.0, 10.0, 1.0, 1.0, &mut v), LrbStatus::Ok);
        assert_eq!(v, 1.0);
        assert_eq!(lrb_cauchy_bridge_density(0.5, 1.0, 0.0, 0.0, 1.0, &mut v), LrbStatus::Ok);
        assert!(v > 0.0 && v.is_finite());
        assert_eq!(lrb_cauchy_bridge_density(1.5, 1.0, 0.0, 0.0, 1.0, &mut v), LrbStatus::Domain);
    }
}

#[test]
fn empty_grid_writes_nothing() {
    let m = build(VG);
    let mut buf = [-1.0; 1];
    let st = unsafe { lrb_model_sample_paths(m, [0.0].as_ptr(), 0, 3, 1, buf.as_mut_ptr(), 1) };
    assert_eq!(st, LrbStatus::Ok);
    assert_eq!(buf[0], -1.0);
    unsafe { lrb_model_free(m) };
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("liblrb_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let exe = Path::new(env!("CARGO_TARGET_TMPDIR")).join("lrb_smoke");
    let status = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Wextra", "-Werror", "-I"])
        .arg(root.join("include"))
        .arg(root.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}: {}", out.status, String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
