use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use riggedframes_ffi::*;

fn new_kernel(kind: RfMapKind, n: usize, weight: Option<&str>) -> *mut RfKernel {
    let weight = weight.map(|w| CString::new(w).unwrap());
    let mut out = ptr::null_mut();
    let status = unsafe {
        rf_kernel_new(kind, n, weight.as_ref().map_or(ptr::null(), |w| w.as_ptr()), -1.0, 1.0, &mut out)
    };
    assert_eq!(status, RfStatus::Ok, "{:?}", last_error());
    out
}

fn last_error() -> Option<String> {
    let p = rf_last_error_message();
    (!p.is_null()).then(|| unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned())
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let text = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned();
    unsafe { rf_string_free(p) };
    text
}

#[test]
fn dirac_kernel_is_parseval() {
    let k = new_kernel(RfMapKind::Dirac, 16, None);
    let (mut lower, mut upper) = (0.0, 0.0);
    assert_eq!(unsafe { rf_kernel_frame_bounds(k, &mut lower, &mut upper) }, RfStatus::Ok);
    assert!((lower - 1.0).abs() < 1e-10 && (upper - 1.0).abs() < 1e-10);
    assert_eq!(unsafe { rf_kernel_truncation(k) }, 16);
    unsafe { rf_kernel_free(k) };
}

#[test]
fn analysis_samples_basis_function() {
    let k = new_kernel(RfMapKind::Fourier, 8, None);
    let m = unsafe { rf_kernel_node_count(k) };
    let mut nodes = vec![0.0; m];
    assert_eq!(unsafe { rf_kernel_nodes(k, nodes.as_mut_ptr(), m) }, RfStatus::Ok);
    // h_1 has Fourier eigenvalue −i.
    let mut coeffs = [0.0; 16];
    coeffs[2] = 1.0;
    let mut samples = vec![0.0; 2 * m];
    assert_eq!(unsafe { rf_kernel_analysis(k, coeffs.as_ptr(), samples.as_mut_ptr()) }, RfStatus::Ok);
    for (j, &x) in nodes.iter().enumerate() {
        let h1 = riggedframes::schwartz::hermite_eval(1, x);
        assert!(samples[2 * j].abs() < 1e-14);
        assert!((samples[2 * j + 1] + h1).abs() < 1e-14);
    }
    let mut short = vec![0.0; 1];
    assert_eq!(unsafe { rf_kernel_nodes(k, short.as_mut_ptr(), 1) }, RfStatus::InvalidArgument);
    unsafe { rf_kernel_free(k) };
}

#[test]
fn classify_returns_json_labels() {
    let k = new_kernel(RfMapKind::WeightedDirac, 16, Some("2+sin(x)"));
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rf_kernel_classify(k, &mut out) }, RfStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    let labels = report["labels"].as_array().unwrap();
    assert!(labels.iter().any(|l| l == "frame"), "{labels:?}");
    unsafe { rf_kernel_free(k) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let bad = CString::new("sin(").unwrap();
    let status = unsafe { rf_kernel_new(RfMapKind::WeightedDirac, 8, bad.as_ptr(), 0.0, 0.0, &mut out) };
    assert_eq!(status, RfStatus::InvalidConfig);
    assert!(out.is_null());
    assert!(last_error().unwrap().contains("offset 4"));

    let status = unsafe { rf_kernel_new(RfMapKind::WeightedDirac, 8, ptr::null(), 0.0, 0.0, &mut out) };
    assert_eq!(status, RfStatus::NullPointer);
    let status = unsafe { rf_kernel_new(RfMapKind::BumpDirac, 8, ptr::null(), 1.0, -1.0, &mut out) };
    assert_eq!(status, RfStatus::InvalidConfig);

    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { rf_kernel_frame_bounds(ptr::null(), &mut a, &mut b) }, RfStatus::NullPointer);

    let k = new_kernel(RfMapKind::Dirac, 8, None);
    assert!(last_error().is_none());
    unsafe { rf_kernel_free(k) };
    unsafe { rf_kernel_free(ptr::null_mut()) };
}

#[test]
fn run_executes_commands() {
    let command = CString::new("bounds").unwrap();
    let config = CString::new(r#"{"map": {"kind": "dirac"}, "ladder": {"stages": [8, 16]}}"#).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rf_run(command.as_ptr(), config.as_ptr(), &mut out) }, RfStatus::Ok);
    let report: serde_json::Value = serde_json::from_str(&take_string(out)).unwrap();
    assert_eq!(report["stages"].as_array().unwrap().len(), 2);

    let unknown = CString::new("plot").unwrap();
    assert_eq!(unsafe { rf_run(unknown.as_ptr(), ptr::null(), &mut out) }, RfStatus::InvalidArgument);
    assert!(out.is_null());
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(rf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn static_library() -> Option<PathBuf> {
    // tests/<name>-<hash> lives in target/<profile>/deps; the archive one level up.
    let exe = std::env::current_exe().ok()?;
    let lib = exe.parent()?.parent()?.join("libriggedframes_ffi.a");
    lib.exists().then_some(lib)
}

#[test]
fn c_program_links_against_header() {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let Some(lib) = static_library() else {
        eprintln!("static library not built; skipping C link check");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status();
    let Ok(status) = status else {
        eprintln!("no C compiler; skipping C link check");
        return;
    };
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let bounds: Vec<f64> = text.split_whitespace().map(|v| v.parse().unwrap()).collect();
    assert!(bounds[0] >= 1.0 - 1e-9 && bounds[1] <= 9.0 + 1e-9, "{bounds:?}");
}
