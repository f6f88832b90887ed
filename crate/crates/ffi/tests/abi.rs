use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use hypodecay_ffi::*;

const SWAP: [f64; 4] = [0.0, 1.0, 1.0, 0.0];

fn last_error() -> String {
    let p = hd_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn system(a: &[f64], n: usize, d: &[f64], n2: usize) -> (HdStatus, *mut HdSystem) {
    let mut s = ptr::null_mut();
    let st = unsafe { hd_system_new(a.as_ptr(), n, d.as_ptr(), n2, &mut s) };
    (st, s)
}

#[test]
fn swap_system_round_trip() {
    let (st, sys) = system(&SWAP, 2, &[1.0], 1);
    assert_eq!(st, HdStatus::Ok);
    let (mut rank, mut kappa, mut sk) = (0usize, 0.0f64, false);
    assert_eq!(unsafe { hd_system_info(sys, &mut rank, &mut kappa, &mut sk) }, HdStatus::Ok);
    assert_eq!((rank, kappa, sk), (2, 1.0, true));

    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hd_coeffs_select(sys, 0.1, 0.5, &mut c) }, HdStatus::Ok);
    let (mut eta0, mut ok) = (0.0, false);
    assert_eq!(unsafe { hd_coeffs_info(c, &mut eta0, &mut ok) }, HdStatus::Ok);
    assert!(ok && eta0 > 0.0);

    let mut len = 0usize;
    assert_eq!(unsafe { hd_coeffs_eps(c, ptr::null_mut(), 0, &mut len) }, HdStatus::BufferTooSmall);
    assert_eq!(len, 1);
    let mut buf = [0.0; 1];
    assert_eq!(unsafe { hd_coeffs_eps(c, buf.as_mut_ptr(), 1, &mut len) }, HdStatus::Ok);
    assert!(buf[0] > 0.0);

    let mut js = ptr::null_mut();
    assert_eq!(unsafe { hd_coeffs_to_json(c, &mut js) }, HdStatus::Ok);
    let text = unsafe { CStr::from_ptr(js) }.to_str().unwrap().to_owned();
    assert!(text.contains("\"eta0\""));
    unsafe {
        hd_string_free(js);
        hd_coeffs_free(c);
        hd_system_free(sys);
    }
}

#[test]
fn error_paths() {
    let (st, s) = system(&[0.0, 1.0, 2.0, 0.0], 2, &[1.0], 1);
    assert_eq!(st, HdStatus::InvalidSystem);
    assert!(s.is_null());
    assert!(last_error().contains("symmetric"));

    let (st, _) = system(&SWAP, 2, &[-1.0], 1);
    assert_eq!(st, HdStatus::InvalidSystem);

    let (st, _) = system(&SWAP, 2, &[1.0], 2);
    assert_eq!(st, HdStatus::InvalidArgument);

    let st = unsafe { hd_system_new(ptr::null(), 2, [1.0].as_ptr(), 1, &mut ptr::null_mut()) };
    assert_eq!(st, HdStatus::NullPointer);
    assert_eq!(unsafe { hd_system_info(ptr::null(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) }, HdStatus::NullPointer);

    // rank-deficient system: no corrector
    let (st, sys) = system(&[1.0, 0.0, 0.0, -1.0], 2, &[1.0], 1);
    assert_eq!(st, HdStatus::Ok);
    let mut c = ptr::null_mut();
    assert_eq!(unsafe { hd_coeffs_select(sys, 0.1, 0.5, &mut c) }, HdStatus::SkFails);
    assert!(c.is_null());
    assert!(last_error().contains("Kalman"));
    unsafe {
        hd_system_free(sys);
        hd_system_free(ptr::null_mut());
        hd_coeffs_free(ptr::null_mut());
        hd_string_free(ptr::null_mut());
    }
}

#[test]
fn run_config_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = CString::new(dir.path().join("r").to_str().unwrap()).unwrap();
    let mut code = -1;
    let bad = CString::new("{\"scenario\": \"x\"}").unwrap();
    assert_eq!(unsafe { hd_run_config(bad.as_ptr(), out.as_ptr(), &mut code) }, HdStatus::ConfigError);
    assert_eq!(code, 2);
    assert!(!dir.path().join("r").exists());

    let cfg = hypodecay::experiment::registry::default_config("kalman_fail")
        .unwrap()
        .with_overrides(&["grid.N=256".into(), "grid.L=30".into(), "time.T=4".into(), "analysis.fit_window=[1,4]".into()])
        .unwrap();
    let js = CString::new(cfg.to_json()).unwrap();
    assert_eq!(unsafe { hd_run_config(js.as_ptr(), out.as_ptr(), &mut code) }, HdStatus::Ok);
    assert!(code == 0 || code == 4);
    assert!(dir.path().join("r/report.json").exists());
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(hd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles and runs `tests/smoke.c` against the generated header and the static library.
#[test]
fn c_smoke_program() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("hypodecay.h").exists(), "header not generated");
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    // the test binary lives in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libhypodecay_ffi.a");
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let mut cmd = Command::new("cc");
    cmd.arg("-std=c99").arg("-Wall").arg("-Werror").arg("-I").arg(&header_dir).arg(manifest.join("tests/smoke.c"));
    if !lib.exists() {
        // header-only check
        let st = cmd.arg("-fsyntax-only").status().unwrap();
        assert!(st.success());
        return;
    }
    let st = cmd.arg(&lib).args(["-lpthread", "-ldl", "-lm"]).arg("-o").arg(&bin).status().unwrap();
    assert!(st.success(), "C link failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("rank=2"));
}
