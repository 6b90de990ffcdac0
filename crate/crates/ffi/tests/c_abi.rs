use saddlekit_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn last_error() -> String {
    let p = sk_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn fractional_kernel_round_trip() {
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(sk_kernel_fractional(2, 0.5, &mut k), SkStatus::Ok);
        let mut v = 0.0;
        assert_eq!(sk_kernel_eval(k, 1.0, &mut v), SkStatus::Ok);
        assert!((v - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);

        let mut e = SkEllipticity::default();
        assert_eq!(sk_kernel_check_ellipticity(k, 201, &mut e), SkStatus::Ok);
        assert!(e.holds);
        let mut c = SkConvexity::default();
        assert_eq!(sk_kernel_check_sqrt_convexity(k, 401, &mut c), SkStatus::Ok);
        assert!(c.strictly_convex);

        // c_{1,1/2} = 1/π
        let mut k1 = 0.0;
        assert_eq!(sk_kernel_reduce_1d(k, 2.0, &mut k1), SkStatus::Ok);
        assert!((k1 / (1.0 / (std::f64::consts::PI * 4.0)) - 1.0).abs() < 1e-6, "{k1}");

        assert_eq!(sk_kernel_eval(k, -1.0, &mut v), SkStatus::InvalidArgument);
        assert!(last_error().contains("positive"));
        sk_kernel_free(k);
    }
}

#[test]
fn errors_are_reported() {
    let mut k = ptr::null_mut();
    assert_eq!(unsafe { sk_kernel_fractional(2, 1.5, &mut k) }, SkStatus::Numerical);
    assert!(k.is_null());
    assert!(last_error().contains("γ"));
    sk_clear_error();
    assert!(sk_last_error_message().is_null());
    assert_eq!(unsafe { sk_kernel_fractional(2, 0.5, ptr::null_mut()) }, SkStatus::NullPointer);

    let text = CString::new("[grid]\nhh = 1\n").unwrap();
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(sk_config_parse(text.as_ptr(), ptr::null(), &mut cfg), SkStatus::InvalidArgument);
        assert!(last_error().contains("grid.hh"));
        assert_eq!(sk_config_parse(ptr::null(), ptr::null(), &mut cfg), SkStatus::NullPointer);
        sk_config_free(ptr::null_mut());
    }
}

#[test]
fn config_hash_and_buffer_size() {
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sk_config_default(&mut cfg) }, SkStatus::Ok);
    unsafe {
        let mut small = [0 as std::ffi::c_char; 8];
        assert_eq!(sk_config_hash(cfg, small.as_mut_ptr(), small.len()), SkStatus::BufferTooSmall);
        let mut buf = [0 as std::ffi::c_char; 65];
        assert_eq!(sk_config_hash(cfg, buf.as_mut_ptr(), buf.len()), SkStatus::Ok);
        let a = CStr::from_ptr(buf.as_ptr()).to_str().unwrap().to_string();
        assert_eq!(a.len(), 64);
        assert_eq!(sk_config_set_seed(cfg, 99), SkStatus::Ok);
        sk_config_hash(cfg, buf.as_mut_ptr(), buf.len());
        assert_ne!(CStr::from_ptr(buf.as_ptr()).to_str().unwrap(), a);
        sk_config_free(cfg);
    }
}

#[test]
fn layer_and_small_saddle() {
    let text = CString::new("[grid]\nh = 0.5\ns_max = 6\nband = 2\n[saddle]\nradii = 3, 6\n[eigen]\nradii = 1, 2, 4\n").unwrap();
    let mut cfg = ptr::null_mut();
    let mut k = ptr::null_mut();
    unsafe {
        assert_eq!(sk_config_parse(text.as_ptr(), ptr::null(), &mut cfg), SkStatus::Ok, "{}", last_error());
        assert_eq!(sk_kernel_from_config(cfg, &mut k), SkStatus::Ok);

        let name = CString::new("peierls").unwrap();
        let mut layer = ptr::null_mut();
        assert_eq!(sk_layer_solve(k, name.as_ptr(), 10.0, 0.05, &mut layer), SkStatus::Ok);
        let mut u = 0.0;
        sk_layer_eval(layer, 1.0, &mut u);
        assert!((u - 0.5).abs() < 1e-2, "{u}");
        let mut res = 1.0;
        sk_layer_residual(layer, &mut res);
        assert!(res < 1e-8);
        sk_layer_free(layer);

        let mut s = ptr::null_mut();
        assert_eq!(sk_saddle_solve(cfg, &mut s), SkStatus::Ok, "{}", last_error());
        let n = sk_saddle_len(s);
        assert!(n > 10);
        let (mut sv, mut tv, mut uv) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(sk_saddle_values(s, sv.as_mut_ptr(), tv.as_mut_ptr(), uv.as_mut_ptr(), n), SkStatus::Ok);
        assert!(sv.iter().zip(&tv).all(|(s, t)| s > t));
        assert!(uv.iter().all(|&u| u > 0.0 && u < 1.0));
        assert_eq!(sk_saddle_values(s, sv.as_mut_ptr(), tv.as_mut_ptr(), uv.as_mut_ptr(), n + 1), SkStatus::InvalidArgument);
        sk_saddle_residual(s, &mut res);
        assert!(res < 1e-6);
        sk_saddle_free(s);
        sk_kernel_free(k);
        sk_config_free(cfg);
    }
}

#[test]
fn run_subcommand_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { sk_config_default(&mut cfg) }, SkStatus::Ok);
    let cmd = CString::new("kernel-check").unwrap();
    let out = CString::new(dir.path().to_str().unwrap()).unwrap();
    let mut rep = ptr::null_mut();
    unsafe {
        assert_eq!(sk_run(cfg, cmd.as_ptr(), out.as_ptr(), ptr::null(), &mut rep), SkStatus::Ok);
        assert!(sk_report_passed(rep));
        assert_eq!(sk_report_check_count(rep), 3);
        let text = CStr::from_ptr(sk_report_text(rep)).to_str().unwrap();
        assert!(text.contains("config-hash:"));
        sk_report_free(rep);
        let bad = CString::new("nope").unwrap();
        let mut rep2 = ptr::null_mut();
        assert_eq!(sk_run(cfg, bad.as_ptr(), out.as_ptr(), ptr::null(), &mut rep2), SkStatus::InvalidArgument);
        assert!(rep2.is_null());
        sk_config_free(cfg);
    }
    assert!(dir.path().join("report.txt").is_file());
    assert!(dir.path().join("kernel.csv").is_file());
    let v = unsafe { CStr::from_ptr(sk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

/// Compiles a C program against the generated header and the static library.
#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("saddlekit.h").is_file());
    // target/<profile>/deps/<test exe> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libsaddlekit_ffi.a");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() || !lib.is_file() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "saddlekit.h"
int main(void) {
    SkKernel *k = NULL;
    if (sk_kernel_fractional(2, 0.5, &k) != SK_STATUS_OK) return 10;
    SkEllipticity e;
    if (sk_kernel_check_ellipticity(k, 101, &e) != SK_STATUS_OK || !e.holds) return 11;
    double v = 0.0;
    if (sk_kernel_eval(k, -1.0, &v) != SK_STATUS_INVALID_ARGUMENT) return 12;
    if (sk_last_error_message() == NULL) return 13;
    sk_kernel_free(k);
    printf("%s\n", sk_version());
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.path().join("main");
    let st = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(st.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), env!("CARGO_PKG_VERSION"));
}
