use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use sdist_ffi::*;

const PARAMS: SdistParams = SdistParams {
    f0: 0.5,
    x0: 10.0,
    alpha: 1.0,
    g: 0.7,
    h: 3.0,
};

fn last_error() -> String {
    let mut buf = [0 as std::ffi::c_char; 256];
    unsafe {
        sdist_last_error(buf.as_mut_ptr(), buf.len());
        CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
    }
}

#[test]
fn quantile_cdf_pdf() {
    unsafe {
        let mut d = ptr::null_mut();
        assert_eq!(sdist_new(&PARAMS, &mut d), SdistStatus::Ok);
        let mut x = 0.0;
        assert_eq!(sdist_quantile(d, 0.0, &mut x), SdistStatus::Ok);
        assert!((x - 7.2211).abs() < 5e-4);
        assert_eq!(sdist_left_endpoint(d, &mut x), SdistStatus::Ok);
        assert!((x - 7.2211).abs() < 5e-4);
        let mut f = 0.0;
        assert_eq!(sdist_cdf(d, 10.0, &mut f), SdistStatus::Ok);
        assert_eq!(f, 0.5);
        let mut p = 0.0;
        assert_eq!(sdist_pdf(d, 10.0, &mut p), SdistStatus::Ok);
        assert!((p - 0.490_572).abs() < 1e-6);
        assert_eq!(sdist_pdf_at_f(d, 0.5, &mut p), SdistStatus::Ok);
        assert!((p - 0.490_572).abs() < 1e-6);
        assert_eq!(sdist_quantile(d, 1.5, &mut x), SdistStatus::Domain);
        assert!(last_error().contains("[0, 1]"));
        sdist_free(d);
    }
}

#[test]
fn invalid_params_and_null_pointers() {
    unsafe {
        let mut d = ptr::null_mut();
        let bad = SdistParams { h: 0.5, ..PARAMS };
        assert_eq!(sdist_new(&bad, &mut d), SdistStatus::InvalidParams);
        assert!(d.is_null());
        assert!(last_error().contains("h must exceed g"));
        assert_eq!(sdist_new(ptr::null(), &mut d), SdistStatus::NullPointer);
        assert_eq!(sdist_new(&PARAMS, ptr::null_mut()), SdistStatus::NullPointer);
        let mut x = 0.0;
        assert_eq!(sdist_quantile(ptr::null(), 0.5, &mut x), SdistStatus::NullPointer);
        sdist_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_and_reports_size() {
    unsafe {
        let mut d = ptr::null_mut();
        sdist_new(&SdistParams { alpha: -1.0, ..PARAMS }, &mut d);
        let need = sdist_last_error(ptr::null_mut(), 0);
        let mut small = [1 as std::ffi::c_char; 8];
        assert_eq!(sdist_last_error(small.as_mut_ptr(), small.len()), need);
        assert_eq!(small[7], 0);
        assert_eq!(CStr::from_ptr(small.as_ptr()).to_bytes().len(), 7);
    }
}

#[test]
fn classify_and_lerch() {
    unsafe {
        let (mut case, mut index) = (0u32, 0i64);
        assert_eq!(sdist_classify(2.0, 3.0, 1e-9, &mut case, &mut index), SdistStatus::Ok);
        assert_eq!((case, index), (6, 1));
        assert_eq!(sdist_classify(0.7, 3.0, 1e-9, &mut case, &mut index), SdistStatus::Ok);
        assert_eq!((case, index), (2, -1));
        let mut phi = 0.0;
        assert_eq!(sdist_lerch_phi(0.5, 1.0, 1e-12, &mut phi), SdistStatus::Ok);
        assert!((phi - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert_eq!(sdist_lerch_phi(0.5, -2.0, 1e-12, &mut phi), SdistStatus::Domain);
    }
}

#[test]
fn design() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(sdist_solve_x0(0.0, 0.0, 0.5, 1.0, 0.1, 8.0, &mut v), SdistStatus::Ok);
        assert!((v - 0.595_685).abs() < 1e-6);
        assert_eq!(sdist_solve_alpha(0.0, 20.0, 0.5, 50.0, 0.1, 8.0, &mut v), SdistStatus::Ok);
        assert!((v - 0.019_856_2).abs() < 1e-7);
        assert_eq!(
            sdist_solve_x0(0.0, 0.0, 0.5, 1.0, 1.5, 3.0, &mut v),
            SdistStatus::Unsatisfiable
        );
    }
}

#[test]
fn sampler_and_fit() {
    unsafe {
        let truth = SdistParams { x0: 50.0, g: 0.6, ..PARAMS };
        let mut s = ptr::null_mut();
        assert_eq!(sdist_sampler_new(&truth, 11, 0, &mut s), SdistStatus::Ok);
        let mut xs = vec![0.0; 400];
        assert_eq!(sdist_sampler_fill(s, xs.as_mut_ptr(), xs.len()), SdistStatus::Ok);
        sdist_sampler_free(s);

        let mut again = ptr::null_mut();
        sdist_sampler_new(&truth, 11, 0, &mut again);
        let mut ys = vec![0.0; 400];
        sdist_sampler_fill(again, ys.as_mut_ptr(), ys.len());
        sdist_sampler_free(again);
        assert_eq!(xs, ys);

        let mut r = std::mem::MaybeUninit::<SdistFitResult>::uninit();
        assert_eq!(sdist_fit(xs.as_ptr(), xs.len(), true, r.as_mut_ptr()), SdistStatus::Ok);
        let r = r.assume_init();
        assert!(r.params.h > r.params.g && r.params.alpha > 0.0);
        assert!((r.params.x0 - 50.0).abs() < 0.5, "{r:?}");

        let mut out = std::mem::MaybeUninit::<SdistFitResult>::uninit();
        assert_eq!(sdist_fit(xs.as_ptr(), 10, false, out.as_mut_ptr()), SdistStatus::InsufficientData);
    }
}

/// Compiles a C program against the generated header and static library.
#[test]
fn c_program_links_against_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/<test binary> -> target/<profile>
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libsdist_ffi.a");
    if !lib.exists() {
        eprintln!("skipping: {} not built", lib.display());
        return;
    }
    let dir = tempfile_dir();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "sdist.h"
int main(void) {
    SdistParams p = {0.5, 10.0, 1.0, 0.7, 3.0};
    SdistDistribution *d = NULL;
    if (sdist_new(&p, &d) != SDIST_STATUS_OK) return 1;
    double x = 0.0;
    if (sdist_quantile(d, 0.0, &x) != SDIST_STATUS_OK) return 2;
    sdist_free(d);
    p.alpha = -1.0;
    if (sdist_new(&p, &d) != SDIST_STATUS_INVALID_PARAMS) return 3;
    char msg[128];
    sdist_last_error(msg, sizeof msg);
    printf("%.6f|%s\n", x, msg);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = dir.join("main");
    let status = Command::new(&cc)
        .arg(&src)
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "{:?}", out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("7.221100|"), "{text}");
    assert!(text.contains("alpha must be positive"), "{text}");
    let _ = std::fs::remove_dir_all(&dir);
}

fn tempfile_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sdist-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
