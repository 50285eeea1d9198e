use std::ffi::CStr;
use std::ptr;

use psicv_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(psicv_last_error()) }.to_string_lossy().into_owned()
}

fn sample(values: &[f64]) -> *mut PsicvSample {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { psicv_sample_new(values.as_ptr(), values.len(), &mut s) }, PsicvStatus::Ok);
    s
}

#[test]
fn estimate_through_handles_matches_library() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(psicv_mixture_catalog(1, &mut m), PsicvStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(psicv_mixture_sample(m, 200, 5, &mut s), PsicvStatus::Ok);
        assert_eq!(psicv_sample_len(s), 200);
        let (mut est, mut g) = (0.0, 0.0);
        assert_eq!(psicv_psi_hat(s, &mut est, &mut g), PsicvStatus::Ok);
        let direct = psicv::cv::psi_hat(&psicv::mixtures::NormalMixture::catalog(1).unwrap().sample(200, 5).unwrap()).unwrap();
        assert_eq!(est, direct.estimate);
        assert_eq!(g, direct.g_cv);
        let mut cv = 0.0;
        assert_eq!(psicv_cv(s, g, &mut cv), PsicvStatus::Ok);
        assert_eq!(-cv, est);
        let mut e = 0.0;
        assert_eq!(psicv_psi_js(s, &mut e, ptr::null_mut()), PsicvStatus::Ok);
        assert!(e > 0.2 && e < 0.4);
        let (mut e, mut fb) = (0.0, -1);
        assert_eq!(psicv_psi_shd(s, &mut e, ptr::null_mut(), &mut fb), PsicvStatus::Ok);
        assert!(fb == 0 || fb == 1);
        let mut psi = 0.0;
        assert_eq!(psicv_mixture_psi(m, &mut psi), PsicvStatus::Ok);
        assert!((psi - 0.282_094_791_773_878_14).abs() < 1e-15);
        let (mut b, mut v, mut mse) = (0.0, 0.0, 0.0);
        assert_eq!(psicv_exact_error(m, 200, 0.4, &mut b, &mut v, &mut mse, ptr::null_mut()), PsicvStatus::Ok);
        assert!((mse - (b * b + v)).abs() < 1e-15);
        let mut h = 0.0;
        assert_eq!(psicv_h_hat(s, &mut h), PsicvStatus::Ok);
        assert!(h > 0.0);
        let mut t = 0.0;
        assert_eq!(psicv_theta_hat(s, 1, &mut t), PsicvStatus::Ok);
        assert_eq!(psicv_theta_hat(s, 3, &mut t), PsicvStatus::UnsupportedOrder);
        assert!(last_error().contains('3'));
        psicv_sample_free(s);
        psicv_mixture_free(m);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut s = ptr::null_mut();
        let one = [1.0];
        assert_eq!(psicv_sample_new(one.as_ptr(), 1, &mut s), PsicvStatus::InvalidArgument);
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(psicv_sample_new(ptr::null(), 3, &mut s), PsicvStatus::NullPointer);

        let flat = sample(&[2.0, 2.0, 2.0]);
        let mut e = 0.0;
        assert_eq!(psicv_psi_hat(flat, &mut e, ptr::null_mut()), PsicvStatus::DegenerateSample);
        assert_eq!(psicv_psi_hat(ptr::null(), &mut e, ptr::null_mut()), PsicvStatus::NullPointer);
        assert_eq!(psicv_psi_hat(flat, ptr::null_mut(), ptr::null_mut()), PsicvStatus::DegenerateSample);
        psicv_sample_free(flat);

        let ok = sample(&[0.1, 0.5, 0.9]);
        assert_eq!(psicv_cv(ok, -1.0, &mut e), PsicvStatus::InvalidArgument);
        assert_eq!(psicv_cv(ok, 1.0, &mut e), PsicvStatus::Ok);
        assert!(last_error().is_empty());
        psicv_sample_free(ok);

        let mut m = ptr::null_mut();
        assert_eq!(psicv_mixture_catalog(17, &mut m), PsicvStatus::InvalidArgument);
        let (w, mu, sd) = ([0.5, 0.5], [0.0, 3.0], [1.0, 0.5]);
        assert_eq!(psicv_mixture_new(w.as_ptr(), mu.as_ptr(), sd.as_ptr(), 2, &mut m), PsicvStatus::Ok);
        let mut q = 0.0;
        assert_eq!(psicv_mixture_difficulty(m, &mut q), PsicvStatus::Ok);
        assert!(q > 0.0);
        psicv_mixture_free(m);
        let bad = [0.5, 0.4];
        assert_eq!(psicv_mixture_new(bad.as_ptr(), mu.as_ptr(), sd.as_ptr(), 2, &mut m), PsicvStatus::InvalidArgument);

        let angles = [0.1, 1.0, 2.0, 6.0];
        assert_eq!(psicv_circular_psi_hat(angles.as_ptr(), 4, &mut e), PsicvStatus::Ok);
        let out_of_range = [0.1, 7.0];
        assert_eq!(psicv_circular_psi_hat(out_of_range.as_ptr(), 2, &mut e), PsicvStatus::InvalidArgument);

        psicv_sample_free(ptr::null_mut());
        psicv_mixture_free(ptr::null_mut());
        assert_eq!(psicv_sample_len(ptr::null()), 0);
        let v = CStr::from_ptr(psicv_version()).to_str().unwrap();
        assert_eq!(v, env!("CARGO_PKG_VERSION"));
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/psicv.h")).unwrap();
    for name in [
        "psicv_last_error",
        "psicv_sample_new",
        "psicv_sample_free",
        "psicv_mixture_catalog",
        "psicv_mixture_new",
        "psicv_exact_error",
        "psicv_psi_hat",
        "psicv_psi_js",
        "psicv_psi_shd",
        "psicv_h_hat",
        "psicv_hist_binwidth",
        "psicv_entropy_hat",
        "psicv_theta_hat",
        "psicv_circular_psi_hat",
        "typedef struct PsicvSample PsicvSample",
        "PSICV_STATUS_PANIC = 9",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_example_compiles_and_runs() {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap();
    let lib = profile_dir.join("libpsicv_ffi.a");
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("estimate_c");
    if !lib.exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let status = std::process::Command::new("cc")
        .args(["-Wall", "-Werror", "-I"])
        .arg(manifest.join("include"))
        .arg(manifest.join("examples/estimate.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = std::process::Command::new(&out).output().unwrap();
    assert!(run.status.success());
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.starts_with("estimate="), "{text}");
}
