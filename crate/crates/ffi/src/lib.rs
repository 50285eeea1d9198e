//! C interface to the psicv estimators.
//!
//! Samples and densities cross the boundary as opaque handles that the caller
//! releases with the matching `_free` function. Every fallible call returns a
//! `PsicvStatus`; on failure `psicv_last_error` gives a message valid until the
//! next call on the same thread. Panics are caught and reported as
//! `PSICV_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use psicv::mixtures::NormalMixture;
use psicv::oracle::ExactError;
use psicv::sample::Sample;
use psicv::{bandwidth, competitors, cv, extensions, Error};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsicvStatus {
    Ok = 0,
    InvalidArgument = 1,
    DegenerateSample = 2,
    UnsupportedOrder = 3,
    NumericFailure = 4,
    NotBracketed = 5,
    Io = 6,
    Parse = 7,
    NullPointer = 8,
    Panic = 9,
}

/// Opaque sample of real observations.
pub struct PsicvSample(Sample);

/// Opaque normal-mixture density.
pub struct PsicvMixture(NormalMixture);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PsicvStatus {
    match e {
        Error::InvalidArgument(_) => PsicvStatus::InvalidArgument,
        Error::DegenerateSample(_) => PsicvStatus::DegenerateSample,
        Error::UnsupportedOrder { .. } => PsicvStatus::UnsupportedOrder,
        Error::NumericFailure(_) => PsicvStatus::NumericFailure,
        Error::NotBracketed { .. } => PsicvStatus::NotBracketed,
        Error::Io { .. } => PsicvStatus::Io,
        Error::Parse(_) => PsicvStatus::Parse,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PsicvStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PsicvStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PsicvStatus::NullPointer
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            PsicvStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn write_opt<T>(p: *mut T, v: T) {
    if !p.is_null() {
        p.write(v);
    }
}

/// Message for the last failed call on this thread; empty after a success.
#[no_mangle]
pub extern "C" fn psicv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Copies `len` values into a new sample. At least two finite values are required.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_sample_new(values: *const f64, len: usize, out: *mut *mut PsicvSample) -> PsicvStatus {
    guard(|| {
        if values.is_null() {
            return Err(Fail::Null("values"));
        }
        let v = std::slice::from_raw_parts(values, len).to_vec();
        let s = Sample::new(v)?;
        write(out, Box::into_raw(Box::new(PsicvSample(s))), "out")
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn psicv_sample_free(s: *mut PsicvSample) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live sample handle.
#[no_mangle]
pub unsafe extern "C" fn psicv_sample_len(s: *const PsicvSample) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Catalog density `id` in 1..=16.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_catalog(id: u32, out: *mut *mut PsicvMixture) -> PsicvStatus {
    guard(|| {
        let m = NormalMixture::catalog(id)?;
        write(out, Box::into_raw(Box::new(PsicvMixture(m))), "out")
    })
}

/// Mixture from `k` (weight, mean, sd) triples stored in three arrays.
///
/// # Safety
/// Each array must hold `k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_new(
    weights: *const f64,
    means: *const f64,
    sds: *const f64,
    k: usize,
    out: *mut *mut PsicvMixture,
) -> PsicvStatus {
    guard(|| {
        if weights.is_null() || means.is_null() || sds.is_null() {
            return Err(Fail::Null("component arrays"));
        }
        let comps = (0..k)
            .map(|i| psicv::mixtures::Component { weight: *weights.add(i), mean: *means.add(i), sd: *sds.add(i) })
            .collect();
        let m = NormalMixture::new(comps)?;
        write(out, Box::into_raw(Box::new(PsicvMixture(m))), "out")
    })
}

/// # Safety
/// `m` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_free(m: *mut PsicvMixture) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// ∫f² in closed form.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_psi(m: *const PsicvMixture, out: *mut f64) -> PsicvStatus {
    guard(|| write(out, deref(m, "mixture")?.0.true_psi(), "out"))
}

/// Density-estimation difficulty Q(f).
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_difficulty(m: *const PsicvMixture, out: *mut f64) -> PsicvStatus {
    guard(|| write(out, deref(m, "mixture")?.0.q_difficulty()?, "out"))
}

/// Draws `n` observations with a seeded generator.
///
/// # Safety
/// `m` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_mixture_sample(
    m: *const PsicvMixture,
    n: usize,
    seed: u64,
    out: *mut *mut PsicvSample,
) -> PsicvStatus {
    guard(|| {
        let s = deref(m, "mixture")?.0.sample(n, seed)?;
        write(out, Box::into_raw(Box::new(PsicvSample(s))), "out")
    })
}

/// Exact bias, variance and MSE of the no-diagonals estimator, and the kde MISE, at bandwidth g.
/// Any output pointer may be null.
///
/// # Safety
/// `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn psicv_exact_error(
    m: *const PsicvMixture,
    n: usize,
    g: f64,
    bias: *mut f64,
    variance: *mut f64,
    mse: *mut f64,
    mise: *mut f64,
) -> PsicvStatus {
    guard(|| {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidArgument(format!("bandwidth must be positive, got {g}")).into());
        }
        let e = ExactError::new(&deref(m, "mixture")?.0, n)?;
        let p = e.point(g);
        write_opt(bias, p.bias);
        write_opt(variance, p.variance);
        write_opt(mse, p.mse);
        write_opt(mise, p.mise);
        Ok(())
    })
}

/// CV(g) for one bandwidth.
///
/// # Safety
/// `s` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_cv(s: *const PsicvSample, g: f64, out: *mut f64) -> PsicvStatus {
    guard(|| write(out, cv::cv(&deref(s, "sample")?.0, g)?, "out"))
}

/// ψ̂ = −min_g CV(g). `g_cv` may be null.
///
/// # Safety
/// `s` must be a live handle; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_psi_hat(s: *const PsicvSample, estimate: *mut f64, g_cv: *mut f64) -> PsicvStatus {
    guard(|| {
        let p = cv::psi_hat(&deref(s, "sample")?.0)?;
        write_opt(g_cv, p.g_cv);
        write(estimate, p.estimate, "estimate")
    })
}

/// Two-stage direct plug-in estimate; `g` (final bandwidth) may be null.
///
/// # Safety
/// `s` must be a live handle; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_psi_js(s: *const PsicvSample, estimate: *mut f64, g: *mut f64) -> PsicvStatus {
    guard(|| {
        let t = competitors::psi_js(&deref(s, "sample")?.0)?;
        write_opt(g, t.bandwidths.1);
        write(estimate, t.estimate, "estimate")
    })
}

/// Solve-the-equation plug-in estimate; `g` may be null. `fallback` (may be
/// null) is set to 1 when the rule fell back to the direct plug-in bandwidth.
///
/// # Safety
/// `s` must be a live handle; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_psi_shd(
    s: *const PsicvSample,
    estimate: *mut f64,
    g: *mut f64,
    fallback: *mut i32,
) -> PsicvStatus {
    guard(|| {
        let t = competitors::psi_shd(&deref(s, "sample")?.0)?;
        write_opt(g, t.bandwidths.1);
        write_opt(fallback, t.fallback.is_some() as i32);
        write(estimate, t.estimate, "estimate")
    })
}

/// Smoothed cross-validation kernel bandwidth.
///
/// # Safety
/// `s` must be a live handle; `h` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_h_hat(s: *const PsicvSample, h: *mut f64) -> PsicvStatus {
    guard(|| write(h, bandwidth::h_hat(&deref(s, "sample")?.0)?.bandwidth, "h"))
}

/// Histogram binwidth: `smoothed` = 0 for plain CV, 1 for smoothed CV.
///
/// # Safety
/// `s` must be a live handle; `b` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_hist_binwidth(s: *const PsicvSample, smoothed: i32, b: *mut f64) -> PsicvStatus {
    guard(|| {
        let s = &deref(s, "sample")?.0;
        let v = if smoothed != 0 { bandwidth::hist_scv_binwidth(s)?.binwidth } else { bandwidth::hist_cv_binwidth(s)?.binwidth };
        write(b, v, "b")
    })
}

/// Differential entropy by likelihood cross-validation.
///
/// # Safety
/// `s` must be a live handle; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_entropy_hat(s: *const PsicvSample, estimate: *mut f64) -> PsicvStatus {
    guard(|| write(estimate, extensions::entropy_hat(&deref(s, "sample")?.0)?.estimate, "estimate"))
}

/// θ̂_r = −min_g CV_r(g) for r ∈ {1, 2}.
///
/// # Safety
/// `s` must be a live handle; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_theta_hat(s: *const PsicvSample, r: u32, estimate: *mut f64) -> PsicvStatus {
    guard(|| write(estimate, extensions::theta_r_hat(&deref(s, "sample")?.0, r as usize)?.estimate, "estimate"))
}

/// ψ̂ for angles in [0, 2π) with the von Mises kernel.
///
/// # Safety
/// `angles` must point to `len` doubles; `estimate` writable.
#[no_mangle]
pub unsafe extern "C" fn psicv_circular_psi_hat(angles: *const f64, len: usize, estimate: *mut f64) -> PsicvStatus {
    guard(|| {
        if angles.is_null() {
            return Err(Fail::Null("angles"));
        }
        let a = std::slice::from_raw_parts(angles, len).to_vec();
        let s = psicv::sample::CircularSample::strict(a)?;
        write(estimate, extensions::circular_psi_hat(&s)?.estimate, "estimate")
    })
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn psicv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
