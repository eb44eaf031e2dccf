//! C interface to the S-distribution toolkit.
//!
//! Every function returns an [`SdistStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be copied
//! out with [`sdist_last_error`]. Distributions and samplers are opaque
//! handles released with their `_free` functions.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sdist::designer::{solve_alpha, solve_x0, QuantileConstraint};
use sdist::fitter::{fit, FitConfig};
use sdist::lerch::lerch_phi;
use sdist::sampler::Sampler;
use sdist::{classify, Case, Error, SDistribution, SParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdistStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParams = 2,
    Domain = 3,
    Unsatisfiable = 4,
    NoConvergence = 5,
    InsufficientData = 6,
    Panic = 7,
}

/// `S[f0, x0, alpha, g, h]`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdistParams {
    pub f0: f64,
    pub x0: f64,
    pub alpha: f64,
    pub g: f64,
    pub h: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdistFitResult {
    pub params: SdistParams,
    pub stage1_residual_ss: f64,
    pub stage2_residual_ss: f64,
    /// Residual of the joint refinement, NaN when it was not adopted.
    pub refined_residual_ss: f64,
    pub bins: usize,
}

/// Opaque distribution handle.
pub struct SdistDistribution {
    inner: SDistribution,
}

/// Opaque sampler handle; use one per thread.
pub struct SdistSampler {
    inner: Sampler,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn status_of(e: &Error) -> SdistStatus {
    match e {
        Error::InvalidParams(_) => SdistStatus::InvalidParams,
        Error::Unsatisfiable(_) | Error::NoRoot { .. } => SdistStatus::Unsatisfiable,
        Error::NotConverged { .. } => SdistStatus::NoConvergence,
        Error::InsufficientData(_) => SdistStatus::InsufficientData,
        Error::Stage { source, .. } => status_of(source),
        _ => SdistStatus::Domain,
    }
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F>(body: F) -> SdistStatus
where
    F: FnOnce() -> Result<(), Fail>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            SdistStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            SdistStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            SdistStatus::Panic
        }
    }
}

fn to_params(p: &SdistParams) -> Result<SParams, Error> {
    SParams::new(p.f0, p.x0, p.alpha, p.g, p.h)
}

fn from_params(p: &SParams) -> SdistParams {
    SdistParams {
        f0: p.f0,
        x0: p.x0,
        alpha: p.alpha,
        g: p.g,
        h: p.h,
    }
}

/// # Safety
/// `ptr` must be null or valid for writes.
unsafe fn write<T>(ptr: *mut T, what: &'static str, value: T) -> Result<(), Fail> {
    if ptr.is_null() {
        return Err(Fail::Null(what));
    }
    ptr.write(value);
    Ok(())
}

/// # Safety
/// `ptr` must be null or point to a live handle.
unsafe fn handle<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, Fail> {
    ptr.as_ref().ok_or(Fail::Null(what))
}

/// Creates a distribution; `*out` receives the handle.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdist_new(params: *const SdistParams, out: *mut *mut SdistDistribution) -> SdistStatus {
    guard(|| {
        let p = handle(params, "params")?;
        let d = SDistribution::new(to_params(p)?)?;
        write(out, "out", Box::into_raw(Box::new(SdistDistribution { inner: d })))
    })
}

/// # Safety
/// `d` must be null or a handle from [`sdist_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdist_free(d: *mut SdistDistribution) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

type Eval = fn(&SDistribution, f64) -> sdist::Result<f64>;

unsafe fn eval(d: *const SdistDistribution, arg: f64, out: *mut f64, f: Eval) -> SdistStatus {
    guard(|| {
        let d = handle(d, "distribution")?;
        let v = f(&d.inner, arg)?;
        write(out, "out", v)
    })
}

/// `X(F)`; `±inf` at the ends of infinite tails.
///
/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_quantile(d: *const SdistDistribution, f: f64, out: *mut f64) -> SdistStatus {
    eval(d, f, out, SDistribution::quantile)
}

/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_cdf(d: *const SdistDistribution, x: f64, out: *mut f64) -> SdistStatus {
    eval(d, x, out, SDistribution::cdf)
}

/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_pdf(d: *const SdistDistribution, x: f64, out: *mut f64) -> SdistStatus {
    eval(d, x, out, SDistribution::pdf)
}

/// Density as a function of the cumulative level.
///
/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_pdf_at_f(d: *const SdistDistribution, f: f64, out: *mut f64) -> SdistStatus {
    eval(d, f, out, SDistribution::pdf_at_f)
}

/// `X(0)`, or `-inf` when the left tail is infinite.
///
/// # Safety
/// `d` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_left_endpoint(d: *const SdistDistribution, out: *mut f64) -> SdistStatus {
    eval(d, 0.0, out, |d, _| d.left_endpoint())
}

/// Case number 1..6 (I..VI) and degeneracy index (`-1` when generic).
///
/// # Safety
/// `case_out` and `index_out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_classify(
    g: f64,
    h: f64,
    deg_tol: f64,
    case_out: *mut u32,
    index_out: *mut i64,
) -> SdistStatus {
    guard(|| {
        let c = classify(g, h, deg_tol)?;
        let n = match c.case {
            Case::I => 1,
            Case::II => 2,
            Case::III => 3,
            Case::IV => 4,
            Case::V => 5,
            Case::VI => 6,
        };
        write(case_out, "case_out", n)?;
        write(index_out, "index_out", c.degeneracy_index.map_or(-1, |i| i as i64))
    })
}

/// `Φ(z, 1, v)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_lerch_phi(z: f64, v: f64, tol: f64, out: *mut f64) -> SdistStatus {
    guard(|| write(out, "out", lerch_phi(z, v, tol)?))
}

/// `X0` such that `X(f_star) = x_star`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_solve_x0(
    f_star: f64,
    x_star: f64,
    f0: f64,
    alpha: f64,
    g: f64,
    h: f64,
    out: *mut f64,
) -> SdistStatus {
    guard(|| {
        let c = QuantileConstraint::new(f_star, x_star)?;
        write(out, "out", solve_x0(c, f0, alpha, g, h)?)
    })
}

/// `alpha` such that `X(f_star) = x_star`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_solve_alpha(
    f_star: f64,
    x_star: f64,
    f0: f64,
    x0: f64,
    g: f64,
    h: f64,
    out: *mut f64,
) -> SdistStatus {
    guard(|| {
        let c = QuantileConstraint::new(f_star, x_star)?;
        write(out, "out", solve_alpha(c, f0, x0, g, h)?)
    })
}

/// Sampler on stream `stream` of `seed`.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn sdist_sampler_new(
    params: *const SdistParams,
    seed: u64,
    stream: u64,
    out: *mut *mut SdistSampler,
) -> SdistStatus {
    guard(|| {
        let p = to_params(handle(params, "params")?)?;
        let s = Sampler::with_stream(p, seed, stream)?;
        write(out, "out", Box::into_raw(Box::new(SdistSampler { inner: s })))
    })
}

/// Writes `len` draws to `buf`.
///
/// # Safety
/// `s` must be a live sampler and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_sampler_fill(s: *mut SdistSampler, buf: *mut f64, len: usize) -> SdistStatus {
    guard(|| {
        let s = s.as_mut().ok_or(Fail::Null("sampler"))?;
        if len == 0 {
            return Ok(());
        }
        if buf.is_null() {
            return Err(Fail::Null("buf"));
        }
        let out = std::slice::from_raw_parts_mut(buf, len);
        Ok(s.inner.fill(out)?)
    })
}

/// # Safety
/// `s` must be null or a handle from [`sdist_sampler_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sdist_sampler_free(s: *mut SdistSampler) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Fits `len` observations; `refine = false` stops after the two-step fit.
///
/// # Safety
/// `data` must be valid for `len` reads and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_fit(data: *const f64, len: usize, refine: bool, out: *mut SdistFitResult) -> SdistStatus {
    guard(|| {
        if data.is_null() {
            return Err(Fail::Null("data"));
        }
        let xs = std::slice::from_raw_parts(data, len);
        let cfg = FitConfig {
            refine,
            ..FitConfig::default()
        };
        let r = fit(xs, &cfg)?;
        let refined = r
            .refinement
            .filter(|x| x.accepted)
            .map_or(f64::NAN, |x| x.residual_ss);
        write(
            out,
            "out",
            SdistFitResult {
                params: from_params(&r.params),
                stage1_residual_ss: r.stage1.residual_ss,
                stage2_residual_ss: r.stage2.residual_ss,
                refined_residual_ss: refined,
                bins: r.bins,
            },
        )
    })
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the buffer size the full
/// message needs, including the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sdist_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len() + 1
    })
}
