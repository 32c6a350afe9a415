//! C ABI over the spectral-flow library.
//!
//! Every entry point returns an [`SfStatus`]; on failure the message is available from
//! [`sf_last_error_message`] on the calling thread. Handles are opaque and must be
//! released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use spectral_flow::algebra::CMat;
use spectral_flow::gallery::build_tan_wrap_loop;
use spectral_flow::runspec::run_json;
use spectral_flow::specflow::{compute, Method, MethodOptions};
use spectral_flow::{Element, Error, OperatorPath, QuadratureConfig, TracialAlgebra, C64};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Disagreement = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfMethod {
    Winding = 0,
    Analytic = 1,
    Crossing = 2,
    IntegralChi = 3,
    Heat = 4,
    ResolventPower = 5,
}

impl From<SfMethod> for Method {
    fn from(m: SfMethod) -> Method {
        match m {
            SfMethod::Winding => Method::Winding,
            SfMethod::Analytic => Method::Analytic,
            SfMethod::Crossing => Method::Crossing,
            SfMethod::IntegralChi => Method::IntegralChi,
            SfMethod::Heat => Method::Heat,
            SfMethod::ResolventPower => Method::ResolventPower,
        }
    }
}

/// A tracial algebra.
pub struct SfAlgebra(Arc<TracialAlgebra>);

/// An element of an algebra.
pub struct SfElement(Element);

/// A path of Hermitian elements over `[0, 1]`.
pub struct SfPath(OperatorPath);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> SfStatus {
    match e.exit_code() {
        2 => SfStatus::InvalidArgument,
        4 => SfStatus::Disagreement,
        _ => match e {
            Error::Construction(_)
            | Error::AlgebraMismatch
            | Error::Backend { .. }
            | Error::NotHermitian { .. }
            | Error::Pole(_)
            | Error::Precondition(_) => SfStatus::InvalidArgument,
            _ => SfStatus::NumericalFailure,
        },
    }
}

struct Failure(SfStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SfStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SfStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SfStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SfStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread; empty after a successful call.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn sf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Block-matrix algebra: block `k` has dimension `dims[k]` and weight `weights[k]`.
///
/// # Safety
/// `dims` and `weights` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_algebra_blocks_new(
    dims: *const usize,
    weights: *const f64,
    n: usize,
    out: *mut *mut SfAlgebra,
) -> SfStatus {
    guard(|| {
        let dims = slice(dims, n, "dims")?;
        let weights = slice(weights, n, "weights")?;
        let blocks: Vec<(usize, f64)> = dims.iter().copied().zip(weights.iter().copied()).collect();
        emit(out, SfAlgebra(TracialAlgebra::blocks(&blocks)?))
    })
}

/// Grid algebra with sample points and measure weights.
///
/// # Safety
/// `points` and `weights` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_algebra_grid_new(
    points: *const f64,
    weights: *const f64,
    n: usize,
    out: *mut *mut SfAlgebra,
) -> SfStatus {
    guard(|| {
        let points = slice(points, n, "points")?;
        let weights = slice(weights, n, "weights")?;
        emit(out, SfAlgebra(TracialAlgebra::grid(points, weights)?))
    })
}

/// `τ(1)`.
///
/// # Safety
/// `alg` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_algebra_unit_trace(alg: *const SfAlgebra, out: *mut f64) -> SfStatus {
    guard(|| {
        let alg = handle(alg, "alg")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = alg.0.unit_trace();
        Ok(())
    })
}

/// # Safety
/// `alg` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_algebra_free(alg: *mut SfAlgebra) {
    if !alg.is_null() {
        drop(Box::from_raw(alg));
    }
}

/// Diagonal element; `diag` lists the diagonal across all blocks, or the grid values.
///
/// # Safety
/// `alg` must be a live handle, `diag` must point to `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_element_diagonal_new(
    alg: *const SfAlgebra,
    diag: *const f64,
    n: usize,
    out: *mut *mut SfElement,
) -> SfStatus {
    guard(|| {
        let alg = handle(alg, "alg")?;
        let diag = slice(diag, n, "diag")?;
        let e = if alg.0.is_grid() {
            Element::grid(&alg.0, diag)?
        } else {
            Element::diagonal(&alg.0, diag)?
        };
        emit(out, SfElement(e))
    })
}

/// General element of a block algebra from row-major blocks laid out consecutively.
/// `im` may be null for real matrices; `len` must equal the sum of the squared block dimensions.
///
/// # Safety
/// `alg` must be a live handle, `re` (and `im` if non-null) must point to `len` values
/// and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_element_blocks_new(
    alg: *const SfAlgebra,
    re: *const f64,
    im: *const f64,
    len: usize,
    out: *mut *mut SfElement,
) -> SfStatus {
    guard(|| {
        let alg = handle(alg, "alg")?;
        let re = slice(re, len, "re")?;
        let im = if im.is_null() { None } else { Some(slice(im, len, "im")?) };
        let dims = alg.0.block_list();
        let expected: usize = dims.iter().map(|&(n, _)| n * n).sum();
        if alg.0.is_grid() || len != expected {
            return Err(Failure(
                SfStatus::InvalidArgument,
                format!("expected {expected} entries for a block algebra, got {len}"),
            ));
        }
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(dims.len());
        for &(n, _) in &dims {
            blocks.push(CMat::from_fn(n, n, |i, j| {
                let k = offset + i * n + j;
                C64::new(re[k], im.map_or(0.0, |im| im[k]))
            }));
            offset += n * n;
        }
        emit(out, SfElement(Element::from_blocks(&alg.0, blocks)?))
    })
}

/// `τ(A)` as a complex number.
///
/// # Safety
/// `el` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_element_trace(el: *const SfElement, re: *mut f64, im: *mut f64) -> SfStatus {
    guard(|| {
        let el = handle(el, "element")?;
        if re.is_null() || im.is_null() {
            return Err(null("output"));
        }
        let t = el.0.trace()?;
        *re = t.re;
        *im = t.im;
        Ok(())
    })
}

/// # Safety
/// `el` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_element_free(el: *mut SfElement) {
    if !el.is_null() {
        drop(Box::from_raw(el));
    }
}

/// `t ↦ (1 − t)A + tB` for Hermitian `A`, `B` in the same algebra.
///
/// # Safety
/// `a` and `b` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_path_affine_new(a: *const SfElement, b: *const SfElement, out: *mut *mut SfPath) -> SfStatus {
    guard(|| {
        let a = handle(a, "a")?;
        let b = handle(b, "b")?;
        emit(out, SfPath(OperatorPath::affine(&a.0, &b.0)?))
    })
}

/// Loop `t ↦ tan(π(t − x − offset))` on a grid algebra.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_path_tan_wrap_new(grid: *const SfAlgebra, offset: f64, out: *mut *mut SfPath) -> SfStatus {
    guard(|| {
        let grid = handle(grid, "grid")?;
        emit(out, SfPath(build_tan_wrap_loop(&grid.0, offset)?))
    })
}

/// # Safety
/// `path` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_path_free(path: *mut SfPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// Spectral flow of `path` by one method with default parameters.
///
/// # Safety
/// `path` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sf_spectral_flow(path: *const SfPath, method: SfMethod, out: *mut f64) -> SfStatus {
    guard(|| {
        let path = handle(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = Method::from(method);
        let report = compute(&path.0, &[m], &MethodOptions::default(), &QuadratureConfig::default())?;
        *out = report.values[m.name()];
        Ok(())
    })
}

/// Executes a JSON run specification. The JSON report (or error body) is written to
/// `*out_json`, to be released with [`sf_string_free`], and the command line exit code
/// to `*exit_code`. The returned status mirrors that exit code.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out_json` and `exit_code` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sf_run_spec_json(spec: *const c_char, out_json: *mut *mut c_char, exit_code: *mut i32) -> SfStatus {
    guard(|| {
        if spec.is_null() {
            return Err(null("spec"));
        }
        if out_json.is_null() || exit_code.is_null() {
            return Err(null("output"));
        }
        let text = CStr::from_ptr(spec)
            .to_str()
            .map_err(|e| Failure(SfStatus::InvalidUtf8, e.to_string()))?;
        let outcome = run_json(text, None);
        let body = CString::new(outcome.to_json()).expect("json has no nul bytes");
        *out_json = body.into_raw();
        *exit_code = outcome.exit_code();
        match &outcome.error {
            Some(e) => Err(e.clone().into()),
            None => Ok(()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn sf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
