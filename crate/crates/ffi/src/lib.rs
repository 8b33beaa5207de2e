//! C ABI over `gsbm-core`.
//!
//! Every function returns a [`GsbmStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and read with
//! [`gsbm_last_error_message`]. Specs and matrices are opaque handles owned
//! by the caller and released with their `_free` function. Panics never
//! cross the boundary; they are reported as [`GsbmStatus::Panic`]. Enum
//! arguments are passed as `int32_t` codes and checked on entry.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use gsbm_core::model::{NoiseKind, SbmParams, Shift};
use gsbm_core::prediction::EdgeMethod;
use gsbm_core::sampler::{sample_gsbm, sample_shifted_sbm, SampleSeed};
use gsbm_core::{Error, ErrorClass, GsbmSpec, SymMatrix};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsbmStatus {
    Ok = 0,
    InvalidArgument = 1,
    Numerical = 2,
    Io = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsbmShift {
    HiddenCommunity = 0,
    Balanced = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsbmNoise {
    Gaussian = 0,
    Rademacher = 1,
    /// Centered Bernoulli entries; needs `noise_q` in (0, 1).
    Bernoulli = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GsbmEdgeMethod {
    Discriminant = 0,
    DensitySupportScan = 1,
}

/// Opaque model specification.
pub struct GsbmSpecHandle(GsbmSpec);

/// Opaque dense symmetric matrix.
pub struct GsbmMatrix(SymMatrix);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsbmEdge {
    pub l_plus: f64,
    pub m1: f64,
    pub m_n: f64,
    pub method: i32,
    pub certified_window: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsbmOutlier {
    pub lambda: f64,
    pub lambda_c: f64,
    pub l_plus: f64,
    /// Outlier location; NaN when `has_outlier` is 0.
    pub z: f64,
    /// `z - l_plus`; NaN when `has_outlier` is 0.
    pub gap: f64,
    pub has_outlier: u8,
    pub marginal: u8,
    pub method: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GsbmQveSolution {
    pub m1_re: f64,
    pub m1_im: f64,
    pub m_n_re: f64,
    pub m_n_im: f64,
    pub m_avg_re: f64,
    pub m_avg_im: f64,
    pub residual: f64,
    pub iterations: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let clean = message.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).expect("no interior nul"));
}

/// Message of the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn gsbm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

enum Failure {
    Core(Error),
    Null(&'static str),
    Invalid(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<gsbm_core::SpecError> for Failure {
    fn from(e: gsbm_core::SpecError) -> Self {
        Failure::Core(e.into())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> GsbmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            GsbmStatus::Ok
        }
        Ok(Err(Failure::Core(e))) => {
            set_last_error(&e.to_string());
            match e.class() {
                ErrorClass::Validation => GsbmStatus::InvalidArgument,
                ErrorClass::Numerical => GsbmStatus::Numerical,
                ErrorClass::Io => GsbmStatus::Io,
            }
        }
        Ok(Err(Failure::Null(name))) => {
            set_last_error(&format!("null pointer: {name}"));
            GsbmStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_last_error(&msg);
            GsbmStatus::InvalidArgument
        }
        Err(_) => {
            set_last_error("internal panic");
            GsbmStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn write_out<T>(p: *mut T, name: &'static str, value: T) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    p.write(value);
    Ok(())
}

fn method_code(m: EdgeMethod) -> i32 {
    match m {
        EdgeMethod::Discriminant => GsbmEdgeMethod::Discriminant as i32,
        EdgeMethod::DensitySupportScan => GsbmEdgeMethod::DensitySupportScan as i32,
    }
}

/// Creates a validated spec. `n = 0` leaves the dimension unset.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_spec_new(
    gamma: f64,
    alpha1: f64,
    alpha2: f64,
    theta1: f64,
    theta2: f64,
    lambda: f64,
    n: usize,
    out: *mut *mut GsbmSpecHandle,
) -> GsbmStatus {
    guard(|| {
        let spec = GsbmSpec {
            gamma,
            alpha1,
            alpha2,
            theta1,
            theta2,
            lambda,
            n: (n > 0).then_some(n),
        }
        .validate()?;
        write_out(out, "out", Box::into_raw(Box::new(GsbmSpecHandle(spec))))
    })
}

/// Spec of a shifted and rescaled two-block Bernoulli model.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_spec_from_sbm(
    n: usize,
    n1: usize,
    p1: f64,
    p2: f64,
    q: f64,
    shift: i32,
    out: *mut *mut GsbmSpecHandle,
) -> GsbmStatus {
    guard(|| {
        let params = sbm_params(n, n1, p1, p2, q, shift)?;
        let spec = gsbm_core::from_sbm(&params)?.spec;
        write_out(out, "out", Box::into_raw(Box::new(GsbmSpecHandle(spec))))
    })
}

fn sbm_params(n: usize, n1: usize, p1: f64, p2: f64, q: f64, shift: i32) -> Result<SbmParams, Failure> {
    let shift = match shift {
        x if x == GsbmShift::HiddenCommunity as i32 => Shift::HiddenCommunity,
        x if x == GsbmShift::Balanced as i32 => Shift::Balanced,
        other => return Err(Failure::Invalid(format!("unknown shift code {other}"))),
    };
    Ok(SbmParams {
        n,
        n1,
        p1,
        p2,
        q,
        zero_diagonal: true,
        shift,
    })
}

/// Reads the spike strength stored in a spec.
///
/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_spec_lambda(spec: *const GsbmSpecHandle, out: *mut f64) -> GsbmStatus {
    guard(|| write_out(out, "out", deref(spec, "spec")?.0.lambda))
}

/// # Safety
/// `spec` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gsbm_spec_free(spec: *mut GsbmSpecHandle) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Samples `M = H + λuuᵀ` for a spec with its dimension set.
///
/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_sample(
    spec: *const GsbmSpecHandle,
    noise: i32,
    noise_q: f64,
    master_seed: u64,
    stream_id: u64,
    out: *mut *mut GsbmMatrix,
) -> GsbmStatus {
    guard(|| {
        let spec = deref(spec, "spec")?.0;
        let kind = match noise {
            x if x == GsbmNoise::Gaussian as i32 => NoiseKind::Gaussian,
            x if x == GsbmNoise::Rademacher as i32 => NoiseKind::Rademacher,
            x if x == GsbmNoise::Bernoulli as i32 => NoiseKind::CenteredBernoulli { q: noise_q },
            other => return Err(Failure::Invalid(format!("unknown noise code {other}"))),
        };
        let s = sample_gsbm(&spec, kind, SampleSeed::new(master_seed, stream_id))?;
        write_out(out, "out", Box::into_raw(Box::new(GsbmMatrix(s.m))))
    })
}

/// Samples a shifted and rescaled Bernoulli adjacency matrix.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_sample_sbm(
    n: usize,
    n1: usize,
    p1: f64,
    p2: f64,
    q: f64,
    shift: i32,
    master_seed: u64,
    stream_id: u64,
    out: *mut *mut GsbmMatrix,
) -> GsbmStatus {
    guard(|| {
        let params = sbm_params(n, n1, p1, p2, q, shift)?;
        let m = sample_shifted_sbm(&params, SampleSeed::new(master_seed, stream_id))?;
        write_out(out, "out", Box::into_raw(Box::new(GsbmMatrix(m))))
    })
}

/// Dimension of a matrix; 0 for null.
///
/// # Safety
/// `m` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_dim(m: *const GsbmMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// Entry `(i, j)` of a matrix.
///
/// # Safety
/// `m` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_get(m: *const GsbmMatrix, i: usize, j: usize, out: *mut f64) -> GsbmStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if i >= m.dim() || j >= m.dim() {
            return Err(Failure::Invalid(format!("index ({i}, {j}) out of range for dimension {}", m.dim())));
        }
        write_out(out, "out", m.get(i, j))
    })
}

/// All eigenvalues in descending order; `len` must equal the dimension.
///
/// # Safety
/// `m` must come from this library; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_eigenvalues(m: *const GsbmMatrix, out: *mut f64, len: usize) -> GsbmStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        if len != m.dim() {
            return Err(Error::DimensionMismatch {
                expected: m.dim(),
                found: len,
            }
            .into());
        }
        let eig = gsbm_core::spectra::eigen_symmetric(m, 0)?;
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&eig.values);
        Ok(())
    })
}

/// Writes the flat binary format: `n` as a little-endian u64, then the upper
/// triangle row by row as little-endian doubles.
///
/// # Safety
/// `m` must come from this library; `path` must be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_write_binary(m: *const GsbmMatrix, path: *const c_char) -> GsbmStatus {
    guard(|| {
        let m = &deref(m, "matrix")?.0;
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Failure::Invalid("path is not valid UTF-8".into()))?;
        let path = std::path::Path::new(path);
        gsbm_core::format::write_atomic(path, |w| m.write_binary(w))?;
        Ok(())
    })
}

/// # Safety
/// `m` must come from this library and not be used afterwards; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn gsbm_matrix_free(m: *mut GsbmMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Upper edge of the limiting spectrum of `H`.
///
/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_find_upper_edge(spec: *const GsbmSpecHandle, out: *mut GsbmEdge) -> GsbmStatus {
    guard(|| {
        let edge = gsbm_core::find_upper_edge(&deref(spec, "spec")?.0)?;
        write_out(
            out,
            "out",
            GsbmEdge {
                l_plus: edge.l_plus,
                m1: edge.double_root_m[0].re,
                m_n: edge.double_root_m[1].re,
                method: method_code(edge.method),
                certified_window: edge.certified_window,
            },
        )
    })
}

/// Predicted outlier for spike strength `lambda`.
///
/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_predict_outlier(
    spec: *const GsbmSpecHandle,
    lambda: f64,
    out: *mut GsbmOutlier,
) -> GsbmStatus {
    guard(|| {
        let p = gsbm_core::predict_outlier(&deref(spec, "spec")?.0, lambda)?;
        write_out(
            out,
            "out",
            GsbmOutlier {
                lambda: p.lambda,
                lambda_c: p.lambda_c,
                l_plus: p.l_plus,
                z: p.z.unwrap_or(f64::NAN),
                gap: p.gap.unwrap_or(f64::NAN),
                has_outlier: p.z.is_some() as u8,
                marginal: p.marginal as u8,
                method: method_code(p.method),
            },
        )
    })
}

/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_critical_lambda(spec: *const GsbmSpecHandle, out: *mut f64) -> GsbmStatus {
    guard(|| write_out(out, "out", gsbm_core::critical_lambda(&deref(spec, "spec")?.0)?))
}

/// Solves the two-block vector equation at `z = z_re + i z_im`, `z_im ≥ 0`.
///
/// # Safety
/// `spec` must come from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_solve_reduced(
    spec: *const GsbmSpecHandle,
    z_re: f64,
    z_im: f64,
    tol: f64,
    out: *mut GsbmQveSolution,
) -> GsbmStatus {
    guard(|| {
        let s = gsbm_core::solve_reduced(&deref(spec, "spec")?.0, Complex64::new(z_re, z_im), tol)?;
        write_out(
            out,
            "out",
            GsbmQveSolution {
                m1_re: s.m1.re,
                m1_im: s.m1.im,
                m_n_re: s.m_n.re,
                m_n_im: s.m_n.im,
                m_avg_re: s.m_avg.re,
                m_avg_im: s.m_avg.im,
                residual: s.residual,
                iterations: s.iterations,
            },
        )
    })
}

/// Density `Im⟨m⟩(x + iη)/π` at each of the `len` grid points.
///
/// # Safety
/// `spec` must come from this library; `grid` and `out_rho` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn gsbm_density(
    spec: *const GsbmSpecHandle,
    grid: *const f64,
    len: usize,
    eta: f64,
    out_rho: *mut f64,
) -> GsbmStatus {
    guard(|| {
        let spec = &deref(spec, "spec")?.0;
        if grid.is_null() || out_rho.is_null() {
            return Err(Failure::Null(if grid.is_null() { "grid" } else { "out_rho" }));
        }
        let xs = std::slice::from_raw_parts(grid, len);
        let curve = gsbm_core::density(spec, xs, eta)?;
        std::slice::from_raw_parts_mut(out_rho, len).copy_from_slice(&curve.rho);
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_hidden_threshold(q: f64, gamma: f64, n: usize, out: *mut f64) -> GsbmStatus {
    guard(|| write_out(out, "out", gsbm_core::hidden_threshold(q, gamma, n)?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn gsbm_unbalanced_threshold(q: f64, n: usize, out: *mut f64) -> GsbmStatus {
    guard(|| write_out(out, "out", gsbm_core::unbalanced_threshold(q, n)?))
}
