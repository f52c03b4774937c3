//! C interface to `sbm-gft`.
//!
//! Specs and bases are opaque handles created by `*_new` functions and
//! released with the matching `*_free`. Every fallible call returns an
//! [`SbmGftStatus`]; on failure a message is available from
//! [`sbm_gft_last_error`] on the same thread. Output arrays are caller
//! allocated and their lengths are checked.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use nalgebra::{DMatrix, DVector};
use sbm_gft::fourier::SbmFourierBasis;
use sbm_gft::group_harmonics::{cayley_eigenvalues, AbelianGroup, ConnectionFunction};
use sbm_gft::io::RunConfig;
use sbm_gft::sbm_model::SbmSpec;
use sbm_gft::spectral::Tolerances;
use sbm_gft::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbmGftStatus {
    Ok = 0,
    /// Null pointer or undersized buffer.
    InvalidArgument = 1,
    /// Input rejected by validation.
    Validation = 2,
    /// Eigensolver did not converge.
    NoConvergence = 3,
    /// Internal panic; the handle arguments are left untouched.
    Panic = 4,
}

/// Opaque SBM specification.
pub struct SbmGftSpec(SbmSpec);

/// Opaque SBM Fourier basis.
pub struct SbmGftBasis(SbmFourierBasis);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: SbmGftStatus, msg: impl Into<String>) -> SbmGftStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SbmGftStatus {
    let status = match e {
        Error::NoConvergence { .. } => SbmGftStatus::NoConvergence,
        _ => SbmGftStatus::Validation,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SbmGftStatus) -> SbmGftStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(SbmGftStatus::Panic, msg)
        }
    }
}

unsafe fn input<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], SbmGftStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SbmGftStatus::InvalidArgument, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, len: usize, needed: usize, name: &str) -> Result<&'a mut [T], SbmGftStatus> {
    if len < needed {
        return Err(fail(SbmGftStatus::InvalidArgument, format!("{name} holds {len} entries, {needed} needed")));
    }
    if p.is_null() {
        if needed == 0 {
            return Ok(&mut []);
        }
        return Err(fail(SbmGftStatus::InvalidArgument, format!("{name} is null")));
    }
    Ok(slice::from_raw_parts_mut(p, needed))
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sbm_gft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn sbm_gft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a spec from a row-major `n×n` probability matrix, a measure of
/// length `n` and the vertex count.
///
/// # Safety
/// `a` must point to `n*n` doubles, `mu` to `n` doubles and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_new(
    a: *const f64,
    n: usize,
    mu: *const f64,
    n_vertices: usize,
    out: *mut *mut SbmGftSpec,
) -> SbmGftStatus {
    guard(|| {
        if out.is_null() {
            return fail(SbmGftStatus::InvalidArgument, "out is null");
        }
        let a = tri!(input(a, n * n, "a"));
        let mu = tri!(input(mu, n, "mu"));
        match SbmSpec::new(DMatrix::from_row_slice(n, n, a), mu.to_vec(), n_vertices) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(SbmGftSpec(s)));
                SbmGftStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Creates a spec from a JSON config (`{"A","mu","N"}` or a Cayley config).
///
/// # Safety
/// `json` must be a nul-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_from_json(json: *const c_char, out: *mut *mut SbmGftSpec) -> SbmGftStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(SbmGftStatus::InvalidArgument, "null argument");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => return fail(SbmGftStatus::Validation, "config is not UTF-8"),
        };
        match RunConfig::from_json(text).and_then(|c| c.spec(None)) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(SbmGftSpec(s)));
                SbmGftStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `spec` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_free(spec: *mut SbmGftSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Number of blocks, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_n_blocks(spec: *const SbmGftSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.n_blocks())
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `spec` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_n_vertices(spec: *const SbmGftSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.0.n_vertices())
}

/// Writes the `n` block sizes to `out`.
///
/// # Safety
/// `spec` must be a live handle and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_spec_block_sizes(spec: *const SbmGftSpec, out: *mut usize, len: usize) -> SbmGftStatus {
    guard(|| {
        let Some(spec) = spec.as_ref() else {
            return fail(SbmGftStatus::InvalidArgument, "spec is null");
        };
        let k = spec.0.block_sizes().as_slice();
        tri!(output(out, len, k.len(), "out")).copy_from_slice(k);
        SbmGftStatus::Ok
    })
}

/// Builds the SBM Fourier basis with default tolerances.
///
/// # Safety
/// `spec` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_new(spec: *const SbmGftSpec, out: *mut *mut SbmGftBasis) -> SbmGftStatus {
    guard(|| {
        let (Some(spec), false) = (spec.as_ref(), out.is_null()) else {
            return fail(SbmGftStatus::InvalidArgument, "null argument");
        };
        match SbmFourierBasis::new(&spec.0, &Tolerances::default()) {
            Ok(b) => {
                *out = Box::into_raw(Box::new(SbmGftBasis(b)));
                SbmGftStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `basis` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_free(basis: *mut SbmGftBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Number of basis vectors (rank of `W`), or 0 for a null handle.
///
/// # Safety
/// `basis` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_rank(basis: *const SbmGftBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.0.rank())
}

/// Writes the `rank` eigenvalues of `W` in decreasing order.
///
/// # Safety
/// `basis` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_w_eigenvalues(basis: *const SbmGftBasis, out: *mut f64, len: usize) -> SbmGftStatus {
    guard(|| {
        let Some(b) = basis.as_ref() else {
            return fail(SbmGftStatus::InvalidArgument, "basis is null");
        };
        let w = b.0.w_eigenvalues();
        tri!(output(out, len, w.len(), "out")).copy_from_slice(&w);
        SbmGftStatus::Ok
    })
}

/// Writes basis vector `index` (length `N`).
///
/// # Safety
/// `basis` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_vector(basis: *const SbmGftBasis, index: usize, out: *mut f64, len: usize) -> SbmGftStatus {
    guard(|| {
        let Some(b) = basis.as_ref() else {
            return fail(SbmGftStatus::InvalidArgument, "basis is null");
        };
        if index >= b.0.rank() {
            return fail(SbmGftStatus::InvalidArgument, format!("index {index} out of range for rank {}", b.0.rank()));
        }
        let u = b.0.lifted();
        tri!(output(out, len, u.nrows(), "out")).copy_from_slice(u.column(index).as_slice());
        SbmGftStatus::Ok
    })
}

/// Transforms a real signal of length `N`: writes the `rank` coefficients
/// `⟨x, u_j⟩` to `coefficients` and `‖x̂(0)‖` to `zero_norm` (if non-null).
///
/// # Safety
/// `basis` must be a live handle, `x` must point to `x_len` doubles and
/// `coefficients` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_basis_transform(
    basis: *const SbmGftBasis,
    x: *const f64,
    x_len: usize,
    coefficients: *mut f64,
    len: usize,
    zero_norm: *mut f64,
) -> SbmGftStatus {
    guard(|| {
        let Some(b) = basis.as_ref() else {
            return fail(SbmGftStatus::InvalidArgument, "basis is null");
        };
        let x = tri!(input(x, x_len, "x"));
        let out = tri!(output(coefficients, len, b.0.rank(), "coefficients"));
        let x = DVector::from_column_slice(x);
        let result = match b.0.transform_real(&x) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        out.copy_from_slice(b.0.lifted().tr_mul(&x).as_slice());
        if !zero_norm.is_null() {
            *zero_norm = result.zero_norm();
        }
        SbmGftStatus::Ok
    })
}

/// Eigenvalues `Σ_x f(x) conj(χ(x))` of the Cayley matrix of `f` on
/// `Z_{orders[0]} × … × Z_{orders[n_factors-1]}`, in character order.
/// `f` is indexed like the group elements (last factor fastest).
///
/// # Safety
/// `orders` must point to `n_factors` entries, `f` to `f_len` doubles and
/// `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sbm_gft_cayley_eigenvalues(
    orders: *const usize,
    n_factors: usize,
    f: *const f64,
    f_len: usize,
    out: *mut f64,
    len: usize,
) -> SbmGftStatus {
    guard(|| {
        let orders = tri!(input(orders, n_factors, "orders"));
        let f = tri!(input(f, f_len, "f"));
        let result = AbelianGroup::new(orders.to_vec()).and_then(|g| {
            let cf = ConnectionFunction::new(&g, f.to_vec())?;
            cayley_eigenvalues(&g, &cf)
        });
        match result {
            Ok(ev) => {
                tri!(output(out, len, ev.len(), "out")).copy_from_slice(&ev);
                SbmGftStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
