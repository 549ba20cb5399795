//! C interface to `psd_bundle`.
//!
//! Matrices and metric specifications are opaque heap handles. Every fallible
//! call returns a [`PsdbStatus`]; on failure the message is available through
//! [`psdb_last_error_message`] on the same thread.

use nalgebra::DMatrix;
use num_complex::Complex64;
use psd_bundle::io::parse_matrix;
use psd_bundle::io::AnyMatrix;
use psd_bundle::pointset::{pointset_minus, pointset_plus};
use psd_bundle::{
    gd, pairwise_gram, Error, EvalMode, FiberDivergence, GdOptions, GdResult, MetricSpec, PsdMatrix, Tolerances,
};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdbStatus {
    Ok = 0,
    Parse = 2,
    Domain = 3,
    NonConvergence = 4,
    NullPointer = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdbMode {
    ClosedForm = 0,
    OptimizedDegenerate = 1,
    FaithfulSampled = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PsdbSide {
    Minus = 0,
    Plus = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct PsdbGdResult {
    pub total: f64,
    pub grassmann_term: f64,
    pub fiber_term: f64,
    pub stratum_index: usize,
    pub mode: i32,
}

enum Entries {
    Real(PsdMatrix<f64>),
    Complex(PsdMatrix<Complex64>),
}

/// Validated PSD matrix, real or complex.
pub struct PsdbMatrix {
    entries: Entries,
}

/// Metric choice plus evaluation options.
pub struct PsdbMetricSpec {
    spec: MetricSpec,
    opts: GdOptions,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: PsdbStatus, msg: impl Into<String>) -> PsdbStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> PsdbStatus {
    let status = match e.exit_code() {
        2 => PsdbStatus::Parse,
        4 => PsdbStatus::NonConvergence,
        _ => PsdbStatus::Domain,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), PsdbStatus>) -> PsdbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            PsdbStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PsdbStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

fn null() -> PsdbStatus {
    fail(PsdbStatus::NullPointer, "null pointer argument")
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, PsdbStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn as_str<'a>(p: *const c_char) -> Result<&'a str, PsdbStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PsdbStatus::Parse, "string argument is not UTF-8"))
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], PsdbStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn tolerances(tol_psd: f64) -> Tolerances {
    let mut tol = Tolerances::default();
    if tol_psd > 0.0 {
        tol.psd = tol_psd;
    }
    tol
}

unsafe fn emit(out: *mut *mut PsdbMatrix, entries: Entries) -> Result<(), PsdbStatus> {
    *out = Box::into_raw(Box::new(PsdbMatrix { entries }));
    Ok(())
}

/// Builds a real matrix from `n * n` row-major entries. `tol_psd <= 0` selects
/// the default PSD tolerance.
///
/// # Safety
/// `data` must point to `n * n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_new(
    data: *const f64,
    n: usize,
    tol_psd: f64,
    out: *mut *mut PsdbMatrix,
) -> PsdbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let v = slice(data, n * n)?;
        let m = DMatrix::from_row_slice(n, n, v);
        let p = PsdMatrix::with_tolerances(m, &tolerances(tol_psd)).map_err(from_error)?;
        emit(out, Entries::Real(p))
    })
}

/// Builds a complex Hermitian matrix from `2 * n * n` row-major doubles,
/// real and imaginary parts interleaved.
///
/// # Safety
/// `data` must point to `2 * n * n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_new_complex(
    data: *const f64,
    n: usize,
    tol_psd: f64,
    out: *mut *mut PsdbMatrix,
) -> PsdbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let v = slice(data, 2 * n * n)?;
        let m = DMatrix::from_fn(n, n, |i, j| {
            let k = 2 * (i * n + j);
            Complex64::new(v[k], v[k + 1])
        });
        let p = PsdMatrix::with_tolerances(m, &tolerances(tol_psd)).map_err(from_error)?;
        emit(out, Entries::Complex(p))
    })
}

/// Parses one matrix in the `psdm <field> <n>` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_parse(text: *const c_char, out: *mut *mut PsdbMatrix) -> PsdbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let entries = match parse_matrix(as_str(text)?).map_err(from_error)? {
            AnyMatrix::Real(m) => Entries::Real(PsdMatrix::new(m).map_err(from_error)?),
            AnyMatrix::Complex(m) => Entries::Complex(PsdMatrix::new(m).map_err(from_error)?),
        };
        emit(out, entries)
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_free(m: *mut PsdbMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Side length of the matrix, 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_dim(m: *const PsdbMatrix) -> usize {
    match m.as_ref().map(|m| &m.entries) {
        Some(Entries::Real(p)) => p.dim(),
        Some(Entries::Complex(p)) => p.dim(),
        None => 0,
    }
}

/// 1 for complex matrices, 0 for real ones.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_is_complex(m: *const PsdbMatrix) -> i32 {
    matches!(m.as_ref().map(|m| &m.entries), Some(Entries::Complex(_))) as i32
}

/// Numerical rank with relative threshold `tol` (`<= 0` selects the default).
///
/// # Safety
/// `m` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_matrix_rank(m: *const PsdbMatrix, tol: f64, out: *mut usize) -> PsdbStatus {
    guard(|| {
        let m = as_ref(m)?;
        if out.is_null() {
            return Err(null());
        }
        let tol = if tol > 0.0 { tol } else { Tolerances::default().rank };
        *out = match &m.entries {
            Entries::Real(p) => p.rank(tol),
            Entries::Complex(p) => p.rank(tol),
        };
        Ok(())
    })
}

/// Parses a metric from names such as `"geodesic"`, `"kl"` or `"ab:0.5,0.5+sym"`.
/// A null `hausdorff` selects `algorithm1`.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_spec_new(
    grassmann: *const c_char,
    fiber: *const c_char,
    hausdorff: *const c_char,
    out: *mut *mut PsdbMetricSpec,
) -> PsdbStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let g = as_str(grassmann)?.parse().map_err(from_error)?;
        let f: FiberDivergence = as_str(fiber)?.parse().map_err(from_error)?;
        let mut spec = MetricSpec::new(g, f);
        if !hausdorff.is_null() {
            spec = spec.with_mode(as_str(hausdorff)?.parse().map_err(from_error)?);
        }
        *out = Box::into_raw(Box::new(PsdbMetricSpec {
            spec,
            opts: GdOptions::default(),
        }));
        Ok(())
    })
}

/// Overrides restarts, faithful-mode grid size and seed. Zero keeps the
/// current restarts or grid.
///
/// # Safety
/// `spec` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn psdb_spec_configure(
    spec: *mut PsdbMetricSpec,
    restarts: usize,
    grid: usize,
    seed: u64,
) -> PsdbStatus {
    guard(|| {
        let s = spec.as_mut().ok_or_else(null)?;
        if restarts > 0 {
            s.opts.restarts = restarts;
        }
        if grid > 0 {
            s.opts.grid = grid;
        }
        s.opts.seed = seed;
        Ok(())
    })
}

/// # Safety
/// `spec` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn psdb_spec_free(spec: *mut PsdbMetricSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

fn mode_code(m: EvalMode) -> PsdbMode {
    match m {
        EvalMode::ClosedForm => PsdbMode::ClosedForm,
        EvalMode::OptimizedDegenerate => PsdbMode::OptimizedDegenerate,
        EvalMode::FaithfulSampled => PsdbMode::FaithfulSampled,
    }
}

fn gd_any(a: &PsdbMatrix, b: &PsdbMatrix, s: &PsdbMetricSpec) -> Result<GdResult, PsdbStatus> {
    match (&a.entries, &b.entries) {
        (Entries::Real(x), Entries::Real(y)) => gd(x, y, &s.spec, &s.opts),
        (Entries::Complex(x), Entries::Complex(y)) => gd(x, y, &s.spec, &s.opts),
        _ => return Err(fail(PsdbStatus::Domain, "cannot mix real and complex matrices")),
    }
    .map_err(from_error)
}

/// Geometric distance between `a` and `b`. `mode` in the result holds a
/// `PsdbMode` value.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_gd(
    a: *const PsdbMatrix,
    b: *const PsdbMatrix,
    spec: *const PsdbMetricSpec,
    out: *mut PsdbGdResult,
) -> PsdbStatus {
    guard(|| {
        let (a, b, s) = (as_ref(a)?, as_ref(b)?, as_ref(spec)?);
        if out.is_null() {
            return Err(null());
        }
        let r = gd_any(a, b, s)?;
        *out = PsdbGdResult {
            total: r.total,
            grassmann_term: r.grassmann_term,
            fiber_term: r.fiber_term,
            stratum_index: r.stratum_index,
            mode: mode_code(r.mode) as i32,
        };
        Ok(())
    })
}

/// Full result as a JSON string; release it with [`psdb_string_free`].
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn psdb_gd_json(
    a: *const PsdbMatrix,
    b: *const PsdbMatrix,
    spec: *const PsdbMetricSpec,
    out: *mut *mut c_char,
) -> PsdbStatus {
    guard(|| {
        let (a, b, s) = (as_ref(a)?, as_ref(b)?, as_ref(spec)?);
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let json = gd_any(a, b, s)?.to_json();
        *out = CString::new(json).unwrap_or_default().into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn psdb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Writes the `count x count` row-major distance matrix of `items` to `out`.
///
/// # Safety
/// `items` must hold `count` live handles of one field; `out` must have room
/// for `count * count` doubles.
#[no_mangle]
pub unsafe extern "C" fn psdb_pairwise(
    items: *const *const PsdbMatrix,
    count: usize,
    spec: *const PsdbMetricSpec,
    out: *mut f64,
) -> PsdbStatus {
    guard(|| {
        let s = as_ref(spec)?;
        if count == 0 {
            return Ok(());
        }
        if items.is_null() || out.is_null() {
            return Err(null());
        }
        let handles = std::slice::from_raw_parts(items, count)
            .iter()
            .map(|&p| as_ref(p))
            .collect::<Result<Vec<_>, _>>()?;
        let mixed = || fail(PsdbStatus::Domain, "cannot mix real and complex matrices");
        let g = if let Entries::Real(_) = handles[0].entries {
            let list = handles
                .iter()
                .map(|h| match &h.entries {
                    Entries::Real(p) => Ok(p.clone()),
                    Entries::Complex(_) => Err(mixed()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            pairwise_gram(&list, &s.spec, &s.opts)
        } else {
            let list = handles
                .iter()
                .map(|h| match &h.entries {
                    Entries::Complex(p) => Ok(p.clone()),
                    Entries::Real(_) => Err(mixed()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            pairwise_gram(&list, &s.spec, &s.opts)
        }
        .map_err(from_error)?;
        let dst = std::slice::from_raw_parts_mut(out, count * count);
        for i in 0..count {
            for j in 0..count {
                dst[i * count + j] = g[(i, j)];
            }
        }
        Ok(())
    })
}

/// Point-set divergence between PD `c` (`r x r`) and PD `d` (`s x s`), both
/// row-major with `r <= s`. If `witness` is non-null it receives the optimal
/// `r x r` projection (minus) or `s x s` lift (plus), row-major.
///
/// # Safety
/// `c`, `d` must point to `r * r` and `s * s` doubles; `value` must be
/// writable; `witness`, when non-null, must have room for the witness.
#[no_mangle]
pub unsafe extern "C" fn psdb_pointset(
    fiber: *const c_char,
    c: *const f64,
    r: usize,
    d: *const f64,
    s: usize,
    side: PsdbSide,
    value: *mut f64,
    witness: *mut f64,
) -> PsdbStatus {
    guard(|| {
        if value.is_null() {
            return Err(null());
        }
        let f: FiberDivergence = as_str(fiber)?.parse().map_err(from_error)?;
        let cm = DMatrix::from_row_slice(r, r, slice(c, r * r)?);
        let dm = DMatrix::from_row_slice(s, s, slice(d, s * s)?);
        let v = match side {
            PsdbSide::Minus => pointset_minus(&f, &cm, &dm),
            PsdbSide::Plus => pointset_plus(&f, &cm, &dm),
        }
        .map_err(from_error)?;
        *value = v.value;
        if !witness.is_null() {
            let w = &v.witness;
            let k = w.nrows();
            let dst = std::slice::from_raw_parts_mut(witness, k * k);
            for i in 0..k {
                for j in 0..k {
                    dst[i * k + j] = w[(i, j)];
                }
            }
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn psdb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn psdb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
