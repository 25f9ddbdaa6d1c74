//! C ABI for `arnagg`.
//!
//! Every entry point returns an [`ArnaggStatus`]; on failure a message is kept
//! per thread and can be read with [`arnagg_last_error`]. Matrices and
//! aggregations are opaque handles that must be released with their `_free`
//! function. Arrays are row-major `double` buffers owned by the caller.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::slice;

use arnagg::aggregate::{pipeline_dynamic, pipeline_naive, pipeline_schur, DynamicConfig};
use arnagg::mchain::{load_matrix, transient, uniformize, validate_stochastic, CsrMatrix, DenseMatrix, STOCHASTIC_TOL};
use arnagg::{error_trace, models, Aggregation, Distribution, GeneratorMatrix, NormalizationPolicy, OrthMethod,
    StochasticMatrix, TraceFlags};

/// Opaque row-stochastic matrix.
pub struct ArnaggMatrix(StochasticMatrix);

/// Opaque aggregation `(Pi, A, pi0)` with an optional stationary vector.
pub struct ArnaggAggregation(Aggregation);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArnaggStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotStochastic = 4,
    Parse = 5,
    Io = 6,
    NoConvergence = 7,
    ComplexStationary = 8,
    MissingStationary = 9,
    Degenerate = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArnaggMethod {
    Cgs = 0,
    Mgs = 1,
    Cgs2 = 2,
    Mgs2 = 3,
    Cgsir = 4,
    Mgsir = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArnaggPolicy {
    Never = 0,
    Conditional = 1,
    Always = 2,
}

impl From<ArnaggMethod> for OrthMethod {
    fn from(m: ArnaggMethod) -> Self {
        match m {
            ArnaggMethod::Cgs => OrthMethod::Cgs,
            ArnaggMethod::Mgs => OrthMethod::Mgs,
            ArnaggMethod::Cgs2 => OrthMethod::Cgs2,
            ArnaggMethod::Mgs2 => OrthMethod::Mgs2,
            ArnaggMethod::Cgsir => OrthMethod::cgsir(),
            ArnaggMethod::Mgsir => OrthMethod::mgsir(),
        }
    }
}

impl From<ArnaggPolicy> for NormalizationPolicy {
    fn from(p: ArnaggPolicy) -> Self {
        match p {
            ArnaggPolicy::Never => NormalizationPolicy::Never,
            ArnaggPolicy::Conditional => NormalizationPolicy::conditional(),
            ArnaggPolicy::Always => NormalizationPolicy::Always,
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum FfiError {
    #[error("null pointer passed as `{0}`")]
    Null(&'static str),
    #[error("`{0}` is not valid UTF-8")]
    Utf8(&'static str),
    #[error("output buffer holds {got} values, {need} required")]
    Buffer { need: usize, got: usize },
    #[error(transparent)]
    Core(#[from] arnagg::Error),
}

impl FfiError {
    fn status(&self) -> ArnaggStatus {
        use arnagg::Error as E;
        match self {
            FfiError::Null(_) => ArnaggStatus::NullPointer,
            FfiError::Utf8(_) => ArnaggStatus::InvalidArgument,
            FfiError::Buffer { .. } => ArnaggStatus::DimensionMismatch,
            FfiError::Core(e) => match e {
                E::RowSumViolation { .. } | E::GeneratorRowSum { .. } | E::NegativeEntry { .. } => {
                    ArnaggStatus::NotStochastic
                }
                E::DimensionMismatch { .. } | E::NotSquare { .. } | E::Shape(_) => ArnaggStatus::DimensionMismatch,
                E::Parse { .. } => ArnaggStatus::Parse,
                E::Io { .. } => ArnaggStatus::Io,
                E::NoConvergence(_) => ArnaggStatus::NoConvergence,
                E::ComplexStationary(_) => ArnaggStatus::ComplexStationary,
                E::MissingStationary => ArnaggStatus::MissingStationary,
                E::RankDeficient(_) | E::ZeroInitialVector | E::ZeroVector => ArnaggStatus::Degenerate,
                _ => ArnaggStatus::InvalidArgument,
            },
        }
    }
}

type FfiResult<T> = Result<T, FfiError>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> FfiResult<()>) -> ArnaggStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ArnaggStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(e.to_string());
            e.status()
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {msg}"));
            ArnaggStatus::Panic
        }
    }
}

unsafe fn input<'a, T>(ptr: *const T, len: usize, name: &'static str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(FfiError::Null(name));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn output<'a>(ptr: *mut f64, len: usize, need: usize, name: &'static str) -> FfiResult<&'a mut [f64]> {
    if ptr.is_null() {
        return Err(FfiError::Null(name));
    }
    if len < need {
        return Err(FfiError::Buffer { need, got: len });
    }
    Ok(slice::from_raw_parts_mut(ptr, need))
}

unsafe fn handle<'a, T>(ptr: *const T, name: &'static str) -> FfiResult<&'a T> {
    ptr.as_ref().ok_or(FfiError::Null(name))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> FfiResult<()> {
    if out.is_null() {
        return Err(FfiError::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn distribution(p0: *const f64, len: usize) -> FfiResult<Distribution> {
    Ok(Distribution::strict(input(p0, len, "p0")?.to_vec())?)
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn arnagg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn arnagg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a chain from an `n x n` row-major array.
///
/// # Safety
/// `data` must point to `n * n` doubles and `out` to writable storage.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_from_dense(data: *const f64, n: usize, out: *mut *mut ArnaggMatrix) -> ArnaggStatus {
    guard(|| {
        let values = input(data, n * n, "data")?.to_vec();
        let m = DenseMatrix::from_vec(n, n, values)?;
        store(out, ArnaggMatrix(validate_stochastic(m, STOCHASTIC_TOL)?))
    })
}

/// Builds a chain from CSR arrays (`row_ptr` has `n + 1` entries).
///
/// # Safety
/// `row_ptr` must hold `n + 1` entries, `col_idx` and `values` `nnz` each.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_from_csr(
    n: usize,
    row_ptr: *const usize,
    col_idx: *const usize,
    values: *const f64,
    nnz: usize,
    out: *mut *mut ArnaggMatrix,
) -> ArnaggStatus {
    guard(|| {
        let m = CsrMatrix::new(
            n,
            n,
            input(row_ptr, n + 1, "row_ptr")?.to_vec(),
            input(col_idx, nnz, "col_idx")?.to_vec(),
            input(values, nnz, "values")?.to_vec(),
        )?;
        store(out, ArnaggMatrix(validate_stochastic(m, STOCHASTIC_TOL)?))
    })
}

/// Loads a chain from a Matrix Market or CSV file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_load(path: *const c_char, out: *mut *mut ArnaggMatrix) -> ArnaggStatus {
    guard(|| {
        if path.is_null() {
            return Err(FfiError::Null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|_| FfiError::Utf8("path"))?;
        let m = load_matrix(Path::new(path), None)?;
        store(out, ArnaggMatrix(validate_stochastic(m, STOCHASTIC_TOL)?))
    })
}

/// Uniformizes an `n x n` generator; `gamma <= 0` selects the largest exit rate.
///
/// # Safety
/// `data` must point to `n * n` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_uniformize(
    data: *const f64,
    n: usize,
    gamma: f64,
    out: *mut *mut ArnaggMatrix,
) -> ArnaggStatus {
    guard(|| {
        let q = GeneratorMatrix::new(DenseMatrix::from_vec(n, n, input(data, n * n, "data")?.to_vec())?)?;
        let gamma = (gamma > 0.0).then_some(gamma);
        store(out, ArnaggMatrix(uniformize(&q, gamma)?))
    })
}

/// The three-state chain on which both error bounds are tight. Its initial
/// vector is written to `p0_out` (3 values) when non-NULL.
///
/// # Safety
/// `p0_out` must be NULL or hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_counterexample(
    epsilon: f64,
    out: *mut *mut ArnaggMatrix,
    p0_out: *mut f64,
) -> ArnaggStatus {
    guard(|| {
        let (p, p0) = models::counterexample(epsilon)?;
        if !p0_out.is_null() {
            slice::from_raw_parts_mut(p0_out, 3).copy_from_slice(p0.values());
        }
        store(out, ArnaggMatrix(p))
    })
}

/// # Safety
/// `m` must be NULL or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_free(m: *mut ArnaggMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of states, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arnagg_matrix_dim(m: *const ArnaggMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.n())
}

/// `p_k = p0 P^k` into `out` (`n` values).
///
/// # Safety
/// `p0` and `out` must hold `n` doubles each.
#[no_mangle]
pub unsafe extern "C" fn arnagg_transient(
    m: *const ArnaggMatrix,
    p0: *const f64,
    n: usize,
    k: usize,
    out: *mut f64,
    out_len: usize,
) -> ArnaggStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let pk = transient(&m.0, &distribution(p0, n)?, k)?;
        output(out, out_len, pk.len(), "out")?.copy_from_slice(pk.values());
        Ok(())
    })
}

/// Arnoldi aggregation of the given size; with `stationary` set the aggregated
/// stationary vector and convergence criterion are computed as well.
///
/// # Safety
/// `p0` must hold `n` doubles, `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregate(
    m: *const ArnaggMatrix,
    p0: *const f64,
    n: usize,
    size: usize,
    method: ArnaggMethod,
    stationary: bool,
    out: *mut *mut ArnaggAggregation,
) -> ArnaggStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let p0 = distribution(p0, n)?;
        let agg = if stationary {
            pipeline_schur(&m.0, &p0, size, method.into())?
        } else {
            pipeline_naive(&m.0, &p0, size, method.into())?
        };
        store(out, ArnaggAggregation(agg))
    })
}

/// Grows the aggregation in steps of `step_size` until the convergence
/// criterion drops to `epsilon` or `max_size` is reached.
///
/// # Safety
/// `p0` must hold `n` doubles, `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregate_dynamic(
    m: *const ArnaggMatrix,
    p0: *const f64,
    n: usize,
    max_size: usize,
    epsilon: f64,
    step_size: usize,
    method: ArnaggMethod,
    out: *mut *mut ArnaggAggregation,
) -> ArnaggStatus {
    guard(|| {
        let m = handle(m, "m")?;
        let config = DynamicConfig { method: method.into(), ..DynamicConfig::new(max_size, epsilon, step_size) };
        store(out, ArnaggAggregation(pipeline_dynamic(&m.0, &distribution(p0, n)?, config)?))
    })
}

/// # Safety
/// `a` must be NULL or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_free(a: *mut ArnaggAggregation) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Aggregated size `m`, or 0 for NULL.
///
/// # Safety
/// `a` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_size(a: *const ArnaggAggregation) -> usize {
    a.as_ref().map_or(0, |a| a.0.size())
}

/// Copies `Pi` (`m x m`, row-major).
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_pi(a: *const ArnaggAggregation, out: *mut f64, out_len: usize) -> ArnaggStatus {
    guard(|| {
        let d = handle(a, "a")?.0.pi().data();
        output(out, out_len, d.len(), "out")?.copy_from_slice(d);
        Ok(())
    })
}

/// Copies `A` (`m x n`, row-major).
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_a(a: *const ArnaggAggregation, out: *mut f64, out_len: usize) -> ArnaggStatus {
    guard(|| {
        let d = handle(a, "a")?.0.a().data();
        output(out, out_len, d.len(), "out")?.copy_from_slice(d);
        Ok(())
    })
}

/// Copies `pi0` (`m` values).
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_pi0(a: *const ArnaggAggregation, out: *mut f64, out_len: usize) -> ArnaggStatus {
    guard(|| {
        let d = handle(a, "a")?.0.pi0();
        output(out, out_len, d.len(), "out")?.copy_from_slice(d);
        Ok(())
    })
}

/// Copies the disaggregated stationary vector `pi^T A` (`n` values).
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_stationary(
    a: *const ArnaggAggregation,
    out: *mut f64,
    out_len: usize,
) -> ArnaggStatus {
    guard(|| {
        let agg = &handle(a, "a")?.0;
        let pi = agg.pi_stationary().ok_or(arnagg::Error::MissingStationary)?;
        let x = agg.disaggregate(pi);
        output(out, out_len, x.len(), "out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Convergence criterion of an aggregation built with a stationary vector.
///
/// # Safety
/// `out` must point to one double.
#[no_mangle]
pub unsafe extern "C" fn arnagg_aggregation_criterion(a: *const ArnaggAggregation, out: *mut f64) -> ArnaggStatus {
    guard(|| {
        let c = handle(a, "a")?.0.criterion().ok_or(arnagg::Error::MissingStationary)?;
        *output(out, 1, 1, "out")?.first_mut().expect("one slot") = c;
        Ok(())
    })
}

/// Error `||p~_k - p_k||_1` and both bounds at the ascending steps `ks`.
/// Each non-NULL output receives `ks_len` values.
///
/// # Safety
/// `p0` must hold `n` doubles, `ks` `ks_len` entries, and every non-NULL
/// output `ks_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn arnagg_error_trace(
    m: *const ArnaggMatrix,
    p0: *const f64,
    n: usize,
    a: *const ArnaggAggregation,
    ks: *const usize,
    ks_len: usize,
    policy: ArnaggPolicy,
    e_k: *mut f64,
    bound_specific: *mut f64,
    bound_general: *mut f64,
) -> ArnaggStatus {
    guard(|| {
        let (m, agg) = (handle(m, "m")?, handle(a, "a")?);
        let ks = input(ks, ks_len, "ks")?;
        let flags = TraceFlags { bounds: !bound_specific.is_null() || !bound_general.is_null(), stationary: false };
        let t = error_trace(&m.0, &distribution(p0, n)?, &agg.0, ks, policy.into(), flags)?;
        for (ptr, src) in [(e_k, &t.e_k), (bound_specific, &t.bound_specific), (bound_general, &t.bound_general)] {
            if !ptr.is_null() {
                output(ptr, ks_len, ks_len, "trace output")?.copy_from_slice(src);
            }
        }
        Ok(())
    })
}
