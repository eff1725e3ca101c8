//! C ABI over `svarlab-core`.
//!
//! Every fallible call returns an [`SvlStatus`]; on failure the message is
//! available from [`svl_last_error`] on the same thread. Objects are opaque
//! handles created by `svl_*_load`/`svl_*_sample`-style constructors and
//! released with the matching `svl_*_free`. Matrices cross the boundary as
//! row-major `double` buffers whose length the caller passes explicitly.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use nalgebra::{DMatrix, DVector};
use svarlab_core::bvar::{optimize_hyperparameters, posterior_sample, BvarPosterior, BvarSpec};
use svarlab_core::identification::{identify, paper_restrictions, IdentifyOptions, StructuralDrawSet, PAPER_SHOCKS};
use svarlab_core::simulate::{paper_like_dgp, simulate};
use svarlab_core::timeseries::{load_macro, MacroDataset, QuarterIndex};
use svarlab_core::{indexes, lp, structural, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dimension = 5,
    Numerical = 6,
    Infeasible = 7,
    Identification = 8,
    Missing = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Quarterly dataset.
pub struct SvlDataset {
    inner: MacroDataset,
}

/// Reduced-form posterior draws.
pub struct SvlPosterior {
    inner: BvarPosterior,
}

/// Accepted structural rotations.
pub struct SvlDrawSet {
    inner: StructuralDrawSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> SvlStatus {
    match err {
        Error::Io { .. } => SvlStatus::Io,
        Error::Parse { .. } | Error::Schema(_) | Error::NonContiguousDates(_) | Error::Duplicate(_) => SvlStatus::Parse,
        Error::Missing(_) => SvlStatus::Missing,
        Error::Dimension(_) => SvlStatus::Dimension,
        Error::NotPositiveDefinite(_) | Error::Singular(_) | Error::Collinear(_) | Error::Numerical(_) => {
            SvlStatus::Numerical
        }
        Error::Infeasible(_) => SvlStatus::Infeasible,
        Error::Identification(_) => SvlStatus::Identification,
        Error::InvalidInput(_) | Error::Stage { .. } => SvlStatus::InvalidArgument,
    }
}

enum Fail {
    Core(Error),
    Status(SvlStatus, String),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn fail<T>(status: SvlStatus, msg: impl Into<String>) -> Result<T, Fail> {
    Err(Fail::Status(status, msg.into()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SvlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SvlStatus::Ok,
        Ok(Err(Fail::Core(e))) => {
            let s = status_of(&e);
            set_error(e.to_string());
            s
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            SvlStatus::Panic
        }
    }
}

unsafe fn read_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().map_or_else(|| fail(SvlStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return fail(SvlStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_or_else(|_| fail(SvlStatus::InvalidArgument, format!("{what} is not UTF-8")), Ok)
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if p.is_null() {
        return fail(SvlStatus::NullPointer, format!("{what} is null"));
    }
    if len < need {
        return fail(SvlStatus::BufferTooSmall, format!("{what} holds {len} values, {need} needed"));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn in_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(SvlStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return fail(SvlStatus::NullPointer, "output handle pointer is null");
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn svl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn svl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a dataset CSV (`date` column followed by one column per variable).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_load(path: *const c_char, out: *mut *mut SvlDataset) -> SvlStatus {
    guard(|| {
        let path = read_str(path, "path")?;
        let inner = load_macro(Path::new(path), None)?;
        store(out, SvlDataset { inner })
    })
}

/// Builds a fully observed dataset from a row-major `t x n` buffer whose
/// first row is dated `start_year`Q`start_quarter`. Variables are named
/// `v0`, `v1`, ...
///
/// # Safety
/// `values` must hold `t * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_from_values(
    values: *const f64,
    t: usize,
    n: usize,
    start_year: i32,
    start_quarter: u8,
    out: *mut *mut SvlDataset,
) -> SvlStatus {
    guard(|| {
        let values = in_slice(values, t * n, "values")?;
        let start = QuarterIndex::new(start_year, start_quarter)?;
        let dates = (0..t as i64).map(|k| start.offset(k)).collect();
        let names = (0..n).map(|j| format!("v{j}")).collect();
        let inner = MacroDataset::from_matrix(dates, names, DMatrix::from_row_slice(t, n, values))?;
        store(out, SvlDataset { inner })
    })
}

/// Simulates `t` quarters from the built-in five-variable ground-truth SVAR.
/// `shocks_out` (optional, may be NULL) receives the true structural shocks.
///
/// # Safety
/// `out` must be writable; `shocks_out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn svl_simulate_paper_like(
    t: usize,
    seed: u64,
    out: *mut *mut SvlDataset,
    shocks_out: *mut *mut SvlDataset,
) -> SvlStatus {
    guard(|| {
        let mut dgp = paper_like_dgp();
        dgp.t = t;
        dgp.seed = seed;
        let (data, shocks) = simulate(&dgp)?;
        if !shocks_out.is_null() {
            let names = PAPER_SHOCKS.iter().map(|s| s.to_string()).collect();
            let s = MacroDataset::from_matrix(data.dates().to_vec(), names, shocks)?;
            store(shocks_out, SvlDataset { inner: s })?;
        }
        store(out, SvlDataset { inner: data })
    })
}

/// Writes the dataset as CSV.
///
/// # Safety
/// `data` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_save(data: *const SvlDataset, path: *const c_char) -> SvlStatus {
    guard(|| {
        let data = read_ref(data, "dataset")?;
        Ok(data.inner.save(Path::new(read_str(path, "path")?))?)
    })
}

/// Number of dated rows, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_rows(data: *const SvlDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.t())
}

/// Number of variables, or 0 for NULL.
///
/// # Safety
/// `data` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_cols(data: *const SvlDataset) -> usize {
    data.as_ref().map_or(0, |d| d.inner.n())
}

/// Reads one observation; `SVL_STATUS_MISSING` if it is absent.
///
/// # Safety
/// `data` must be a live handle and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_get(data: *const SvlDataset, row: usize, col: usize, value: *mut f64) -> SvlStatus {
    guard(|| {
        let data = &read_ref(data, "dataset")?.inner;
        if row >= data.t() || col >= data.n() {
            return fail(SvlStatus::InvalidArgument, format!("({row}, {col}) outside {} x {}", data.t(), data.n()));
        }
        let v = data.get(row, col).map_or_else(|| fail(SvlStatus::Missing, format!("({row}, {col}) is missing")), Ok)?;
        *out_slice(value, 1, 1, "value")?.first_mut().unwrap() = v;
        Ok(())
    })
}

/// # Safety
/// `data` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn svl_dataset_free(data: *mut SvlDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Log marginal likelihood of a Minnesota BVAR with intercept, own-lag prior
/// mean 0 and tightness `lambda`.
///
/// # Safety
/// `data` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn svl_log_marginal_likelihood(
    data: *const SvlDataset,
    lags: usize,
    lambda: f64,
    out: *mut f64,
) -> SvlStatus {
    guard(|| {
        let data = read_ref(data, "dataset")?;
        let spec = BvarSpec::new(lags, true, 0.0, lambda);
        let v = svarlab_core::bvar::log_marginal_likelihood(&data.inner, &spec)?;
        out_slice(out, 1, 1, "out")?[0] = v;
        Ok(())
    })
}

/// Samples `draws` posterior draws. With `optimize_lambda` non-zero the
/// tightness is chosen by maximizing the marginal likelihood over
/// [0.01, 2] and `lambda` is ignored.
///
/// # Safety
/// `data` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_sample(
    data: *const SvlDataset,
    lags: usize,
    lambda: f64,
    optimize_lambda: bool,
    draws: usize,
    seed: u64,
    out: *mut *mut SvlPosterior,
) -> SvlStatus {
    guard(|| {
        let data = &read_ref(data, "dataset")?.inner;
        let mut spec = BvarSpec::new(lags, true, 0.0, lambda);
        if optimize_lambda {
            spec.lambda = optimize_hyperparameters(data, &spec, (0.01, 2.0))?;
        }
        let inner = posterior_sample(data, &spec, draws, seed)?;
        store(out, SvlPosterior { inner })
    })
}

/// Number of draws, or 0 for NULL.
///
/// # Safety
/// `post` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_len(post: *const SvlPosterior) -> usize {
    post.as_ref().map_or(0, |p| p.inner.draws.len())
}

/// Tightness the posterior was sampled with, or NaN for NULL.
///
/// # Safety
/// `post` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_lambda(post: *const SvlPosterior) -> f64 {
    post.as_ref().map_or(f64::NAN, |p| p.inner.spec.lambda)
}

/// Log marginal likelihood at the sampled tightness, or NaN for NULL.
///
/// # Safety
/// `post` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_log_ml(post: *const SvlPosterior) -> f64 {
    post.as_ref().map_or(f64::NAN, |p| p.inner.log_ml)
}

/// Copies draw `index`'s residual covariance (row-major `n x n`).
///
/// # Safety
/// `post` must be a live handle and `sigma` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_sigma(
    post: *const SvlPosterior,
    index: usize,
    sigma: *mut f64,
    len: usize,
) -> SvlStatus {
    guard(|| {
        let post = &read_ref(post, "posterior")?.inner;
        let draw = post.draws.get(index).map_or_else(
            || fail(SvlStatus::InvalidArgument, format!("draw {index} of {}", post.draws.len())),
            Ok,
        )?;
        copy_row_major(&draw.sigma, out_slice(sigma, len, draw.sigma.len(), "sigma")?);
        Ok(())
    })
}

/// # Safety
/// `post` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn svl_posterior_free(post: *mut SvlPosterior) {
    if !post.is_null() {
        drop(Box::from_raw(post));
    }
}

/// Rotates posterior draws until `accepted` satisfy the built-in
/// five-variable sign and zero restrictions, with up to `max_tries`
/// rotations per draw. Requires a five-variable posterior.
///
/// # Safety
/// `post` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn svl_identify_paper(
    post: *const SvlPosterior,
    accepted: usize,
    max_tries: usize,
    seed: u64,
    out: *mut *mut SvlDrawSet,
) -> SvlStatus {
    guard(|| {
        let post = &read_ref(post, "posterior")?.inner;
        let opts = IdentifyOptions { target: accepted, max_tries, seed, importance_weights: false };
        let inner = identify(post, &paper_restrictions(), &opts)?;
        store(out, SvlDrawSet { inner })
    })
}

/// Number of accepted draws, or 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn svl_drawset_len(set: *const SvlDrawSet) -> usize {
    set.as_ref().map_or(0, |s| s.inner.draws.len())
}

/// Copies accepted draw `index`'s impact matrix (row-major `n x n`,
/// variables by shocks).
///
/// # Safety
/// `set` must be a live handle and `impact` hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svl_drawset_impact(
    set: *const SvlDrawSet,
    index: usize,
    impact: *mut f64,
    len: usize,
) -> SvlStatus {
    guard(|| {
        let set = &read_ref(set, "draw set")?.inner;
        let draw = set.draws.get(index).map_or_else(
            || fail(SvlStatus::InvalidArgument, format!("draw {index} of {}", set.draws.len())),
            Ok,
        )?;
        copy_row_major(&draw.impact, out_slice(impact, len, draw.impact.len(), "impact")?);
        Ok(())
    })
}

/// # Safety
/// `set` must be NULL or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn svl_drawset_free(set: *mut SvlDrawSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Pointwise median and `coverage` bands of structural impulse responses for
/// horizons 0..=`horizon`. Each buffer receives `(horizon + 1) * n * n`
/// values laid out as `[h][variable][shock]`.
///
/// # Safety
/// Handles must be live; each buffer must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svl_irf_bands(
    post: *const SvlPosterior,
    set: *const SvlDrawSet,
    horizon: usize,
    coverage: f64,
    median: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> SvlStatus {
    guard(|| {
        let post = &read_ref(post, "posterior")?.inner;
        let set = &read_ref(set, "draw set")?.inner;
        let bands = structural::irf_bands(post, set, horizon, coverage)?;
        let n = post.n();
        let need = (horizon + 1) * n * n;
        for (dst, src) in [(median, &bands.median), (lower, &bands.lower), (upper, &bands.upper)] {
            let dst = out_slice(dst, len, need, "band buffer")?;
            for (h, m) in src.iter().enumerate() {
                copy_row_major(m, &mut dst[h * n * n..(h + 1) * n * n]);
            }
        }
        Ok(())
    })
}

/// Logistic transition probabilities of a state series standardized by its
/// own mean and standard deviation.
///
/// # Safety
/// `state` and `out` must each hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn svl_transition_prob(state: *const f64, len: usize, eta: f64, out: *mut f64) -> SvlStatus {
    guard(|| {
        let state = in_slice(state, len, "state")?;
        let probs = indexes::transition_prob(state, eta)?;
        out_slice(out, len, len, "out")?.copy_from_slice(&probs);
        Ok(())
    })
}

/// Newey-West (Bartlett) sandwich covariance of OLS coefficients for a
/// row-major `t x k` design and residuals; bandwidth 0 gives HC0.
///
/// # Safety
/// `x` must hold `t * k` doubles, `resid` `t`, and `out` `k * k`.
#[no_mangle]
pub unsafe extern "C" fn svl_newey_west(
    x: *const f64,
    t: usize,
    k: usize,
    resid: *const f64,
    bandwidth: usize,
    out: *mut f64,
) -> SvlStatus {
    guard(|| {
        let x = DMatrix::from_row_slice(t, k, in_slice(x, t * k, "x")?);
        let resid = DVector::from_column_slice(in_slice(resid, t, "resid")?);
        let v = lp::newey_west(&x, &resid, bandwidth)?;
        copy_row_major(&v, out_slice(out, k * k, k * k, "out")?);
        Ok(())
    })
}

fn copy_row_major(m: &DMatrix<f64>, dst: &mut [f64]) {
    let c = m.ncols();
    for ((i, j), v) in (0..m.nrows()).flat_map(|i| (0..c).map(move |j| (i, j))).zip(dst.iter_mut()) {
        *v = m[(i, j)];
    }
}
