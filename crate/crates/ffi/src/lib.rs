//! C ABI over the `wmcs` library.
//!
//! Datasets and confidence sets are opaque handles owned by the caller and
//! released with the matching `_free` function. Models travel as JSON in the
//! same shape the command-line tool reads. Every function returns a
//! [`WmcsStatus`]; on failure the message is available from
//! [`wmcs_last_error`] on the same thread.
//!
//! Strings returned through `out` parameters are allocated here and must be
//! released with [`wmcs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wmcs::metrics::{self, DEFAULT_QUAD_TOL};
use wmcs::{
    build_local_mcs, build_mcs, build_mixture_set, ConfidenceSet, Dataset, Error, FamilyKind,
    Interval, ModelSpec, OptimizerOptions,
};

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WmcsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument was out of range or otherwise unusable.
    InvalidArgument = 2,
    /// The data do not support the requested computation (too few
    /// observations, non-convergence, degenerate variance, ...).
    Statistical = 3,
    /// Malformed JSON or text input.
    Parse = 4,
    Io = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Which distance [`wmcs_distance`] computes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WmcsDistance {
    Hellinger = 0,
    L2 = 1,
    /// `KL(first ‖ second)`.
    KullbackLeibler = 2,
}

/// A validated sample of observations.
pub struct WmcsDataset(Dataset);

/// A fitted model confidence set.
pub struct WmcsConfidenceSet(ConfidenceSet);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(WmcsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            e if e.is_statistical() => WmcsStatus::Statistical,
            Error::Parse { .. } | Error::Json(_) | Error::Csv(_) => WmcsStatus::Parse,
            Error::Io(_) => WmcsStatus::Io,
            _ => WmcsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure(WmcsStatus::Parse, e.to_string())
    }
}

fn null(name: &str) -> Failure {
    Failure(WmcsStatus::NullPointer, format!("`{name}` is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(WmcsStatus::InvalidArgument, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> WmcsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => WmcsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(format!("panic: {message}"));
            WmcsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(WmcsStatus::Parse, format!("`{name}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| invalid("output contains a NUL byte"))
}

fn models_from_json(text: &str) -> Result<Vec<ModelSpec>, Failure> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let models = value.get("models").cloned().unwrap_or(value);
    Ok(serde_json::from_value(models)?)
}

fn families_from_json(text: &str) -> Result<Vec<FamilyKind>, Failure> {
    let names: Vec<String> = serde_json::from_str(text)?;
    Ok(names
        .iter()
        .map(|n| FamilyKind::parse(n))
        .collect::<Result<_, _>>()?)
}

/// Message of the last failure on this thread, or null if there was none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wmcs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a pointer obtained from this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wmcs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Copies `len` observations into a new dataset.
///
/// # Safety
/// `values` must point to `len` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_dataset_new(
    values: *const f64,
    len: usize,
    out: *mut *mut WmcsDataset,
) -> WmcsStatus {
    guard(|| {
        let values = slice_arg(values, len, "values")?;
        let data = Dataset::new(values.to_vec())?;
        write_out(out, Box::into_raw(Box::new(WmcsDataset(data))))
    })
}

/// # Safety
/// `data` must be null or a live handle from [`wmcs_dataset_new`].
#[no_mangle]
pub unsafe extern "C" fn wmcs_dataset_free(data: *mut WmcsDataset) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_dataset_len(data: *const WmcsDataset, out: *mut usize) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        write_out(out, data.0.len())
    })
}

/// Empirical distribution function `#{x_i ≤ t} / n`.
///
/// # Safety
/// `data` must be a live dataset handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_ecdf(data: *const WmcsDataset, t: f64, out: *mut f64) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        write_out(out, data.0.ecdf(t))
    })
}

/// Critical value of the pairwise tests for `k` candidates at level `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_critical_value(alpha: f64, k: usize, out: *mut f64) -> WmcsStatus {
    guard(|| write_out(out, wmcs::critical_value(alpha, k)?))
}

/// Largest per-region level keeping the overall level at `alpha` over `m` regions.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_beta_budget(alpha: f64, m: usize, out: *mut f64) -> WmcsStatus {
    guard(|| write_out(out, wmcs::beta_budget(alpha, m)?))
}

/// Mixing weight maximizing the sample mean of `ln(a f + (1 − a) g)`, given
/// the two component densities evaluated at each observation.
///
/// # Safety
/// `f_vals` and `g_vals` must each point to `len` readable doubles; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_optimal_alpha(
    f_vals: *const f64,
    g_vals: *const f64,
    len: usize,
    out: *mut f64,
) -> WmcsStatus {
    guard(|| {
        let f = slice_arg(f_vals, len, "f_vals")?;
        let g = slice_arg(g_vals, len, "g_vals")?;
        write_out(out, wmcs::optimal_alpha(f, g)?)
    })
}

/// Fits one model (a JSON model object) and returns the fit as JSON.
///
/// # Safety
/// `data` must be a live dataset handle, `model_json` a NUL-terminated
/// string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_fit_json(
    data: *const WmcsDataset,
    model_json: *const c_char,
    out: *mut *mut c_char,
) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let spec: ModelSpec = serde_json::from_str(str_arg(model_json, "model_json")?)?;
        let fit = wmcs::fit_qmle(&spec, &data.0, &OptimizerOptions::default())?;
        write_out(out, into_c_string(serde_json::to_string(&fit)?)?)
    })
}

/// Confidence set over the candidates in `models_json`, either an array of
/// model objects or `{"models": [...]}`.
///
/// # Safety
/// `data` must be a live dataset handle, `models_json` a NUL-terminated
/// string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_new(
    data: *const WmcsDataset,
    models_json: *const c_char,
    alpha: f64,
    out: *mut *mut WmcsConfidenceSet,
) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let specs = models_from_json(str_arg(models_json, "models_json")?)?;
        let set = build_mcs(&specs, &data.0, alpha, &OptimizerOptions::default())?;
        write_out(out, Box::into_raw(Box::new(WmcsConfidenceSet(set))))
    })
}

/// Local confidence set on `(lower, upper]` over the families named in
/// `families_json`, e.g. `["normal", "laplace"]`.
///
/// # Safety
/// `data` must be a live dataset handle, `families_json` a NUL-terminated
/// string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_local_mcs_new(
    data: *const WmcsDataset,
    families_json: *const c_char,
    lower: f64,
    upper: f64,
    alpha: f64,
    out: *mut *mut WmcsConfidenceSet,
) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let families = families_from_json(str_arg(families_json, "families_json")?)?;
        let region = Interval::new(lower, upper)?;
        let set = build_local_mcs(
            &families,
            &data.0,
            region,
            alpha,
            &OptimizerOptions::default(),
        )?;
        write_out(out, Box::into_raw(Box::new(WmcsConfidenceSet(set))))
    })
}

/// # Safety
/// `set` must be null or a live confidence set handle.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_free(set: *mut WmcsConfidenceSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Number of candidates that were fitted and tested. Indices below refer to
/// this list, in input order with failed candidates removed.
///
/// # Safety
/// `set` must be a live confidence set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_model_count(
    set: *const WmcsConfidenceSet,
    out: *mut usize,
) -> WmcsStatus {
    guard(|| write_out(out, ref_arg(set, "set")?.0.fits.len()))
}

/// # Safety
/// `set` must be a live confidence set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_member_count(
    set: *const WmcsConfidenceSet,
    out: *mut usize,
) -> WmcsStatus {
    guard(|| write_out(out, ref_arg(set, "set")?.0.members.len()))
}

/// # Safety
/// `set` must be a live confidence set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_is_member(
    set: *const WmcsConfidenceSet,
    index: usize,
    out: *mut bool,
) -> WmcsStatus {
    guard(|| {
        let set = &ref_arg(set, "set")?.0;
        if index >= set.fits.len() {
            return Err(invalid(format!(
                "model index {index} out of range ({})",
                set.fits.len()
            )));
        }
        write_out(out, set.members.contains(&index))
    })
}

/// Smallest pairwise statistic of model `index`; `+inf` when it was the
/// only fitted candidate.
///
/// # Safety
/// `set` must be a live confidence set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_min_t(
    set: *const WmcsConfidenceSet,
    index: usize,
    out: *mut f64,
) -> WmcsStatus {
    guard(|| {
        let set = &ref_arg(set, "set")?.0;
        let outcome = set
            .outcomes
            .iter()
            .find(|o| o.model_index == index)
            .ok_or_else(|| {
                invalid(format!(
                    "model index {index} out of range ({})",
                    set.fits.len()
                ))
            })?;
        write_out(out, outcome.min_t)
    })
}

/// Full confidence set as JSON, in the command-line tool's format.
///
/// # Safety
/// `set` must be a live confidence set handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mcs_to_json(
    set: *const WmcsConfidenceSet,
    out: *mut *mut c_char,
) -> WmcsStatus {
    guard(|| {
        let set = &ref_arg(set, "set")?.0;
        write_out(out, into_c_string(serde_json::to_string(&set.to_json())?)?)
    })
}

/// Mixture confidence set over the partition `(−∞, partition]`,
/// `(partition, ∞)` as JSON. `beta` may be NaN for the largest admissible
/// per-region level. `reference_json` is null or a model object to measure
/// distances against.
///
/// # Safety
/// `data` must be a live dataset handle, the string arguments NUL-terminated
/// (`reference_json` may be null) and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_mixture_mcs_json(
    data: *const WmcsDataset,
    lower_families_json: *const c_char,
    upper_families_json: *const c_char,
    partition: f64,
    alpha: f64,
    beta: f64,
    reference_json: *const c_char,
    out: *mut *mut c_char,
) -> WmcsStatus {
    guard(|| {
        let data = ref_arg(data, "data")?;
        let u1 = families_from_json(str_arg(lower_families_json, "lower_families_json")?)?;
        let u2 = families_from_json(str_arg(upper_families_json, "upper_families_json")?)?;
        let reference = if reference_json.is_null() {
            None
        } else {
            let spec: ModelSpec = serde_json::from_str(str_arg(reference_json, "reference_json")?)?;
            Some(spec.weighted_family()?.density()?)
        };
        let set = build_mixture_set(
            &u1,
            &u2,
            &data.0,
            partition,
            alpha,
            (!beta.is_nan()).then_some(beta),
            &OptimizerOptions::default(),
            reference.as_ref().map(|d| d as &dyn wmcs::Density),
        )?;
        write_out(out, into_c_string(serde_json::to_string(&set.to_json())?)?)
    })
}

/// Distance between two fixed models given as JSON model objects.
///
/// # Safety
/// Both strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmcs_distance(
    first_json: *const c_char,
    second_json: *const c_char,
    kind: WmcsDistance,
    out: *mut f64,
) -> WmcsStatus {
    guard(|| {
        let a: ModelSpec = serde_json::from_str(str_arg(first_json, "first_json")?)?;
        let b: ModelSpec = serde_json::from_str(str_arg(second_json, "second_json")?)?;
        let f = a.weighted_family()?.density()?;
        let g = b.weighted_family()?.density()?;
        let value = match kind {
            WmcsDistance::Hellinger => metrics::hellinger(&f, &g, DEFAULT_QUAD_TOL)?,
            WmcsDistance::L2 => metrics::l2_distance(&f, &g, DEFAULT_QUAD_TOL)?,
            WmcsDistance::KullbackLeibler => metrics::kl_divergence(&f, &g, DEFAULT_QUAD_TOL)?,
        };
        write_out(out, value)
    })
}
