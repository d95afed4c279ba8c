//! C ABI for countreg.
//!
//! Objects are opaque handles created by `cr_*` constructors and released
//! with the matching `*_free`. Every fallible call returns a `CrStatus`; on
//! failure `cr_last_error_message` describes the error for the calling
//! thread. Results come back through out-pointers.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use countreg::{Dataset, Error, Family, FitOptions, FitResult, ModelData, ModelSpec, NbParams, ZinbParams};

/// Status codes returned by every fallible function.
#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrStatus {
    CR_OK = 0,
    CR_NULL_POINTER = 1,
    CR_INVALID_ARGUMENT = 2,
    CR_IO = 3,
    CR_PARSE = 4,
    CR_DOMAIN = 5,
    CR_SPEC = 6,
    CR_NUMERICAL = 7,
    CR_BUFFER_TOO_SMALL = 8,
    CR_PANIC = 99,
}

#[repr(C)]
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrFamily {
    CR_POISSON = 0,
    CR_NB = 1,
    CR_ZINB = 2,
}

impl From<CrFamily> for Family {
    fn from(f: CrFamily) -> Self {
        match f {
            CrFamily::CR_POISSON => Family::Poisson,
            CrFamily::CR_NB => Family::Nb,
            CrFamily::CR_ZINB => Family::Zinb,
        }
    }
}

/// A loaded dataset.
pub struct CrDataset {
    inner: Dataset,
}

/// A fitted model.
pub struct CrFit {
    inner: FitResult,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).unwrap_or_default());
}

struct Failure(CrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => CrStatus::CR_IO,
            Error::Csv(_) | Error::Parse { .. } | Error::Schema(_) | Error::Json(_) => CrStatus::CR_PARSE,
            Error::Domain(_) => CrStatus::CR_DOMAIN,
            Error::Spec(_)
            | Error::DegenerateCovariate(_)
            | Error::InsufficientData(_)
            | Error::Config(_)
            | Error::Comparison(_)
            | Error::DegenerateTable(_) => CrStatus::CR_SPEC,
            Error::Evaluation { .. } | Error::CovarianceUnavailable(_) => CrStatus::CR_NUMERICAL,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: CrStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> CrStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            CrStatus::CR_OK
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            CrStatus::CR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(CrStatus::CR_NULL_POINTER, format!("`{name}` is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(CrStatus::CR_INVALID_ARGUMENT, format!("`{name}` is not valid UTF-8")))
}

/// Comma-separated list; null or empty means none.
unsafe fn list_arg(p: *const c_char, name: &str) -> Result<Vec<String>, Failure> {
    if p.is_null() {
        return Ok(Vec::new());
    }
    Ok(str_arg(p, name)?
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect())
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(CrStatus::CR_NULL_POINTER, format!("`{name}` is null")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(CrStatus::CR_NULL_POINTER, format!("`{name}` is null")))
}

/// Message for the most recent failure on this thread, or an empty string.
/// The pointer stays valid until the next `cr_*` call on the same thread.
#[no_mangle]
pub extern "C" fn cr_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a CSV file under `schema` (`name:type,...`).
///
/// # Safety
/// `path` and `schema` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_dataset_load_csv(
    path: *const c_char,
    schema: *const c_char,
    out: *mut *mut CrDataset,
) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let schema: countreg::Schema = str_arg(schema, "schema")?.parse()?;
        let ds = countreg::load_csv(path, &schema)?;
        *out = Box::into_raw(Box::new(CrDataset { inner: ds }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from `cr_dataset_load_csv` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_dataset_free(ds: *mut CrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_dataset_n_rows(ds: *const CrDataset, out: *mut usize) -> CrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(ds, "ds")?.inner.n_rows();
        Ok(())
    })
}

/// Rows removed by listwise deletion while loading.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_dataset_dropped_rows(ds: *const CrDataset, out: *mut usize) -> CrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(ds, "ds")?.inner.dropped_rows();
        Ok(())
    })
}

/// Fits a model. Covariate lists are comma separated and may be null.
/// A fit that stops without converging still succeeds; check
/// `cr_fit_converged`.
///
/// # Safety
/// `ds` must be a live handle, string arguments NUL-terminated or null where
/// allowed, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit(
    ds: *const CrDataset,
    family: CrFamily,
    response: *const c_char,
    count_covariates: *const c_char,
    zero_covariates: *const c_char,
    out: *mut *mut CrFit,
) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let ds = &ref_arg(ds, "ds")?.inner;
        let spec = ModelSpec {
            family: family.into(),
            response: str_arg(response, "response")?.to_string(),
            count_covariates: list_arg(count_covariates, "count_covariates")?,
            zero_covariates: list_arg(zero_covariates, "zero_covariates")?,
            reference_levels: Default::default(),
        };
        let data = ModelData::from_spec(&spec, ds)?;
        let fit = countreg::fit_model(&data, &FitOptions::default())?;
        *out = Box::into_raw(Box::new(CrFit { inner: fit }));
        Ok(())
    })
}

/// # Safety
/// `fit` must come from `cr_fit` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_free(fit: *mut CrFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

/// Copies the flat estimate vector `[beta, gamma, log_tau]` into `buf`.
/// `len_out` always receives the required length; pass a null `buf` to
/// query it.
///
/// # Safety
/// `fit` must be a live handle, `buf` valid for `capacity` doubles or null,
/// `len_out` writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_estimates(
    fit: *const CrFit,
    buf: *mut f64,
    capacity: usize,
    len_out: *mut usize,
) -> CrStatus {
    guard(|| {
        let fit = &ref_arg(fit, "fit")?.inner;
        let e = &fit.estimates;
        let flat: Vec<f64> = e.beta.iter().chain(&e.gamma).chain(e.log_tau.iter()).copied().collect();
        *out_arg(len_out, "len_out")? = flat.len();
        if buf.is_null() {
            return Ok(());
        }
        if capacity < flat.len() {
            return fail(
                CrStatus::CR_BUFFER_TOO_SMALL,
                format!("need {} doubles, got {capacity}", flat.len()),
            );
        }
        ptr::copy_nonoverlapping(flat.as_ptr(), buf, flat.len());
        Ok(())
    })
}

/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_log_likelihood(fit: *const CrFit, out: *mut f64) -> CrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(fit, "fit")?.inner.log_likelihood;
        Ok(())
    })
}

/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_aic(fit: *const CrFit, out: *mut f64) -> CrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(fit, "fit")?.inner.aic();
        Ok(())
    })
}

/// Writes 1 if the optimizer converged, else 0.
///
/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_converged(fit: *const CrFit, out: *mut c_int) -> CrStatus {
    guard(|| {
        *out_arg(out, "out")? = ref_arg(fit, "fit")?.inner.converged as c_int;
        Ok(())
    })
}

/// Serializes the fit as JSON. Release the string with `cr_string_free`.
///
/// # Safety
/// `fit` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_fit_to_json(fit: *const CrFit, out: *mut *mut c_char) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = serde_json::to_string(&ref_arg(fit, "fit")?.inner).map_err(Error::from)?;
        *out = CString::new(text)
            .or_else(|_| fail(CrStatus::CR_PANIC, "interior NUL in JSON"))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_nb_log_pmf(y: u64, lambda: f64, tau: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = countreg::nb_log_pmf(y, &NbParams::new(lambda, tau)?);
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_zinb_log_pmf(y: u64, lambda: f64, tau: f64, p: f64, out: *mut f64) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = countreg::zinb_log_pmf(y, &ZinbParams::new(NbParams::new(lambda, tau)?, p)?);
        Ok(())
    })
}

/// Upper tail of the chi-square distribution.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cr_chi_square_sf(x: f64, df: u32, out: *mut f64) -> CrStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = countreg::chi_square_sf(x, df)?;
        Ok(())
    })
}
