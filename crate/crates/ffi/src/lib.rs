//! C ABI bindings.
//!
//! Every function returns a [`GdStatus`]; results come back through out
//! parameters. Objects are opaque handles released with the matching
//! `*_free` function. After a non-`GD_OK` status,
//! [`gd_last_error_message`] describes the failure on the calling thread.

use groupoid_deconv::cli::{execute, FactorizeConfig, RunConfig};
use groupoid_deconv::factorize::{groupoid_factorize, FactorizationResult};
use groupoid_deconv::gridfn::{GridFn, Interval};
use groupoid_deconv::groupoid::{GroupoidInstance, InstanceDescriptor};
use groupoid_deconv::kernels1d::{build_ck_pair, build_dm_generators, standard_test_functions, weak_delta_residual, DeltaSplitting};
use groupoid_deconv::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdStatus {
    Ok = 0,
    /// Malformed input: bad JSON, invalid parameters, non-UTF-8 strings.
    InvalidArgument = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// The computation ran but a numerical precondition or guard failed.
    Numerical = 3,
    /// Reading or writing files failed.
    Io = 4,
    /// An index was past the end.
    OutOfRange = 5,
    /// The caller's buffer is shorter than the data.
    BufferTooSmall = 6,
    /// Internal panic; the library state is unaffected but the call failed.
    Panic = 7,
}

/// Which grid function of a factorization to fetch.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GdFactor {
    /// Convolution kernel `f_i`.
    Kernel = 0,
    /// Second factor `psi_i`.
    Psi = 1,
    /// `phi - sum f_i * psi_i`; the index is ignored.
    Residual = 2,
}

/// A groupoid instance with its sampling grids.
pub struct GdInstance(GroupoidInstance);

/// A sampled function on a one- or two-dimensional grid.
pub struct GdGridFn(GridFn);

/// The result of a factorization.
pub struct GdFactorization(FactorizationResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GdStatus {
    match e {
        Error::InvalidArgument(_) | Error::Json(_) => GdStatus::InvalidArgument,
        Error::Io(_) | Error::Csv(_) => GdStatus::Io,
        _ => GdStatus::Numerical,
    }
}

struct Fail(GdStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> GdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GdStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            set_error(format!("panic: {}", msg.unwrap_or_default()));
            GdStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(GdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(GdStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn json_err(e: serde_json::Error) -> Fail {
    Fail(GdStatus::InvalidArgument, e.to_string())
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn gd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds an instance from its JSON descriptor.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_instance_from_json(json: *const c_char, out_instance: *mut *mut GdInstance) -> GdStatus {
    guard(|| {
        let slot = out(out_instance, "out_instance")?;
        let d: InstanceDescriptor = serde_json::from_str(text(json, "json")?).map_err(json_err)?;
        *slot = Box::into_raw(Box::new(GdInstance(GroupoidInstance::from_descriptor(&d)?)));
        Ok(())
    })
}

/// # Safety
/// `instance` must come from [`gd_instance_from_json`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gd_instance_free(instance: *mut GdInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Factorizes a function on an instance. `config_json` holds the
/// factorization configuration: the function spec, the factorization
/// parameters and the tolerances.
///
/// # Safety
/// `instance` must be a live handle, `config_json` a NUL-terminated string and
/// `out_result` writable.
#[no_mangle]
pub unsafe extern "C" fn gd_factorize(
    instance: *const GdInstance,
    config_json: *const c_char,
    out_result: *mut *mut GdFactorization,
) -> GdStatus {
    guard(|| {
        let g = &borrow(instance, "instance")?.0;
        let slot = out(out_result, "out_result")?;
        let cfg: FactorizeConfig = serde_json::from_str(text(config_json, "config_json")?).map_err(json_err)?;
        let phi = cfg.phi.source(g.kind)?;
        *slot = Box::into_raw(Box::new(GdFactorization(groupoid_factorize(g, &phi, &cfg.factorization)?)));
        Ok(())
    })
}

/// # Safety
/// `result` must come from [`gd_factorize`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gd_factorization_free(result: *mut GdFactorization) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of pairs, sup-norm residual and whether the support certificates hold.
///
/// # Safety
/// `result` must be a live handle; each out pointer may be null to skip it.
#[no_mangle]
pub unsafe extern "C" fn gd_factorization_summary(
    result: *const GdFactorization,
    out_pairs: *mut usize,
    out_residual_sup: *mut f64,
    out_certificates_hold: *mut bool,
) -> GdStatus {
    guard(|| {
        let r = &borrow(result, "result")?.0;
        if let Some(p) = out_pairs.as_mut() {
            *p = r.pairs.len();
        }
        if let Some(p) = out_residual_sup.as_mut() {
            *p = r.residual_sup;
        }
        if let Some(p) = out_certificates_hold.as_mut() {
            *p = r.certificates_hold();
        }
        Ok(())
    })
}

/// Copies one factor, or the residual, into a new grid function handle.
///
/// # Safety
/// `result` must be a live handle and `out_fn` writable.
#[no_mangle]
pub unsafe extern "C" fn gd_factorization_get(
    result: *const GdFactorization,
    which: GdFactor,
    index: usize,
    out_fn: *mut *mut GdGridFn,
) -> GdStatus {
    guard(|| {
        let r = &borrow(result, "result")?.0;
        let slot = out(out_fn, "out_fn")?;
        let f = match which {
            GdFactor::Residual => r.residual.clone(),
            _ => {
                let p = r
                    .pairs
                    .get(index)
                    .ok_or_else(|| Fail(GdStatus::OutOfRange, format!("pair {index} of {}", r.pairs.len())))?;
                if which == GdFactor::Kernel { p.f.clone() } else { p.psi.clone() }
            }
        };
        *slot = Box::into_raw(Box::new(GdGridFn(f)));
        Ok(())
    })
}

/// Manifest of the factorization as a JSON string, judged against
/// `residual_ceiling`. Release it with [`gd_string_free`].
///
/// # Safety
/// `result` must be a live handle and `out_json` writable.
#[no_mangle]
pub unsafe extern "C" fn gd_factorization_manifest_json(
    result: *const GdFactorization,
    residual_ceiling: f64,
    out_json: *mut *mut c_char,
) -> GdStatus {
    guard(|| {
        let r = &borrow(result, "result")?.0;
        let slot = out(out_json, "out_json")?;
        let s = serde_json::to_string(&r.manifest(residual_ceiling)).map_err(json_err)?;
        *slot = CString::new(s).expect("JSON has no NUL bytes").into_raw();
        Ok(())
    })
}

/// # Safety
/// `f` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gd_gridfn_free(f: *mut GdGridFn) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Dimension (1 or 2) and the number of nodes along each axis. For a
/// one-dimensional function `n1` is 1. Samples are row-major with axis 0 outer.
///
/// # Safety
/// `f` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_gridfn_shape(f: *const GdGridFn, out_ndim: *mut usize, out_n0: *mut usize, out_n1: *mut usize) -> GdStatus {
    guard(|| {
        let f = &borrow(f, "f")?.0;
        let (ndim, n0, n1) = match f {
            GridFn::D1(g) => (1, g.len(), 1),
            GridFn::D2(g) => {
                let (a, b) = g.shape();
                (2, a, b)
            }
        };
        *out(out_ndim, "out_ndim")? = ndim;
        *out(out_n0, "out_n0")? = n0;
        *out(out_n1, "out_n1")? = n1;
        Ok(())
    })
}

/// First node and spacing of one axis.
///
/// # Safety
/// `f` must be a live handle; out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_gridfn_axis(f: *const GdGridFn, axis: usize, out_x0: *mut f64, out_dx: *mut f64) -> GdStatus {
    guard(|| {
        let f = &borrow(f, "f")?.0;
        let grid = match (f, axis) {
            (GridFn::D1(g), 0) => g.grid(),
            (GridFn::D2(g), 0 | 1) => g.grid(axis),
            _ => return Err(Fail(GdStatus::OutOfRange, format!("axis {axis}"))),
        };
        *out(out_x0, "out_x0")? = grid.x0;
        *out(out_dx, "out_dx")? = grid.dx;
        Ok(())
    })
}

/// Copies the samples into `buf`, which must hold at least `n0 * n1` values.
///
/// # Safety
/// `f` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gd_gridfn_copy_samples(f: *const GdGridFn, buf: *mut f64, len: usize) -> GdStatus {
    guard(|| {
        let f = &borrow(f, "f")?.0;
        let s = match f {
            GridFn::D1(g) => g.samples(),
            GridFn::D2(g) => g.samples(),
        };
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < s.len() {
            return Err(Fail(GdStatus::BufferTooSmall, format!("need {} values, buffer holds {len}", s.len())));
        }
        std::slice::from_raw_parts_mut(buf, s.len()).copy_from_slice(s);
        Ok(())
    })
}

/// Largest weak delta residual of the finite-smoothness splitting of order
/// `k` with its step rising on `[cut_lo, cut_hi]`, over the fixed test set
/// sampled at spacing `dx`.
///
/// # Safety
/// `out_residual` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_ck_weak_residual(k: u32, cut_lo: f64, cut_hi: f64, dx: f64, out_residual: *mut f64) -> GdStatus {
    guard(|| {
        let slot = out(out_residual, "out_residual")?;
        if !(cut_lo < cut_hi) {
            return Err(Fail(GdStatus::InvalidArgument, format!("need cut_lo < cut_hi, got {cut_lo}, {cut_hi}")));
        }
        let pair = build_ck_pair(k, Interval::new(cut_lo, cut_hi))?;
        let mut worst: f64 = 0.0;
        for w in standard_test_functions(dx)? {
            worst = worst.max(weak_delta_residual(&pair, &w)?);
        }
        *slot = worst;
        Ok(())
    })
}

/// Largest weak delta residuals of the exponential-sum splitting with `j`
/// rates (growth 2) supported in `(-eps, eps)`: the exact finite form and the
/// compactly supported form, over the fixed test set at spacing `dx`.
///
/// # Safety
/// Out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn gd_dm_weak_residual(j: usize, eps: f64, dx: f64, out_exact: *mut f64, out_cutoff: *mut f64) -> GdStatus {
    guard(|| {
        let exact_slot = out(out_exact, "out_exact")?;
        let cutoff_slot = out(out_cutoff, "out_cutoff")?;
        let d = build_dm_generators(j, 2.0, eps)?;
        let (mut exact, mut cutoff): (f64, f64) = (0.0, 0.0);
        for w in standard_test_functions(dx)? {
            exact = exact.max(weak_delta_residual(&d.uncut() as &dyn DeltaSplitting, &w)?);
            cutoff = cutoff.max(weak_delta_residual(&d, &w)?);
        }
        *exact_slot = exact;
        *cutoff_slot = cutoff;
        Ok(())
    })
}

/// Runs a command configuration (the JSON accepted by the command line
/// `run --config`) and writes its outputs to the configured directory.
/// `out_pass` receives the command's own acceptance verdict.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out_pass` may be null.
#[no_mangle]
pub unsafe extern "C" fn gd_run_config_json(config_json: *const c_char, out_pass: *mut bool) -> GdStatus {
    guard(|| {
        let cfg = RunConfig::from_json(text(config_json, "config_json")?.as_bytes())?;
        let outcome = execute(&cfg)?;
        if let Some(p) = out_pass.as_mut() {
            *p = outcome.pass;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    fn last_error() -> String {
        let p = gd_last_error_message();
        assert!(!p.is_null());
        unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
    }

    #[test]
    fn version_is_a_c_string() {
        let v = unsafe { CStr::from_ptr(gd_version()) };
        assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn null_pointers_are_reported() {
        let mut h = ptr::null_mut();
        assert_eq!(unsafe { gd_instance_from_json(ptr::null(), &mut h) }, GdStatus::NullPointer);
        assert!(last_error().contains("json"));
        let j = c("{}");
        assert_eq!(unsafe { gd_instance_from_json(j.as_ptr(), ptr::null_mut()) }, GdStatus::NullPointer);
        assert_eq!(unsafe { gd_ck_weak_residual(0, 0.5, 1.5, 1e-3, ptr::null_mut()) }, GdStatus::NullPointer);
    }

    #[test]
    fn bad_json_is_an_invalid_argument() {
        let mut h = ptr::null_mut();
        let j = c("{not json");
        assert_eq!(unsafe { gd_instance_from_json(j.as_ptr(), &mut h) }, GdStatus::InvalidArgument);
        assert!(h.is_null());
        assert!(!last_error().is_empty());
    }

    #[test]
    fn success_clears_the_last_error() {
        let mut h = ptr::null_mut();
        let j = c("[");
        unsafe { gd_instance_from_json(j.as_ptr(), &mut h) };
        assert!(!gd_last_error_message().is_null());
        let mut r = 0.0;
        assert_eq!(unsafe { gd_ck_weak_residual(1, 0.5, 1.5, 1e-3, &mut r) }, GdStatus::Ok);
        assert!(gd_last_error_message().is_null());
        assert!(r <= 1e-5, "{r}");
    }

    #[test]
    fn kernel_residuals() {
        let mut r = 0.0;
        assert_eq!(unsafe { gd_ck_weak_residual(3, 1.5, 0.5, 1e-3, &mut r) }, GdStatus::InvalidArgument);
        let (mut exact, mut cutoff) = (0.0, 0.0);
        assert_eq!(unsafe { gd_dm_weak_residual(2, 1.0, 1e-3, &mut exact, &mut cutoff) }, GdStatus::Ok);
        assert!(exact <= 1e-5 && cutoff <= 1e-4, "{exact} {cutoff}");
        assert_eq!(unsafe { gd_dm_weak_residual(0, 1.0, 1e-3, &mut exact, &mut cutoff) }, GdStatus::InvalidArgument);
    }

    fn pair_instance() -> *mut GdInstance {
        let j = c(r#"{"kind": "pair", "base_box": [-2.0, 2.0], "field": "unit", "grid": {"dx": 0.01}}"#);
        let mut h = ptr::null_mut();
        let s = unsafe { gd_instance_from_json(j.as_ptr(), &mut h) };
        assert_eq!(s, GdStatus::Ok, "{}", last_error());
        h
    }

    const FACTORIZE: &str = r#"{
        "phi": "bump(0,0.8)*bump(0,0.8)",
        "factorization": {"line": {"eps": 1.0, "mode": {"mode": "ck", "k": 0}}}
    }"#;

    #[test]
    fn factorization_round_trip() {
        let g = pair_instance();
        let cfg = c(FACTORIZE);
        let mut r = ptr::null_mut();
        assert_eq!(unsafe { gd_factorize(g, cfg.as_ptr(), &mut r) }, GdStatus::Ok, "{}", last_error());
        let (mut n, mut res, mut hold) = (0usize, f64::NAN, false);
        assert_eq!(unsafe { gd_factorization_summary(r, &mut n, &mut res, &mut hold) }, GdStatus::Ok);
        assert_eq!(n, 2);
        assert!(hold && res <= 1e-4, "{res}");

        let mut f = ptr::null_mut();
        assert_eq!(unsafe { gd_factorization_get(r, GdFactor::Psi, 1, &mut f) }, GdStatus::Ok);
        let (mut ndim, mut n0, mut n1) = (0, 0, 0);
        assert_eq!(unsafe { gd_gridfn_shape(f, &mut ndim, &mut n0, &mut n1) }, GdStatus::Ok);
        assert_eq!(ndim, 2);
        let (mut x0, mut dx) = (0.0, 0.0);
        assert_eq!(unsafe { gd_gridfn_axis(f, 1, &mut x0, &mut dx) }, GdStatus::Ok);
        assert!((dx - 0.01).abs() < 1e-15);
        assert_eq!(unsafe { gd_gridfn_axis(f, 2, &mut x0, &mut dx) }, GdStatus::OutOfRange);
        let mut buf = vec![0.0; n0 * n1];
        assert_eq!(unsafe { gd_gridfn_copy_samples(f, buf.as_mut_ptr(), buf.len() - 1) }, GdStatus::BufferTooSmall);
        assert_eq!(unsafe { gd_gridfn_copy_samples(f, buf.as_mut_ptr(), buf.len()) }, GdStatus::Ok);
        assert!(buf.iter().any(|v| *v != 0.0));
        unsafe { gd_gridfn_free(f) };

        let mut f = ptr::null_mut();
        assert_eq!(unsafe { gd_factorization_get(r, GdFactor::Kernel, 2, &mut f) }, GdStatus::OutOfRange);
        assert_eq!(unsafe { gd_factorization_get(r, GdFactor::Residual, 99, &mut f) }, GdStatus::Ok);
        unsafe { gd_gridfn_free(f) };

        let mut m = ptr::null_mut();
        assert_eq!(unsafe { gd_factorization_manifest_json(r, 1e-4, &mut m) }, GdStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(unsafe { CStr::from_ptr(m) }.to_str().unwrap()).unwrap();
        assert_eq!(v["pass"], true);
        assert_eq!(v["n_pairs"], 2);
        unsafe {
            gd_string_free(m);
            gd_factorization_free(r);
            gd_instance_free(g);
        }
    }

    #[test]
    fn factorization_errors_map_to_codes() {
        let g = pair_instance();
        let mut r = ptr::null_mut();
        let one_factor = c(&FACTORIZE.replace("bump(0,0.8)*bump(0,0.8)", "bump(0,0.8)"));
        assert_eq!(unsafe { gd_factorize(g, one_factor.as_ptr(), &mut r) }, GdStatus::InvalidArgument);
        let narrow = c(&FACTORIZE.replace(r#""factorization": {"#, r#""factorization": {"base_window": {"lo": -0.3, "hi": 0.3}, "#));
        assert_eq!(unsafe { gd_factorize(g, narrow.as_ptr(), &mut r) }, GdStatus::Numerical, "{}", last_error());
        assert!(r.is_null());
        unsafe { gd_instance_free(g) };
    }

    #[test]
    fn run_config_writes_outputs() {
        let d = tempfile::tempdir().unwrap();
        let cfg = serde_json::json!({
            "command": {"name": "dm1d", "splitting": {"mode": "ck", "k": 2, "cut": [0.5, 1.5]}, "dx": 1e-3, "levels": 1, "tests": 5},
            "output": d.path(),
            "seed": 0
        });
        let j = c(&cfg.to_string());
        let mut pass = false;
        assert_eq!(unsafe { gd_run_config_json(j.as_ptr(), &mut pass) }, GdStatus::Ok, "{}", last_error());
        assert!(pass);
        assert!(d.path().join("residuals.csv").exists());
    }
}
