//! C ABI over `riggedframes`.
//!
//! Kernels are opaque heap handles released with [`rf_kernel_free`]. Every
//! fallible call returns an [`RfStatus`]; on failure the message is available
//! from [`rf_last_error_message`] on the same thread until the next call.
//! Complex arrays cross the boundary as interleaved `re, im` doubles.
//! Strings returned through out-pointers are owned by the caller and must be
//! released with [`rf_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use riggedframes::catalog::{sample_kernel, KernelMatrix, MapSpec};
use riggedframes::frame::{analysis, classify_kernel, frame_bounds, frame_operator, Thresholds};
use riggedframes::grid::{LadderStage, QuadratureGrid};
use riggedframes::report::{emit, run, Command, OutputFormat, RunConfig};
use riggedframes::schwartz::TestFunction;
use riggedframes::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidConfig = 3,
    Dimension = 4,
    NotAFrame = 5,
    Numeric = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfMapKind {
    Dirac = 0,
    Fourier = 1,
    DiracDerivative = 2,
    WeightedDirac = 3,
    BumpDirac = 4,
}

/// Sampled kernel of a built-in map on the standard ladder grid.
pub struct RfKernel {
    inner: KernelMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn status_of(err: &Error) -> RfStatus {
    match err {
        Error::Dimension { .. } => RfStatus::Dimension,
        Error::InvalidConfig(_)
        | Error::Syntax { .. }
        | Error::UnknownIdentifier { .. }
        | Error::Json(_)
        | Error::KernelParse { .. } => RfStatus::InvalidConfig,
        Error::NotAFrame { .. } => RfStatus::NotAFrame,
        Error::Eval(_) | Error::Numeric(_) => RfStatus::Numeric,
        Error::Io(_) | Error::Csv(_) => RfStatus::Io,
    }
}

struct Failure(RfStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure(status_of(&err), err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(RfStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(RfStatus::InvalidArgument, message.into())
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> RfStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => RfStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {message}"));
            RfStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn kernel_ref<'a>(kernel: *const RfKernel) -> Result<&'a KernelMatrix, Failure> {
    kernel.as_ref().map(|k| &k.inner).ok_or_else(|| null("kernel"))
}

fn hand_out_string(text: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(text).map_err(|_| invalid("output contains an interior NUL"))?;
    // SAFETY: caller checked `out` is non-null.
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Samples a built-in map at truncation N on the standard ladder grid.
///
/// `weight` is read only for `RF_MAP_KIND_WEIGHTED_DIRAC`; `support_a` and
/// `support_b` only for `RF_MAP_KIND_BUMP_DIRAC`.
///
/// # Safety
/// `weight` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_new(
    kind: RfMapKind,
    truncation: usize,
    weight: *const c_char,
    support_a: f64,
    support_b: f64,
    out: *mut *mut RfKernel,
) -> RfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if truncation == 0 {
            return Err(invalid("truncation must be positive"));
        }
        let spec = match kind {
            RfMapKind::Dirac => MapSpec::dirac(),
            RfMapKind::Fourier => MapSpec::fourier(),
            RfMapKind::DiracDerivative => MapSpec::dirac_derivative(),
            RfMapKind::WeightedDirac => MapSpec::weighted_dirac(read_str(weight, "weight")?)?,
            RfMapKind::BumpDirac => MapSpec::bump_dirac(support_a, support_b)?,
        };
        let grid = QuadratureGrid::for_stage(&LadderStage::standard(truncation))?;
        let inner = sample_kernel(&spec, &grid, truncation)?;
        *out = Box::into_raw(Box::new(RfKernel { inner }));
        Ok(())
    })
}

/// # Safety
/// `kernel` must be null or a handle from [`rf_kernel_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_free(kernel: *mut RfKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Truncation N of the kernel, or 0 for a null handle.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_truncation(kernel: *const RfKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.inner.truncation())
}

/// Number of grid nodes M, or 0 for a null handle.
///
/// # Safety
/// `kernel` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_node_count(kernel: *const RfKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.inner.node_count())
}

/// Copies the M grid nodes into `nodes`, which must hold `len >= M` doubles.
///
/// # Safety
/// `nodes` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_nodes(kernel: *const RfKernel, nodes: *mut f64, len: usize) -> RfStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if nodes.is_null() {
            return Err(null("nodes"));
        }
        let src = k.grid().nodes();
        if len < src.len() {
            return Err(invalid(format!("nodes buffer holds {len}, need {}", src.len())));
        }
        ptr::copy_nonoverlapping(src.as_ptr(), nodes, src.len());
        Ok(())
    })
}

/// Smallest and largest eigenvalue of the frame operator.
///
/// # Safety
/// `lower` and `upper` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_frame_bounds(kernel: *const RfKernel, lower: *mut f64, upper: *mut f64) -> RfStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if lower.is_null() || upper.is_null() {
            return Err(null("bounds output"));
        }
        let b = frame_bounds(&frame_operator(k))?;
        *lower = b.lower;
        *upper = b.upper;
        Ok(())
    })
}

/// Analysis of a test function given by N complex Hermite coefficients.
/// Writes M complex samples to `samples`.
///
/// # Safety
/// `coeffs` must hold 2·N doubles and `samples` 2·M writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_analysis(kernel: *const RfKernel, coeffs: *const f64, samples: *mut f64) -> RfStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if coeffs.is_null() || samples.is_null() {
            return Err(null("coefficient or sample buffer"));
        }
        let raw = std::slice::from_raw_parts(coeffs, 2 * k.truncation());
        let f = TestFunction::new(raw.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect());
        let xi = analysis(k, &f)?;
        let out = std::slice::from_raw_parts_mut(samples, 2 * xi.len());
        for (pair, v) in out.chunks_exact_mut(2).zip(xi.values()) {
            pair[0] = v.re;
            pair[1] = v.im;
        }
        Ok(())
    })
}

/// Classifies the kernel on its refinement ladder with default thresholds
/// and returns the report as JSON.
///
/// # Safety
/// `out_json` must be writable; free the result with [`rf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rf_kernel_classify(kernel: *const RfKernel, out_json: *mut *mut c_char) -> RfStatus {
    guard(|| {
        let k = kernel_ref(kernel)?;
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let report = classify_kernel(k, &Thresholds::default())?;
        let text = serde_json::to_string(&report).map_err(Error::from)?;
        hand_out_string(text, out_json)
    })
}

/// Runs a CLI command (`classify`, `bounds`, `dual`, `reconstruct`,
/// `moment-solve`, `sweep`, `demo`) on a JSON configuration and returns the
/// JSON report. A null `config_json` selects the default configuration.
///
/// # Safety
/// `command` and non-null `config_json` must be NUL-terminated; `out_json`
/// must be writable; free the result with [`rf_string_free`].
#[no_mangle]
pub unsafe extern "C" fn rf_run(command: *const c_char, config_json: *const c_char, out_json: *mut *mut c_char) -> RfStatus {
    guard(|| {
        if out_json.is_null() {
            return Err(null("out_json"));
        }
        *out_json = ptr::null_mut();
        let name = read_str(command, "command")?;
        let command: Command = serde_json::from_value(serde_json::Value::String(name.to_owned()))
            .map_err(|_| invalid(format!("unknown command `{name}`")))?;
        let config = if config_json.is_null() {
            RunConfig::default()
        } else {
            RunConfig::from_json(read_str(config_json, "config_json")?)?
        };
        let report = run(command, &config)?;
        let bytes = emit(&report, OutputFormat::Json)?;
        let text = String::from_utf8(bytes).map_err(|e| invalid(e.to_string()))?;
        hand_out_string(text, out_json)
    })
}

/// # Safety
/// `text` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rf_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn rf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
