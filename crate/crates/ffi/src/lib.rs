//! C ABI over `qnd-core`.
//!
//! Density matrices are returned as opaque [`QndDensity`] handles owned by
//! the caller and released with [`qnd_density_free`]. Every fallible call
//! returns a [`QndStatus`]; on failure, [`qnd_last_error_message`] describes
//! the most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qnd_core::channels::{apply_channel, AtomicDensityMatrix, ChannelSpec};
use qnd_core::metrics::{empirical_theta_b, evaluate_metric, Metric};
use qnd_core::{Error, SystemConfig};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QndStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    ImpossibleOutcome = 3,
    Undefined = 4,
    BufferTooSmall = 5,
    UnknownMetric = 6,
    Internal = 7,
}

/// Parameters of one preparation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QndConfig {
    pub n_atoms: u32,
    pub alpha: f64,
    pub n_c: u32,
    pub n_d: u32,
    pub tau: f64,
}

/// Channel selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QndChannelKind {
    None = 0,
    PhaseDiffusion = 1,
    LossGain = 2,
    Dephasing = 3,
}

/// A channel and its rates; rates not used by `kind` are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QndChannel {
    pub kind: QndChannelKind,
    pub kappa: f64,
    pub gamma: f64,
    pub gain: f64,
    pub dephasing: f64,
}

/// Opaque conditional density matrix.
pub struct QndDensity {
    inner: AtomicDensityMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("NULs removed"));
}

fn fail(status: QndStatus, msg: impl Into<String>) -> QndStatus {
    set_error(msg);
    status
}

fn status_of(e: &Error) -> QndStatus {
    match e {
        Error::ImpossibleOutcome { .. } => QndStatus::ImpossibleOutcome,
        Error::UndefinedDirection(_) => QndStatus::Undefined,
        Error::Unknown { .. } => QndStatus::UnknownMetric,
        Error::InvalidParameter(_) | Error::DimensionMismatch { .. } => QndStatus::InvalidParameter,
        _ => QndStatus::Internal,
    }
}

fn from_core(e: Error) -> QndStatus {
    fail(status_of(&e), e.to_string())
}

/// Runs `f`, converting panics into [`QndStatus::Internal`].
fn guarded(f: impl FnOnce() -> QndStatus) -> QndStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => fail(QndStatus::Internal, "internal panic"),
    }
}

fn channel_spec(ch: &QndChannel) -> ChannelSpec {
    match ch.kind {
        QndChannelKind::None => ChannelSpec::NoDecoherence,
        QndChannelKind::PhaseDiffusion => ChannelSpec::PhaseDiffusion { kappa: ch.kappa },
        QndChannelKind::LossGain => ChannelSpec::LossGain {
            gamma: ch.gamma,
            gain: ch.gain,
        },
        QndChannelKind::Dephasing => ChannelSpec::Dephasing { rate: ch.dephasing },
    }
}

/// Builds the conditional density matrix for `config` under `channel` and
/// stores a new handle in `*out`. On failure `*out` is set to NULL.
///
/// # Safety
/// `config` and `channel` must be NULL or point to valid values; `out`
/// must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qnd_density_build(
    config: *const QndConfig,
    channel: *const QndChannel,
    out: *mut *mut QndDensity,
) -> QndStatus {
    guarded(|| {
        if out.is_null() {
            return fail(QndStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let (Some(c), Some(ch)) = (config.as_ref(), channel.as_ref()) else {
            return fail(QndStatus::NullPointer, "config or channel is NULL");
        };
        let cfg = match SystemConfig::new(c.n_atoms as usize, c.alpha, c.n_c, c.n_d, c.tau) {
            Ok(cfg) => cfg,
            Err(e) => return from_core(e),
        };
        match apply_channel(&cfg, &channel_spec(ch)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(QndDensity { inner }));
                QndStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `density` must be NULL or a handle from [`qnd_density_build`] that has
/// not been freed.
#[no_mangle]
pub unsafe extern "C" fn qnd_density_free(density: *mut QndDensity) {
    if !density.is_null() {
        drop(Box::from_raw(density));
    }
}

/// Matrix side `(N+1)²`, or 0 for NULL.
///
/// # Safety
/// `density` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qnd_density_dim(density: *const QndDensity) -> usize {
    density.as_ref().map_or(0, |d| d.inner.dim())
}

/// Born probability of the conditioning outcome.
///
/// # Safety
/// `density` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qnd_density_outcome_weight(
    density: *const QndDensity,
    out: *mut f64,
) -> QndStatus {
    let (Some(d), false) = (density.as_ref(), out.is_null()) else {
        return fail(QndStatus::NullPointer, "density or out is NULL");
    };
    *out = d.inner.outcome_weight;
    QndStatus::Ok
}

/// Copies the matrix in row-major order into `re` and `im`, each holding
/// `len ≥ dim²` doubles. Row/column index is `k1·(N+1) + k2`.
///
/// # Safety
/// `density` must be NULL or a live handle; `re` and `im` NULL or valid
/// for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn qnd_density_copy_matrix(
    density: *const QndDensity,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> QndStatus {
    let Some(d) = density.as_ref() else {
        return fail(QndStatus::NullPointer, "density is NULL");
    };
    if re.is_null() || im.is_null() {
        return fail(QndStatus::NullPointer, "output buffer is NULL");
    }
    let n = d.inner.dim();
    if len < n * n {
        return fail(
            QndStatus::BufferTooSmall,
            format!("need {} elements, got {len}", n * n),
        );
    }
    let re = std::slice::from_raw_parts_mut(re, n * n);
    let im = std::slice::from_raw_parts_mut(im, n * n);
    for i in 0..n {
        for j in 0..n {
            let z = d.inner.matrix[(i, j)];
            re[i * n + j] = z.re;
            im[i * n + j] = z.im;
        }
    }
    QndStatus::Ok
}

/// Evaluates the metric named `name` (e.g. `"log_negativity"`, `"chsh"`).
/// A NaN `theta_b` selects the empirical CHSH angle for `N`.
///
/// # Safety
/// `density` must be NULL or a live handle; `name` NULL or a NUL-terminated
/// string; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn qnd_metric(
    density: *const QndDensity,
    name: *const c_char,
    theta_b: f64,
    out: *mut f64,
) -> QndStatus {
    guarded(|| {
        let Some(d) = density.as_ref() else {
            return fail(QndStatus::NullPointer, "density is NULL");
        };
        if name.is_null() || out.is_null() {
            return fail(QndStatus::NullPointer, "name or out is NULL");
        }
        let Ok(name) = CStr::from_ptr(name).to_str() else {
            return fail(QndStatus::UnknownMetric, "metric name is not UTF-8");
        };
        let metric: Metric = match name.parse() {
            Ok(m) => m,
            Err(e) => return from_core(e),
        };
        let theta = if theta_b.is_nan() {
            empirical_theta_b(d.inner.n_atoms)
        } else {
            theta_b
        };
        match evaluate_metric(&d.inner, metric, theta) {
            Ok(v) => {
                *out = v;
                QndStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Message of the last failure on this thread; valid until the next call
/// on the same thread. Empty if nothing has failed.
#[no_mangle]
pub extern "C" fn qnd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qnd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
