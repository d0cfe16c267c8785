//! C ABI for the geokalman library.
//!
//! The interface follows the usual conventions for C bindings:
//!
//! * Manifolds are opaque handles created by `gk_manifold_*` constructors
//!   and released with [`gk_manifold_free`].
//! * Points and tangent vectors are caller-allocated `double` arrays in the
//!   ambient layout of the Rust API; [`gk_manifold_ambient_len`] gives the
//!   required length and every call validates the lengths it receives.
//! * Every fallible function returns a [`GkStatus`]; results are written
//!   through out-pointers.  Nothing unwinds across the boundary — internal
//!   panics are caught and reported as [`GkStatus::InternalError`].
//!
//! The C header `include/geokalman.h` is generated from this file with
//! cbindgen: `cbindgen --crate geokalman-ffi --output include/geokalman.h`
//! (run inside `crates/geokalman-ffi`).

use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use nalgebra::DVector;

use geokalman::geometry::{Manifold, Point, Tangent};
use geokalman::sim::{ExperimentConfig, ExperimentKind};
use geokalman::Error;

/// Result code of a C-API call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GkStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument value is invalid (unknown name, unsupported dimension,
    /// out-of-range parameter).
    InvalidArgument = 2,
    /// A buffer length does not match the manifold's ambient length.
    BadLength = 3,
    /// The operation failed numerically (domain violation, singular
    /// matrix, diverging iteration).
    NumericalError = 4,
    /// A string argument is not valid UTF-8.
    Utf8Error = 5,
    /// Writing the experiment outputs failed.
    IoError = 6,
    /// An unexpected internal failure; the library state is unchanged.
    InternalError = 7,
}

/// Opaque manifold handle.
pub struct GkManifold(Manifold);

fn status_of(err: &Error) -> GkStatus {
    match err {
        Error::DimensionMismatch { .. } => GkStatus::BadLength,
        Error::UnsupportedOperation { .. }
        | Error::InvalidInput { .. }
        | Error::InvalidConfig { .. } => GkStatus::InvalidArgument,
        Error::Io { .. } => GkStatus::IoError,
        _ => GkStatus::NumericalError,
    }
}

/// Runs `body`, translating panics into [`GkStatus::InternalError`].
fn guarded(body: impl FnOnce() -> GkStatus) -> GkStatus {
    catch_unwind(AssertUnwindSafe(body)).unwrap_or(GkStatus::InternalError)
}

/// # Safety
/// `ptr` must point to `len` readable doubles (checked non-null here).
unsafe fn vector_arg(ptr: *const f64, len: usize) -> Option<DVector<f64>> {
    if ptr.is_null() {
        return None;
    }
    Some(DVector::from_column_slice(std::slice::from_raw_parts(
        ptr, len,
    )))
}

/// # Safety
/// `out` must point to `out_len` writable doubles.
unsafe fn write_out(out: *mut f64, out_len: usize, value: &DVector<f64>) -> GkStatus {
    if out.is_null() {
        return GkStatus::NullPointer;
    }
    if out_len != value.len() {
        return GkStatus::BadLength;
    }
    std::slice::from_raw_parts_mut(out, out_len).copy_from_slice(value.as_slice());
    GkStatus::Ok
}

fn boxed(manifold: Manifold) -> *mut GkManifold {
    Box::into_raw(Box::new(GkManifold(manifold)))
}

/// Euclidean space R^n.
#[no_mangle]
pub extern "C" fn gk_manifold_euclidean(n: usize) -> *mut GkManifold {
    if n == 0 {
        return std::ptr::null_mut();
    }
    boxed(Manifold::euclidean(n))
}

/// Unit sphere S^n embedded in R^{n+1}.
#[no_mangle]
pub extern "C" fn gk_manifold_sphere(n: usize) -> *mut GkManifold {
    if n == 0 {
        return std::ptr::null_mut();
    }
    boxed(Manifold::sphere(n))
}

/// Rotation group SO(n); returns null unless `n` is 2 or 3.
#[no_mangle]
pub extern "C" fn gk_manifold_rotations(n: usize) -> *mut GkManifold {
    match Manifold::rotations(n) {
        Ok(m) => boxed(m),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Unit quaternion group.
#[no_mangle]
pub extern "C" fn gk_manifold_unit_quaternions() -> *mut GkManifold {
    boxed(Manifold::unit_quaternions())
}

/// Special Euclidean group SE(n); returns null unless `n` is 2 or 3.
#[no_mangle]
pub extern "C" fn gk_manifold_special_euclidean(n: usize) -> *mut GkManifold {
    match Manifold::special_euclidean(n) {
        Ok(m) => boxed(m),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Tangent bundle over a copy of `base`; the caller keeps ownership of
/// `base`.  Returns null if `base` is null.
///
/// # Safety
/// `base` must be a live handle from a `gk_manifold_*` constructor.
#[no_mangle]
pub unsafe extern "C" fn gk_manifold_tangent_bundle(base: *const GkManifold) -> *mut GkManifold {
    if base.is_null() {
        return std::ptr::null_mut();
    }
    boxed(Manifold::tangent_bundle((*base).0.clone()))
}

/// Releases a manifold handle; null is ignored.
///
/// # Safety
/// `m` must be a handle returned by a `gk_manifold_*` constructor that has
/// not been freed already.
#[no_mangle]
pub unsafe extern "C" fn gk_manifold_free(m: *mut GkManifold) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Intrinsic dimension, or 0 if `m` is null.
///
/// # Safety
/// `m` must be null or a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn gk_manifold_dim(m: *const GkManifold) -> usize {
    if m.is_null() {
        return 0;
    }
    (*m).0.dim()
}

/// Length of the ambient array representation, or 0 if `m` is null.
///
/// # Safety
/// `m` must be null or a live manifold handle.
#[no_mangle]
pub unsafe extern "C" fn gk_manifold_ambient_len(m: *const GkManifold) -> usize {
    if m.is_null() {
        return 0;
    }
    (*m).0.ambient_len()
}

/// Exponential map: writes `exp_p(x)` into `out`.  All three arrays have
/// the manifold's ambient length.
///
/// # Safety
/// `m` must be a live handle; the array arguments must match their stated
/// lengths.
#[no_mangle]
pub unsafe extern "C" fn gk_exp(
    m: *const GkManifold,
    p: *const f64,
    p_len: usize,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> GkStatus {
    guarded(|| {
        if m.is_null() {
            return GkStatus::NullPointer;
        }
        let manifold = &(*m).0;
        let ambient = manifold.ambient_len();
        if p_len != ambient || x_len != ambient || out_len != ambient {
            return GkStatus::BadLength;
        }
        let (Some(p), Some(x)) = (vector_arg(p, p_len), vector_arg(x, x_len)) else {
            return GkStatus::NullPointer;
        };
        match manifold.retract(&Point::new(p), &Tangent::new(x)) {
            Ok(q) => write_out(out, out_len, &q.coords),
            Err(e) => status_of(&e),
        }
    })
}

/// Logarithmic map: writes `log_p(q)` into `out`.
///
/// # Safety
/// `m` must be a live handle; the array arguments must match their stated
/// lengths.
#[no_mangle]
pub unsafe extern "C" fn gk_log(
    m: *const GkManifold,
    p: *const f64,
    p_len: usize,
    q: *const f64,
    q_len: usize,
    out: *mut f64,
    out_len: usize,
) -> GkStatus {
    guarded(|| {
        if m.is_null() {
            return GkStatus::NullPointer;
        }
        let manifold = &(*m).0;
        let ambient = manifold.ambient_len();
        if p_len != ambient || q_len != ambient || out_len != ambient {
            return GkStatus::BadLength;
        }
        let (Some(p), Some(q)) = (vector_arg(p, p_len), vector_arg(q, q_len)) else {
            return GkStatus::NullPointer;
        };
        match manifold.inverse_retract(&Point::new(p), &Point::new(q)) {
            Ok(x) => write_out(out, out_len, &x.coords),
            Err(e) => status_of(&e),
        }
    })
}

/// Parallel transport: moves the tangent `x` at `p` along the geodesic with
/// initial velocity `d` and writes the transported vector into `out`.
///
/// # Safety
/// `m` must be a live handle; the array arguments must match their stated
/// lengths.
#[no_mangle]
pub unsafe extern "C" fn gk_parallel_transport(
    m: *const GkManifold,
    p: *const f64,
    p_len: usize,
    d: *const f64,
    d_len: usize,
    x: *const f64,
    x_len: usize,
    out: *mut f64,
    out_len: usize,
) -> GkStatus {
    guarded(|| {
        if m.is_null() {
            return GkStatus::NullPointer;
        }
        let manifold = &(*m).0;
        let ambient = manifold.ambient_len();
        if p_len != ambient || d_len != ambient || x_len != ambient || out_len != ambient {
            return GkStatus::BadLength;
        }
        let (Some(p), Some(d), Some(x)) = (
            vector_arg(p, p_len),
            vector_arg(d, d_len),
            vector_arg(x, x_len),
        ) else {
            return GkStatus::NullPointer;
        };
        match manifold.parallel_transport(&Point::new(p), &Tangent::new(d), &Tangent::new(x)) {
            Ok(moved) => write_out(out, out_len, &moved.coords),
            Err(e) => status_of(&e),
        }
    })
}

/// Geodesic distance between `p` and `q`, written into `out_distance`.
///
/// # Safety
/// `m` must be a live handle; the array arguments must match their stated
/// lengths; `out_distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gk_distance(
    m: *const GkManifold,
    p: *const f64,
    p_len: usize,
    q: *const f64,
    q_len: usize,
    out_distance: *mut f64,
) -> GkStatus {
    guarded(|| {
        if m.is_null() || out_distance.is_null() {
            return GkStatus::NullPointer;
        }
        let manifold = &(*m).0;
        let ambient = manifold.ambient_len();
        if p_len != ambient || q_len != ambient {
            return GkStatus::BadLength;
        }
        let (Some(p), Some(q)) = (vector_arg(p, p_len), vector_arg(q, q_len)) else {
            return GkStatus::NullPointer;
        };
        match manifold.distance(&Point::new(p), &Point::new(q)) {
            Ok(dist) => {
                *out_distance = dist;
                GkStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Runs one benchmark experiment (`"car2d"` or `"sphere"`) with the given
/// horizon, time step, seed, and adaptive-EKF forgetting factor, writing
/// the three CSV files into `out_dir` (created if needed).
///
/// # Safety
/// `experiment` and `out_dir` must be readable NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn gk_run_experiment(
    experiment: *const c_char,
    steps: usize,
    dt: f64,
    seed: u64,
    alpha: f64,
    out_dir: *const c_char,
) -> GkStatus {
    guarded(|| {
        if experiment.is_null() || out_dir.is_null() {
            return GkStatus::NullPointer;
        }
        let Ok(name) = CStr::from_ptr(experiment).to_str() else {
            return GkStatus::Utf8Error;
        };
        let Ok(dir) = CStr::from_ptr(out_dir).to_str() else {
            return GkStatus::Utf8Error;
        };
        let Some(kind) = ExperimentKind::parse(name) else {
            return GkStatus::InvalidArgument;
        };
        if steps == 0 {
            return GkStatus::InvalidArgument;
        }
        let mut cfg = ExperimentConfig::for_kind(kind);
        cfg.steps = steps;
        cfg.dt = dt;
        cfg.seed = seed;
        cfg.adapt_alpha = alpha;
        if let Err(e) = cfg.validate() {
            return status_of(&e);
        }
        let record = match geokalman::sim::run_experiment(&cfg) {
            Ok(record) => record,
            Err(e) => return status_of(&e),
        };
        if std::fs::create_dir_all(dir).is_err() {
            return GkStatus::IoError;
        }
        match geokalman::cli::write_outputs(&record, Path::new(dir)) {
            Ok(_) => GkStatus::Ok,
            Err(e) => status_of(&e),
        }
    })
}

/// Static human-readable description of a status code.
#[no_mangle]
pub extern "C" fn gk_status_message(status: GkStatus) -> *const c_char {
    let message: &'static str = match status {
        GkStatus::Ok => "ok\0",
        GkStatus::NullPointer => "a required pointer argument was null\0",
        GkStatus::InvalidArgument => "an argument value is invalid\0",
        GkStatus::BadLength => "a buffer length does not match the manifold\0",
        GkStatus::NumericalError => "the operation failed numerically\0",
        GkStatus::Utf8Error => "a string argument is not valid UTF-8\0",
        GkStatus::IoError => "writing the experiment outputs failed\0",
        GkStatus::InternalError => "unexpected internal failure\0",
    };
    message.as_ptr() as *const c_char
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn gk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
