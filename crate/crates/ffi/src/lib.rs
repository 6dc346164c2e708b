//! C ABI over `fdm-core`'s streaming solvers.
//!
//! A stream is an opaque `FdmStream*` created by [`fdm_stream_new`], fed
//! with [`fdm_stream_push`], read with [`fdm_stream_finalize`] and released
//! with [`fdm_stream_free`]. Every fallible call returns an [`FdmStatus`];
//! the message of the last failure on a stream is available through
//! [`fdm_stream_last_error`].

use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use fdm_core::stream::{FairStream, StreamParams};
use fdm_core::{Element, FdmError, Metric, Sfdm1State, Sfdm2State};

pub const FDM_ALGORITHM_SFDM1: u32 = 1;
pub const FDM_ALGORITHM_SFDM2: u32 = 2;

pub const FDM_METRIC_EUCLIDEAN: u32 = 0;
pub const FDM_METRIC_MANHATTAN: u32 = 1;
pub const FDM_METRIC_ANGULAR: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Infeasible = 3,
    BufferTooSmall = 4,
    Internal = 5,
}

/// Opaque streaming solver handle.
pub struct FdmStream {
    inner: Box<dyn FairStream>,
    last_error: Option<CString>,
}

impl FdmStream {
    fn fail(&mut self, err: FdmError) -> FdmStatus {
        let status = status_of(&err);
        self.last_error = CString::new(err.to_string()).ok();
        status
    }
}

fn status_of(err: &FdmError) -> FdmStatus {
    match err {
        FdmError::Infeasible(_) => FdmStatus::Infeasible,
        FdmError::InvalidInput(_) | FdmError::Config(_) | FdmError::Parse { .. } => {
            FdmStatus::InvalidInput
        }
        _ => FdmStatus::Internal,
    }
}

fn metric_of(code: u32) -> Option<Metric> {
    match code {
        FDM_METRIC_EUCLIDEAN => Some(Metric::Euclidean),
        FDM_METRIC_MANHATTAN => Some(Metric::Manhattan),
        FDM_METRIC_ANGULAR => Some(Metric::Angular),
        _ => None,
    }
}

fn guarded(f: impl FnOnce() -> FdmStatus) -> FdmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or(FdmStatus::Internal)
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn fdm_status_str(status: i32) -> *const c_char {
    let s: &'static [u8] = match status {
        0 => b"ok\0",
        1 => b"null pointer argument\0",
        2 => b"invalid input\0",
        3 => b"infeasible instance\0",
        4 => b"output buffer too small\0",
        5 => b"internal error\0",
        _ => b"unknown status\0",
    };
    s.as_ptr().cast()
}

/// Creates a streaming solver.
///
/// `algorithm` is `FDM_ALGORITHM_SFDM1` (exactly two groups) or
/// `FDM_ALGORITHM_SFDM2`; `caps[g]` is the number of elements required from
/// group `g`. `d_min`/`d_max` bound the pairwise distances of the stream.
///
/// # Safety
/// `caps` must point to `num_groups` readable values and `out` to writable
/// storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_new(
    algorithm: u32,
    metric: u32,
    caps: *const usize,
    num_groups: usize,
    eps: f64,
    d_min: f64,
    d_max: f64,
    out: *mut *mut FdmStream,
) -> FdmStatus {
    guarded(|| {
        if caps.is_null() || out.is_null() {
            return FdmStatus::NullPointer;
        }
        *out = ptr::null_mut();
        let Some(metric) = metric_of(metric) else {
            return FdmStatus::InvalidInput;
        };
        let params = StreamParams {
            metric,
            eps,
            d_min,
            d_max,
            caps: std::slice::from_raw_parts(caps, num_groups).to_vec(),
        };
        let inner: Box<dyn FairStream> = match algorithm {
            FDM_ALGORITHM_SFDM1 => match Sfdm1State::new(params) {
                Ok(s) => Box::new(s),
                Err(e) => return status_of(&e),
            },
            FDM_ALGORITHM_SFDM2 => match Sfdm2State::new(params) {
                Ok(s) => Box::new(s),
                Err(e) => return status_of(&e),
            },
            _ => return FdmStatus::InvalidInput,
        };
        *out = Box::into_raw(Box::new(FdmStream {
            inner,
            last_error: None,
        }));
        FdmStatus::Ok
    })
}

/// Feeds one element to the stream.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`]; `features` must point to
/// `dim` readable values.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_push(
    stream: *mut FdmStream,
    id: u64,
    features: *const f64,
    dim: usize,
    group: usize,
) -> FdmStatus {
    guarded(|| {
        let Some(stream) = stream.as_mut() else {
            return FdmStatus::NullPointer;
        };
        if features.is_null() && dim > 0 {
            return FdmStatus::NullPointer;
        }
        let feats = if dim == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(features, dim).to_vec()
        };
        match stream
            .inner
            .process(Arc::new(Element::new(id, feats, group)))
        {
            Ok(()) => FdmStatus::Ok,
            Err(e) => stream.fail(e),
        }
    })
}

/// Post-processes the candidates and writes the chosen ids.
///
/// On `FDM_STATUS_BUFFER_TOO_SMALL`, `*out_len` holds the required capacity.
/// The stream stays usable: more elements may be pushed afterwards.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`]; `out_ids` must have room for
/// `capacity` values; `out_len` and `out_diversity` must be writable
/// (`out_diversity` may be null).
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_finalize(
    stream: *mut FdmStream,
    out_ids: *mut u64,
    capacity: usize,
    out_len: *mut usize,
    out_diversity: *mut f64,
) -> FdmStatus {
    guarded(|| {
        let Some(stream) = stream.as_mut() else {
            return FdmStatus::NullPointer;
        };
        if out_len.is_null() || (out_ids.is_null() && capacity > 0) {
            return FdmStatus::NullPointer;
        }
        let solution = match stream.inner.finalize() {
            Ok(s) => s,
            Err(e) => return stream.fail(e),
        };
        let ids = solution.ids();
        *out_len = ids.len();
        if ids.len() > capacity {
            return FdmStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(ids.as_ptr(), out_ids, ids.len());
        if !out_diversity.is_null() {
            *out_diversity = solution.diversity;
        }
        FdmStatus::Ok
    })
}

/// Number of distinct elements currently held by the stream's candidates.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_stored_elements(
    stream: *const FdmStream,
    out: *mut usize,
) -> FdmStatus {
    guarded(|| match (stream.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.inner.stored_elements();
            FdmStatus::Ok
        }
        _ => FdmStatus::NullPointer,
    })
}

/// Number of guesses the stream maintains.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_num_guesses(
    stream: *const FdmStream,
    out: *mut usize,
) -> FdmStatus {
    guarded(|| match (stream.as_ref(), out.is_null()) {
        (Some(s), false) => {
            *out = s.inner.ladder().len();
            FdmStatus::Ok
        }
        _ => FdmStatus::NullPointer,
    })
}

/// Message of the last failed call on `stream`, or null. Valid until the
/// next call on the same stream.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_last_error(stream: *const FdmStream) -> *const c_char {
    stream
        .as_ref()
        .and_then(|s| s.last_error.as_ref())
        .map_or(ptr::null(), |m| m.as_ptr())
}

/// Releases a stream. Null is ignored.
///
/// # Safety
/// `stream` must come from [`fdm_stream_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fdm_stream_free(stream: *mut FdmStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Exact smallest nonzero and largest pairwise distance of `n` row-major
/// points of dimension `dim`.
///
/// # Safety
/// `points` must hold `n * dim` readable values; `out_min`/`out_max` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fdm_extremal_distances(
    metric: u32,
    points: *const f64,
    n: usize,
    dim: usize,
    out_min: *mut f64,
    out_max: *mut f64,
) -> FdmStatus {
    guarded(|| {
        if points.is_null() || out_min.is_null() || out_max.is_null() {
            return FdmStatus::NullPointer;
        }
        let Some(metric) = metric_of(metric) else {
            return FdmStatus::InvalidInput;
        };
        let Some(len) = n.checked_mul(dim) else {
            return FdmStatus::InvalidInput;
        };
        let flat = std::slice::from_raw_parts(points, len);
        let elements: Vec<Arc<Element>> = (0..n)
            .map(|i| {
                Arc::new(Element::new(
                    i as u64,
                    flat[i * dim..(i + 1) * dim].to_vec(),
                    0,
                ))
            })
            .collect();
        if elements.iter().any(|e| !metric.admits(&e.features)) {
            return FdmStatus::InvalidInput;
        }
        match fdm_core::dataset::extremal_distances_of(&elements, metric) {
            Ok((lo, hi)) => {
                *out_min = lo;
                *out_max = hi;
                FdmStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
