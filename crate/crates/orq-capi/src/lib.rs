//! C ABI over the orq indexes: opaque handles, status codes, and flat
//! point buffers. Every function is panic-safe at the boundary.
//!
//! Ownership rules: handles returned through `out` parameters are owned by
//! the caller and released with [`orq_index_free`]; point buffers returned
//! by query calls are released with [`orq_points_free`].

use orq::config::{Config, Ctx};
use orq::index_file::{self, IndexKind, LoadedIndex};
use orq::range_report::build_report;
use orq::range_successor::build_successor;
use orq::sorted_report::build_sorted_report;
use orq::{Error, Point, Rect};
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

/// Status code returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrqStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    DuplicatePoint = 3,
    IoError = 4,
    CorruptIndex = 5,
    WrongIndexType = 6,
    Panic = 7,
}

/// Index flavor selectors for `orq_build`.
pub const ORQ_KIND_REPORT: u8 = 0;
pub const ORQ_KIND_SUCC: u8 = 1;
pub const ORQ_KIND_SORTED: u8 = 2;

/// A point, C layout.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct OrqPoint {
    pub x: u64,
    pub y: u64,
}

/// Opaque index handle.
pub struct OrqIndex {
    inner: LoadedIndex,
}

fn status_of(err: &Error) -> OrqStatus {
    match err {
        Error::DuplicatePoint(_, _) => OrqStatus::DuplicatePoint,
        Error::Format(_) => OrqStatus::CorruptIndex,
        _ => OrqStatus::InvalidArgument,
    }
}

fn guarded(f: impl FnOnce() -> OrqStatus) -> OrqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => OrqStatus::Panic,
    }
}

/// Build an index over `len` points given as parallel coordinate arrays.
///
/// # Safety
/// `xs` and `ys` must point to `len` readable u64 values; `out` must be a
/// valid location to store the handle.
#[no_mangle]
pub unsafe extern "C" fn orq_build(
    kind: u8,
    xs: *const u64,
    ys: *const u64,
    len: usize,
    out: *mut *mut OrqIndex,
) -> OrqStatus {
    if out.is_null() || (len > 0 && (xs.is_null() || ys.is_null())) {
        return OrqStatus::NullArgument;
    }
    let xs = if len == 0 { &[][..] } else { std::slice::from_raw_parts(xs, len) };
    let ys = if len == 0 { &[][..] } else { std::slice::from_raw_parts(ys, len) };
    guarded(|| {
        let points: Vec<Point> =
            xs.iter().zip(ys).map(|(&x, &y)| Point { x, y }).collect();
        let ctx = Ctx::new(Config::default());
        let built = match kind {
            ORQ_KIND_REPORT => build_report(&points, &ctx).map(LoadedIndex::Report),
            ORQ_KIND_SUCC => build_successor(&points, &ctx).map(LoadedIndex::Succ),
            ORQ_KIND_SORTED => build_sorted_report(&points, &ctx).map(LoadedIndex::Sorted),
            _ => return OrqStatus::InvalidArgument,
        };
        match built {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(OrqIndex { inner }));
                OrqStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// Release a handle returned by `orq_build` or `orq_load`.
///
/// # Safety
/// `idx` must be a handle from this library, not yet freed; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn orq_index_free(idx: *mut OrqIndex) {
    if !idx.is_null() {
        drop(Box::from_raw(idx));
    }
}

/// Index kind tag (ORQ_KIND_*) of a handle.
///
/// # Safety
/// `idx` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn orq_index_kind(idx: *const OrqIndex) -> u8 {
    match (*idx).inner.kind() {
        IndexKind::Report => ORQ_KIND_REPORT,
        IndexKind::Succ => ORQ_KIND_SUCC,
        IndexKind::Sorted => ORQ_KIND_SORTED,
    }
}

/// Number of indexed points.
///
/// # Safety
/// `idx` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn orq_index_len(idx: *const OrqIndex) -> u64 {
    (*idx).inner.len() as u64
}

fn path_from(ptr: *const c_char) -> Option<PathBuf> {
    if ptr.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(ptr) }.to_str().ok()?;
    Some(PathBuf::from(s))
}

/// Store the index in the ORQ1 file format.
///
/// # Safety
/// `idx` must be a live handle and `path` a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn orq_save(idx: *const OrqIndex, path: *const c_char) -> OrqStatus {
    let Some(path) = path_from(path) else {
        return OrqStatus::NullArgument;
    };
    if idx.is_null() {
        return OrqStatus::NullArgument;
    }
    guarded(|| match index_file::store(&(*idx).inner, &path) {
        Ok(()) => OrqStatus::Ok,
        Err(_) => OrqStatus::IoError,
    })
}

/// Load an ORQ1 file into a fresh handle.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string; `out` a valid location.
#[no_mangle]
pub unsafe extern "C" fn orq_load(path: *const c_char, out: *mut *mut OrqIndex) -> OrqStatus {
    let Some(path) = path_from(path) else {
        return OrqStatus::NullArgument;
    };
    if out.is_null() {
        return OrqStatus::NullArgument;
    }
    guarded(|| match index_file::load(&path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(OrqIndex { inner }));
            OrqStatus::Ok
        }
        Err(Error::Format(m)) if m.contains("read ") => OrqStatus::IoError,
        Err(_) => OrqStatus::CorruptIndex,
    })
}

unsafe fn emit_points(
    pts: Vec<Point>,
    out_points: *mut *mut OrqPoint,
    out_len: *mut usize,
) -> OrqStatus {
    let mut boxed: Box<[OrqPoint]> =
        pts.into_iter().map(|p| OrqPoint { x: p.x, y: p.y }).collect();
    *out_len = boxed.len();
    *out_points = if boxed.is_empty() {
        std::ptr::null_mut()
    } else {
        boxed.as_mut_ptr()
    };
    if !(*out_points).is_null() {
        std::mem::forget(boxed);
    }
    OrqStatus::Ok
}

/// Release a point buffer returned by a query call.
///
/// # Safety
/// `pts`/`len` must come from one query call; null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn orq_points_free(pts: *mut OrqPoint, len: usize) {
    if !pts.is_null() {
        drop(Box::from_raw(std::ptr::slice_from_raw_parts_mut(pts, len)));
    }
}

/// All points in `[x1,x2] x [y1,y2]`; requires a report index.
///
/// # Safety
/// `idx` must be a live handle; `out_points`/`out_len` valid locations.
#[no_mangle]
pub unsafe extern "C" fn orq_report(
    idx: *const OrqIndex,
    x1: u64,
    x2: u64,
    y1: u64,
    y2: u64,
    out_points: *mut *mut OrqPoint,
    out_len: *mut usize,
) -> OrqStatus {
    if idx.is_null() || out_points.is_null() || out_len.is_null() {
        return OrqStatus::NullArgument;
    }
    guarded(|| match &(*idx).inner {
        LoadedIndex::Report(i) => {
            let mut pts = i.report(&Rect::new(x1, x2, y1, y2));
            pts.sort_by_key(|p| (p.y, p.x));
            emit_points(pts, out_points, out_len)
        }
        _ => OrqStatus::WrongIndexType,
    })
}

/// Lowest point of the rectangle; requires a successor index. `found` is 0
/// when the rectangle is empty.
///
/// # Safety
/// `idx` must be a live handle; `out_point`/`found` valid locations.
#[no_mangle]
pub unsafe extern "C" fn orq_successor(
    idx: *const OrqIndex,
    x1: u64,
    x2: u64,
    y1: u64,
    y2: u64,
    out_point: *mut OrqPoint,
    found: *mut u8,
) -> OrqStatus {
    if idx.is_null() || out_point.is_null() || found.is_null() {
        return OrqStatus::NullArgument;
    }
    guarded(|| match &(*idx).inner {
        LoadedIndex::Succ(i) => {
            match i.successor(&Rect::new(x1, x2, y1, y2)) {
                Some(p) => {
                    *out_point = OrqPoint { x: p.x, y: p.y };
                    *found = 1;
                }
                None => *found = 0,
            }
            OrqStatus::Ok
        }
        _ => OrqStatus::WrongIndexType,
    })
}

/// Up to `limit` rectangle points in increasing y (`UINT64_MAX` = all);
/// requires a sorted index.
///
/// # Safety
/// `idx` must be a live handle; `out_points`/`out_len` valid locations.
#[no_mangle]
pub unsafe extern "C" fn orq_sorted(
    idx: *const OrqIndex,
    x1: u64,
    x2: u64,
    y1: u64,
    y2: u64,
    limit: u64,
    out_points: *mut *mut OrqPoint,
    out_len: *mut usize,
) -> OrqStatus {
    if idx.is_null() || out_points.is_null() || out_len.is_null() {
        return OrqStatus::NullArgument;
    }
    guarded(|| match &(*idx).inner {
        LoadedIndex::Sorted(i) => {
            let k = if limit == u64::MAX { None } else { Some(limit as usize) };
            let pts = i.sorted_report(&Rect::new(x1, x2, y1, y2), k);
            emit_points(pts, out_points, out_len)
        }
        _ => OrqStatus::WrongIndexType,
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn orq_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
