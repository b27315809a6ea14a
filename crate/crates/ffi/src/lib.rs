//! C ABI for `tenperf`.
//!
//! Formats and certificates cross the boundary as opaque handles that the
//! caller releases with the matching `*_free` function. Every fallible call
//! returns a [`TpStatus`]; on failure, [`tp_last_error`] describes the most
//! recent error on the calling thread. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tenperf::certify::{certify_perfect, Certificate, Verdict};
use tenperf::formats::{is_perfect, parse_format, typical_rank_bounds, CanonicalFormat};
use tenperf::probe::generic_rank_probe;
use tenperf::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotCanonical = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TpVerdict {
    PerfectCertified = 0,
    FullRankFailed = 1,
    NotApplicable = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TpBounds {
    pub lower: u64,
    pub upper: u64,
    pub q: u64,
}

/// A canonical tensor format.
pub struct TpFormat {
    inner: CanonicalFormat,
}

/// The result of certifying one format.
pub struct TpCertificate {
    inner: Certificate,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TpStatus {
    match err {
        Error::MalformedFormat { .. } | Error::Overflow(_) => TpStatus::ParseError,
        Error::OrderTooSmall { .. } | Error::NotCanonical(_) => TpStatus::NotCanonical,
        _ => TpStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), TpStatus>>(f: F) -> TpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TpStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            TpStatus::Panic
        }
    }
}

fn fail(err: Error) -> TpStatus {
    set_last_error(err.to_string());
    status_of(&err)
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, TpStatus> {
    p.as_ref().ok_or_else(|| {
        set_last_error("null pointer argument");
        TpStatus::NullPointer
    })
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, TpStatus> {
    p.as_mut().ok_or_else(|| {
        set_last_error("null output pointer");
        TpStatus::NullPointer
    })
}

/// Parses and canonicalizes a format string such as `"2x2x3"`.
///
/// # Safety
/// `text` must be null or a NUL-terminated string; `out` must be null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tp_format_parse(text: *const c_char, out: *mut *mut TpFormat) -> TpStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        if text.is_null() {
            set_last_error("null format string");
            return Err(TpStatus::NullPointer);
        }
        let text = CStr::from_ptr(text).to_str().map_err(|_| {
            set_last_error("format string is not UTF-8");
            TpStatus::InvalidUtf8
        })?;
        let inner = parse_format(text)
            .and_then(|f| f.canonicalize())
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(TpFormat { inner }));
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle from [`tp_format_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_format_free(f: *mut TpFormat) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Number of modes of `f`, or 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live format handle.
#[no_mangle]
pub unsafe extern "C" fn tp_format_order(f: *const TpFormat) -> usize {
    f.as_ref().map_or(0, |f| f.inner.order())
}

/// Copies the sorted dims into `buf`, which holds `cap` entries.
///
/// # Safety
/// `f` must be a live handle and `buf` valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn tp_format_dims(
    f: *const TpFormat,
    buf: *mut usize,
    cap: usize,
) -> TpStatus {
    guard(|| {
        let f = borrow(f)?;
        let dims = f.inner.dims();
        if buf.is_null() {
            set_last_error("null dims buffer");
            return Err(TpStatus::NullPointer);
        }
        if cap < dims.len() {
            set_last_error(format!("buffer holds {cap} dims, need {}", dims.len()));
            return Err(TpStatus::BufferTooSmall);
        }
        ptr::copy_nonoverlapping(dims.as_ptr(), buf, dims.len());
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_bounds(f: *const TpFormat, out: *mut TpBounds) -> TpStatus {
    guard(|| {
        let f = borrow(f)?;
        let out = out_ref(out)?;
        let b = typical_rank_bounds(&f.inner);
        *out = TpBounds {
            lower: b.lower,
            upper: b.upper,
            q: b.q,
        };
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle and `perfect` writable; `q` may be null.
#[no_mangle]
pub unsafe extern "C" fn tp_is_perfect(
    f: *const TpFormat,
    perfect: *mut bool,
    q: *mut u64,
) -> TpStatus {
    guard(|| {
        let f = borrow(f)?;
        let perfect = out_ref(perfect)?;
        let v = is_perfect(&f.inner);
        *perfect = v.perfect;
        if let Some(q) = q.as_mut() {
            *q = v.q;
        }
        Ok(())
    })
}

/// # Safety
/// `f` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_certify(f: *const TpFormat, out: *mut *mut TpCertificate) -> TpStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let f = borrow(f)?;
        let inner = certify_perfect(&f.inner);
        *out = Box::into_raw(Box::new(TpCertificate { inner }));
        Ok(())
    })
}

/// # Safety
/// `c` must be null or a handle from [`tp_certify`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_certificate_free(c: *mut TpCertificate) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_certificate_verdict(
    c: *const TpCertificate,
    out: *mut TpVerdict,
) -> TpStatus {
    guard(|| {
        let c = borrow(c)?;
        *out_ref(out)? = match c.inner.verdict {
            Verdict::PerfectCertified => TpVerdict::PerfectCertified,
            Verdict::FullRankFailed => TpVerdict::FullRankFailed,
            Verdict::NotApplicable => TpVerdict::NotApplicable,
        };
        Ok(())
    })
}

/// Exact Jacobian rank, or -1 when no Jacobian was evaluated.
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_certificate_rank(c: *const TpCertificate, out: *mut i64) -> TpStatus {
    guard(|| {
        let c = borrow(c)?;
        *out_ref(out)? = c.inner.jacobian.rank.map_or(-1, |r| r as i64);
        Ok(())
    })
}

/// The certificate as JSON. Release the string with [`tp_string_free`].
///
/// # Safety
/// `c` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_certificate_json(
    c: *const TpCertificate,
    out: *mut *mut c_char,
) -> TpStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = ptr::null_mut();
        let c = borrow(c)?;
        *out = CString::new(c.inner.to_json())
            .expect("json has no NUL")
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Smallest `r` in `[lower bound, max_r]` whose Jacobian at random integer
/// points has full rank; `*found` is false when none did.
///
/// # Safety
/// `f` must be a live handle; `rank` and `found` writable.
#[no_mangle]
pub unsafe extern "C" fn tp_generic_rank(
    f: *const TpFormat,
    max_r: usize,
    trials: usize,
    seed: u64,
    rank: *mut usize,
    found: *mut bool,
) -> TpStatus {
    guard(|| {
        let f = borrow(f)?;
        let rank = out_ref(rank)?;
        let found = out_ref(found)?;
        let report = generic_rank_probe(&f.inner, max_r, trials, seed).map_err(fail)?;
        *found = report.estimated_generic_rank.is_some();
        *rank = report.estimated_generic_rank.unwrap_or(0);
        Ok(())
    })
}

/// Static description of a status code; unknown codes get a generic text.
#[no_mangle]
pub extern "C" fn tp_status_message(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid UTF-8",
        3 => c"malformed format string",
        4 => c"format has fewer than three nontrivial modes",
        5 => c"invalid argument",
        6 => c"buffer too small",
        7 => c"internal panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// Message for the last failure on this thread; valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn tp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tp_version() -> *const c_char {
    static VERSION: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(s) => s,
            Err(_) => panic!("version string"),
        };
    VERSION.as_ptr()
}
