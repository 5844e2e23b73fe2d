//! C ABI for the readorder pipeline.
//!
//! Handles are opaque and owned by the caller; every `*_new`/`*_parse`
//! has a matching `*_free`. Functions return a [`ReadorderStatus`]; on
//! failure [`readorder_last_error`] describes the problem until the next
//! call on the same thread. Strings returned by page getters stay valid
//! until the page is freed.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use readorder::geometry::{iou_quad, Point, Quad};
use readorder::metrics::eval_text;
use readorder::pipeline::formats::parse_detections;
use readorder::pipeline::{process_page, Config, PageResult};
use readorder::{BinaryMask, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReadorderStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Malformed or out-of-range input data.
    InvalidInput = 3,
    /// The pipeline failed on otherwise valid input.
    PipelineError = 4,
    Panic = 5,
}

/// Pipeline configuration.
pub struct ReadorderConfig {
    inner: Config,
}

/// Result of processing one page.
pub struct ReadorderPage {
    result: PageResult,
    text: CString,
    fused_text: Option<CString>,
    json: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let mut bytes = message.into().into_bytes();
    bytes.retain(|&b| b != 0);
    let msg = CString::new(bytes).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: ReadorderStatus, message: impl Into<String>) -> ReadorderStatus {
    set_error(message);
    status
}

fn from_error(e: &Error) -> ReadorderStatus {
    let status = if e.is_input_error() || matches!(e, Error::InvalidMask(_)) {
        ReadorderStatus::InvalidInput
    } else {
        ReadorderStatus::PipelineError
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> ReadorderStatus) -> ReadorderStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == ReadorderStatus::Ok {
                set_error("");
            }
            status
        }
        Err(_) => fail(ReadorderStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, ReadorderStatus> {
    if p.is_null() {
        return Err(fail(ReadorderStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ReadorderStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

fn c_string(s: &str) -> CString {
    CString::new(s.replace('\0', "")).unwrap_or_default()
}

/// Message for the last failed call on this thread; empty after success.
#[no_mangle]
pub extern "C" fn readorder_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// A configuration holding the defaults.
#[no_mangle]
pub extern "C" fn readorder_config_new() -> *mut ReadorderConfig {
    Box::into_raw(Box::new(ReadorderConfig {
        inner: Config::default(),
    }))
}

/// # Safety
/// `config` must come from [`readorder_config_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn readorder_config_free(config: *mut ReadorderConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Sets one key as it would appear in a config file. The config is left
/// unchanged on error.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn readorder_config_set(
    config: *mut ReadorderConfig,
    key: *const c_char,
    value: *const c_char,
) -> ReadorderStatus {
    guard(|| {
        let Some(config) = config.as_mut() else {
            return fail(ReadorderStatus::NullArgument, "config is null");
        };
        let (key, value) = match (str_arg(key, "key"), str_arg(value, "value")) {
            (Ok(k), Ok(v)) => (k, v),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let mut next = config.inner.clone();
        match next.set(key, value).and_then(|_| next.validate()) {
            Ok(()) => {
                config.inner = next;
                ReadorderStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// Runs the pipeline on one page.
///
/// `detections_json` is a JSON array of `{"box": [l, t, r, b], "label",
/// "score"}`. `mask` holds `mask_width * mask_height` bytes in row-major
/// order, nonzero marking boundary-line pixels, at `1 / mask_scale` of page
/// resolution. `line_json` is optional (null to skip) line recognition:
/// a JSON array of `{"column", "symbols", "probs"}`.
///
/// # Safety
/// Pointers must be valid for the stated sizes; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn readorder_parse_page(
    config: *const ReadorderConfig,
    detections_json: *const c_char,
    mask: *const u8,
    mask_width: usize,
    mask_height: usize,
    mask_scale: u32,
    line_json: *const c_char,
    out: *mut *mut ReadorderPage,
) -> ReadorderStatus {
    guard(|| {
        if out.is_null() {
            return fail(ReadorderStatus::NullArgument, "out is null");
        }
        *out = ptr::null_mut();
        let Some(config) = config.as_ref() else {
            return fail(ReadorderStatus::NullArgument, "config is null");
        };
        let dets_text = match str_arg(detections_json, "detections_json") {
            Ok(t) => t,
            Err(s) => return s,
        };
        let Some(n) = mask_width.checked_mul(mask_height) else {
            return fail(ReadorderStatus::InvalidInput, "mask size overflows");
        };
        if mask.is_null() && n > 0 {
            return fail(ReadorderStatus::NullArgument, "mask is null");
        }
        let bits: Vec<bool> = if n == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(mask, n).iter().map(|&b| b != 0).collect()
        };
        let records = if line_json.is_null() {
            None
        } else {
            let text = match str_arg(line_json, "line_json") {
                Ok(t) => t,
                Err(s) => return s,
            };
            match serde_json::from_str::<Vec<readorder::pipeline::LineRecord>>(text) {
                Ok(r) => Some(r),
                Err(e) => return fail(ReadorderStatus::InvalidInput, format!("line_json: {e}")),
            }
        };
        let run = || -> Result<PageResult, Error> {
            let dets = parse_detections(dets_text)?;
            let mask = BinaryMask::from_bits(mask_width, mask_height, bits, mask_scale)?;
            process_page("page", &dets, &mask, records.as_deref(), &config.inner)
        };
        match run() {
            Ok(result) => {
                let json = serde_json::to_string(&result).unwrap_or_default();
                let page = ReadorderPage {
                    text: c_string(&result.text),
                    fused_text: result.fused_text.as_deref().map(c_string),
                    json: c_string(&json),
                    result,
                };
                *out = Box::into_raw(Box::new(page));
                ReadorderStatus::Ok
            }
            Err(e) => from_error(&e),
        }
    })
}

/// # Safety
/// `page` must come from [`readorder_parse_page`] or be null.
#[no_mangle]
pub unsafe extern "C" fn readorder_page_free(page: *mut ReadorderPage) {
    if !page.is_null() {
        drop(Box::from_raw(page));
    }
}

/// Reading-order text: columns separated by `\n`, regions by `\n\n`.
///
/// # Safety
/// `page` must be a live handle or null (returns null).
#[no_mangle]
pub unsafe extern "C" fn readorder_page_text(page: *const ReadorderPage) -> *const c_char {
    page.as_ref().map_or(ptr::null(), |p| p.text.as_ptr())
}

/// Text after line-recognition fusion, or null when none was supplied.
///
/// # Safety
/// `page` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn readorder_page_fused_text(page: *const ReadorderPage) -> *const c_char {
    page.as_ref()
        .and_then(|p| p.fused_text.as_ref())
        .map_or(ptr::null(), |t| t.as_ptr())
}

/// Full result (lines, layout, document, text) as JSON.
///
/// # Safety
/// `page` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn readorder_page_json(page: *const ReadorderPage) -> *const c_char {
    page.as_ref().map_or(ptr::null(), |p| p.json.as_ptr())
}

/// # Safety
/// `page` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn readorder_page_line_count(page: *const ReadorderPage) -> usize {
    page.as_ref().map_or(0, |p| p.result.lines.len())
}

/// # Safety
/// `page` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn readorder_page_region_count(page: *const ReadorderPage) -> usize {
    page.as_ref().map_or(0, |p| p.result.layout.regions.len())
}

/// # Safety
/// `page` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn readorder_page_column_count(page: *const ReadorderPage) -> usize {
    page.as_ref().map_or(0, |p| p.result.document.columns().count())
}

/// Correct rate and accuracy rate of `pred` against `gt`, whitespace
/// ignored. Fails when `gt` has no characters.
///
/// # Safety
/// Strings must be NUL-terminated; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn readorder_eval_text(
    pred: *const c_char,
    gt: *const c_char,
    out_cr: *mut f64,
    out_ar: *mut f64,
) -> ReadorderStatus {
    guard(|| {
        if out_cr.is_null() || out_ar.is_null() {
            return fail(ReadorderStatus::NullArgument, "output pointer is null");
        }
        let (pred, gt) = match (str_arg(pred, "pred"), str_arg(gt, "gt")) {
            (Ok(p), Ok(g)) => (p, g),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        match eval_text(pred, gt) {
            Ok(r) => {
                *out_cr = r.cr;
                *out_ar = r.ar;
                ReadorderStatus::Ok
            }
            Err(e) => fail(ReadorderStatus::InvalidInput, e.to_string()),
        }
    })
}

/// IoU of two convex quadrilaterals, each given as 8 doubles
/// `x0, y0, ..., x3, y3` in either winding.
///
/// # Safety
/// `a` and `b` must point to 8 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn readorder_iou_quad(
    a: *const f64,
    b: *const f64,
    out: *mut f64,
) -> ReadorderStatus {
    guard(|| {
        if a.is_null() || b.is_null() || out.is_null() {
            return fail(ReadorderStatus::NullArgument, "null pointer argument");
        }
        let quad = |p: *const f64| {
            let v = std::slice::from_raw_parts(p, 8);
            Quad::new([
                Point::new(v[0], v[1]),
                Point::new(v[2], v[3]),
                Point::new(v[4], v[5]),
                Point::new(v[6], v[7]),
            ])
        };
        match (quad(a), quad(b)) {
            (Ok(qa), Ok(qb)) => {
                *out = iou_quad(&qa, &qb);
                ReadorderStatus::Ok
            }
            (Err(e), _) | (_, Err(e)) => fail(ReadorderStatus::InvalidInput, e.to_string()),
        }
    })
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn readorder_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
