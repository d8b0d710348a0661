//! C ABI for the convergence-analysis library: opaque handles for models and
//! reports, integer status codes, and JSON strings at the boundary. The
//! header `include/semiconv.h` is generated by cbindgen at build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::ptr;

use semiconv::analysis::VerdictEngine;
use semiconv::model::{self, BuiltModel, GroupClassSpec, ModelFile};
use semiconv::report::{AnalysisReport, Conclusion};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiconvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    AnalysisFailed = 4,
}

/// Conclusion codes of a report.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiconvConclusion {
    StronglyConvergent = 0,
    NoNontrivialUnimodularEigenvalue = 1,
    NoVerdict = 2,
}

/// Opaque model handle.
pub struct SemiconvModel {
    built: BuiltModel,
}

/// Opaque report handle.
pub struct SemiconvReport {
    report: AnalysisReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let cstring = CString::new(message.replace('\0', " "))
        .unwrap_or_else(|_| CString::new("error message unavailable").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(cstring));
}

fn to_owned_cstring(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(ptr::null_mut())
}

// SAFETY helper: read a required C string argument
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, SemiconvStatus> {
    if ptr.is_null() {
        set_error("null pointer argument".into());
        return Err(SemiconvStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("argument is not valid UTF-8".into());
        SemiconvStatus::InvalidUtf8
    })
}

/// Last error message of the calling thread, or NULL when none was recorded.
/// The caller owns the returned string and frees it with
/// [`semiconv_string_free`].
#[no_mangle]
pub extern "C" fn semiconv_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Free a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must have been returned by a function of this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn semiconv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse and validate a model file given as JSON.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semiconv_model_from_json(
    json: *const c_char,
    out: *mut *mut SemiconvModel,
) -> SemiconvStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return SemiconvStatus::NullPointer;
    }
    let text = match read_str(json) {
        Ok(t) => t,
        Err(status) => return status,
    };
    let model = match ModelFile::from_json(text).and_then(|m| m.build()) {
        Ok(built) => built,
        Err(e) => {
            set_error(e.to_string());
            return SemiconvStatus::InvalidInput;
        }
    };
    *out = Box::into_raw(Box::new(SemiconvModel { built: model }));
    SemiconvStatus::Ok
}

/// Load a named gallery model.
///
/// # Safety
/// `name` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semiconv_gallery_model(
    name: *const c_char,
    out: *mut *mut SemiconvModel,
) -> SemiconvStatus {
    if out.is_null() {
        set_error("null output pointer".into());
        return SemiconvStatus::NullPointer;
    }
    let name = match read_str(name) {
        Ok(t) => t,
        Err(status) => return status,
    };
    match model::gallery(name).and_then(|m| m.build()) {
        Ok(built) => {
            *out = Box::into_raw(Box::new(SemiconvModel { built }));
            SemiconvStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            SemiconvStatus::InvalidInput
        }
    }
}

/// Canonical JSON of a named gallery model. NULL on error.
///
/// # Safety
/// `name` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semiconv_gallery_model_json(name: *const c_char) -> *mut c_char {
    let Ok(name) = read_str(name) else {
        return ptr::null_mut();
    };
    match model::gallery(name) {
        Ok(file) => to_owned_cstring(file.to_json()),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Free a model handle. NULL is ignored.
///
/// # Safety
/// `model` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semiconv_model_free(model: *mut SemiconvModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Run the verdict engine on a model.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn semiconv_analyze(
    model: *const SemiconvModel,
    out: *mut *mut SemiconvReport,
) -> SemiconvStatus {
    if model.is_null() || out.is_null() {
        set_error("null pointer argument".into());
        return SemiconvStatus::NullPointer;
    }
    let model = &*model;
    let engine = VerdictEngine::new(model.built.options.clone());
    match engine.run(&model.built.representation) {
        Ok(report) => {
            *out = Box::into_raw(Box::new(SemiconvReport { report }));
            SemiconvStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            SemiconvStatus::AnalysisFailed
        }
    }
}

/// Free a report handle. NULL is ignored.
///
/// # Safety
/// `report` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semiconv_report_free(report: *mut SemiconvReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Overall conclusion of a report.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semiconv_report_conclusion(
    report: *const SemiconvReport,
) -> SemiconvConclusion {
    if report.is_null() {
        return SemiconvConclusion::NoVerdict;
    }
    match (*report).report.conclusion {
        Conclusion::StronglyConvergent => SemiconvConclusion::StronglyConvergent,
        Conclusion::NoNontrivialUnimodularEigenvalue => {
            SemiconvConclusion::NoNontrivialUnimodularEigenvalue
        }
        Conclusion::NoVerdict => SemiconvConclusion::NoVerdict,
    }
}

/// Canonical JSON rendering of a report. NULL on error.
///
/// # Safety
/// `report` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semiconv_report_to_json(report: *const SemiconvReport) -> *mut c_char {
    if report.is_null() {
        set_error("null report handle".into());
        return ptr::null_mut();
    }
    to_owned_cstring((*report).report.to_canonical_json())
}

/// Divisibility verdict of a rational group class given as JSON
/// (for example `{"type":"prime-localized","primes":[2]}`). Returns a JSON
/// payload or NULL on error.
///
/// # Safety
/// `group_json` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semiconv_divisibility_json(group_json: *const c_char) -> *mut c_char {
    let Ok(text) = read_str(group_json) else {
        return ptr::null_mut();
    };
    let spec: GroupClassSpec = match serde_json_from(text) {
        Ok(spec) => spec,
        Err(e) => {
            set_error(e);
            return ptr::null_mut();
        }
    };
    match spec.to_class() {
        Ok(class) => {
            let payload = model::divisibility_report(&class);
            to_owned_cstring(semiconv::report::canonical_json(&payload))
        }
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}

fn serde_json_from(text: &str) -> Result<GroupClassSpec, String> {
    serde_json::from_str(text).map_err(|e| format!("malformed group JSON: {e}"))
}

/// Trajectory CSV of a probe under the net (probe: `e<i>`, `ones` or
/// `uniform`). NULL on error.
///
/// # Safety
/// `model` must be a live handle and `probe` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semiconv_simulate_csv(
    model: *const SemiconvModel,
    probe: *const c_char,
    horizon: usize,
) -> *mut c_char {
    if model.is_null() {
        set_error("null model handle".into());
        return ptr::null_mut();
    }
    let Ok(probe) = read_str(probe) else {
        return ptr::null_mut();
    };
    match model::simulate_csv(&(*model).built, probe, horizon) {
        Ok(csv) => to_owned_cstring(csv),
        Err(e) => {
            set_error(e.to_string());
            ptr::null_mut()
        }
    }
}
