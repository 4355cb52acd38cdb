// SPDX-License-Identifier: Apache-2.0

//! C ABI over the mudkit workspace.
//!
//! Every fallible call returns a [`MudkitStatus`]. On failure a message is kept per thread and
//! can be read with [`mudkit_last_error`]. Strings handed out through `out` parameters are
//! NUL-terminated UTF-8 JSON and must be released with [`mudkit_string_free`].
//!
//! A workspace handle is not synchronized. Callers sharing one across threads must serialize
//! access themselves.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use mudkit::acetree::{is_allowed, PacketQuery, QueryError};
use mudkit::model::DeviceId;
use mudkit::workspace::{Analysis, WorkspaceError};
use mudkit::{parse_mud_file, summarize, Workspace};
use serde_json::json;

/// Result of a call across the C boundary.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MudkitStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string or document argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// Malformed input, such as an unparsable context or query.
    InvalidInput = 3,
    /// The referenced file or device does not exist.
    NotFound = 4,
    /// The context refers to devices it does not declare.
    Conflict = 5,
    /// An internal panic was caught at the boundary.
    Panic = 6,
}

/// Opaque workspace handle.
pub struct MudkitWorkspace {
    inner: Workspace,
    cache: Option<Arc<Analysis>>,
}

impl MudkitWorkspace {
    fn analysis(&mut self) -> Arc<Analysis> {
        match &self.cache {
            Some(a) if a.revision == self.inner.revision() => a.clone(),
            _ => {
                let a = Arc::new(self.inner.analyze());
                self.cache = Some(a.clone());
                a
            }
        }
    }
}

struct Failure(MudkitStatus, String);

impl From<WorkspaceError> for Failure {
    fn from(e: WorkspaceError) -> Self {
        let status = match &e {
            WorkspaceError::NonUtf8 => MudkitStatus::InvalidUtf8,
            WorkspaceError::UnknownFile(_) => MudkitStatus::NotFound,
            WorkspaceError::Context(c) if c.is_reference_error() => MudkitStatus::Conflict,
            WorkspaceError::Context(_) | WorkspaceError::State(_) => MudkitStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

impl From<QueryError> for Failure {
    fn from(e: QueryError) -> Self {
        let status = match e {
            QueryError::UnknownDevice(_) => MudkitStatus::NotFound,
            QueryError::InvalidRemote(_) => MudkitStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MudkitStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MudkitStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {msg}"));
            MudkitStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(MudkitStatus::NullArgument, format!("{what} is null"))
}

unsafe fn workspace<'a>(ws: *mut MudkitWorkspace) -> Result<&'a mut MudkitWorkspace, Failure> {
    unsafe { ws.as_mut() }.ok_or_else(|| null("workspace"))
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(unsafe { std::slice::from_raw_parts(data, len) })
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    unsafe { CStr::from_ptr(s) }.to_str().map_err(|_| {
        Failure(
            MudkitStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn emit(out: *mut *mut c_char, value: serde_json::Value) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    let s = CString::new(value.to_string()).expect("JSON has no interior NUL");
    unsafe { *out = s.into_raw() };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mudkit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or null.
///
/// The pointer stays valid until the next mudkit call on the same thread.
#[no_mangle]
pub extern "C" fn mudkit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned through an `out` parameter. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mudkit_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Parse and validate one MUD document.
///
/// Writes `{"errors": n, "findings": [...]}` to `out_json`.
#[no_mangle]
pub unsafe extern "C" fn mudkit_validate(
    data: *const u8,
    len: usize,
    out_json: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let r = parse_mud_file(unsafe { bytes(data, len) }?);
        let errors = r.findings.iter().filter(|f| f.is_error()).count();
        unsafe {
            emit(
                out_json,
                json!({ "errors": errors, "findings": r.findings }),
            )
        }
    })
}

/// Create an empty workspace. Free it with `mudkit_workspace_free`.
#[no_mangle]
pub extern "C" fn mudkit_workspace_new() -> *mut MudkitWorkspace {
    Box::into_raw(Box::new(MudkitWorkspace {
        inner: Workspace::new(),
        cache: None,
    }))
}

#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_free(ws: *mut MudkitWorkspace) {
    if !ws.is_null() {
        drop(unsafe { Box::from_raw(ws) });
    }
}

/// Current revision; zero for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_revision(ws: *const MudkitWorkspace) -> u64 {
    unsafe { ws.as_ref() }.map_or(0, |w| w.inner.revision())
}

/// Store a MUD document. Documents with errors are kept but left out of the merge.
///
/// `out_id` receives the new file id. `out_findings`, when not null, receives the parse findings.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_add_file(
    ws: *mut MudkitWorkspace,
    data: *const u8,
    len: usize,
    out_id: *mut u64,
    out_findings: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let ws = unsafe { workspace(ws) }?;
        if out_id.is_null() {
            return Err(null("out_id"));
        }
        let (id, findings) = ws.inner.add_file(unsafe { bytes(data, len) }?)?;
        unsafe { *out_id = id };
        if !out_findings.is_null() {
            unsafe { emit(out_findings, json!(findings)) }?;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_remove_file(
    ws: *mut MudkitWorkspace,
    id: u64,
) -> MudkitStatus {
    guard(|| Ok(unsafe { workspace(ws) }?.inner.remove_file(id)?))
}

/// Replace the deployment context with a JSON document. Null clears it.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_set_context(
    ws: *mut MudkitWorkspace,
    context_json: *const c_char,
) -> MudkitStatus {
    guard(|| {
        let ws = unsafe { workspace(ws) }?;
        if context_json.is_null() {
            ws.inner.set_context(None);
            return Ok(());
        }
        Ok(ws
            .inner
            .set_context_json(unsafe { CStr::from_ptr(context_json) }.to_bytes())?)
    })
}

/// Writes `{"revision", "nodes", "edges"}`.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_graph(
    ws: *mut MudkitWorkspace,
    out_json: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let a = unsafe { workspace(ws) }?.analysis();
        unsafe {
            emit(
                out_json,
                json!({ "revision": a.revision, "nodes": a.graph.nodes, "edges": a.graph.edges }),
            )
        }
    })
}

/// Writes `{"revision", "findings"}` covering every file and the merge.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_findings(
    ws: *mut MudkitWorkspace,
    out_json: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let a = unsafe { workspace(ws) }?.analysis();
        unsafe {
            emit(
                out_json,
                json!({ "revision": a.revision, "findings": a.findings }),
            )
        }
    })
}

/// Decide a packet given as a JSON query. Writes `{"revision", "decision", "refs"}`.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_query(
    ws: *mut MudkitWorkspace,
    query_json: *const c_char,
    out_json: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let ws = unsafe { workspace(ws) }?;
        let query: PacketQuery = serde_json::from_str(unsafe { text(query_json, "query") }?)
            .map_err(|e| Failure(MudkitStatus::InvalidInput, format!("invalid query: {e}")))?;
        let a = ws.analysis();
        let outcome = is_allowed(&a.ruleset, &query)?;
        unsafe {
            emit(
                out_json,
                json!({ "revision": a.revision, "decision": outcome.decision, "refs": outcome.refs }),
            )
        }
    })
}

/// Writes the summary of one device.
#[no_mangle]
pub unsafe extern "C" fn mudkit_workspace_summary(
    ws: *mut MudkitWorkspace,
    device: *const c_char,
    out_json: *mut *mut c_char,
) -> MudkitStatus {
    guard(|| {
        let ws = unsafe { workspace(ws) }?;
        let device = DeviceId::new(unsafe { text(device, "device") }?);
        let a = ws.analysis();
        let s = summarize(&a.ruleset, &device)
            .map_err(|e| Failure(MudkitStatus::NotFound, e.to_string()))?;
        unsafe { emit(out_json, json!(s)) }
    })
}
