// SPDX-License-Identifier: Apache-2.0

use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;
use std::ptr;

use mudkit_ffi::*;
use serde_json::Value;

fn corpus(rel: &str) -> Vec<u8> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/corpus")
        .join(rel);
    std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn take(s: *mut c_char) -> Value {
    assert!(!s.is_null());
    let v = serde_json::from_slice(unsafe { CStr::from_ptr(s) }.to_bytes()).unwrap();
    unsafe { mudkit_string_free(s) };
    v
}

fn last_error() -> String {
    let p = mudkit_last_error();
    assert!(!p.is_null(), "no error message recorded");
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Handle(*mut MudkitWorkspace);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { mudkit_workspace_free(self.0) };
    }
}

impl Handle {
    fn new() -> Self {
        Handle(mudkit_workspace_new())
    }

    fn add(&self, doc: &[u8]) -> (MudkitStatus, u64, Value) {
        let mut id = 0;
        let mut out = ptr::null_mut();
        let s = unsafe {
            mudkit_workspace_add_file(self.0, doc.as_ptr(), doc.len(), &mut id, &mut out)
        };
        let findings = if s == MudkitStatus::Ok {
            take(out)
        } else {
            Value::Null
        };
        (s, id, findings)
    }

    fn call(
        &self,
        f: unsafe extern "C" fn(*mut MudkitWorkspace, *mut *mut c_char) -> MudkitStatus,
    ) -> Value {
        let mut out = ptr::null_mut();
        assert_eq!(unsafe { f(self.0, &mut out) }, MudkitStatus::Ok);
        take(out)
    }

    fn set_context(&self, doc: &[u8]) -> MudkitStatus {
        let c = CString::new(doc).unwrap();
        unsafe { mudkit_workspace_set_context(self.0, c.as_ptr()) }
    }

    fn query(&self, q: &str) -> (MudkitStatus, Value) {
        let c = CString::new(q).unwrap();
        let mut out = ptr::null_mut();
        let s = unsafe { mudkit_workspace_query(self.0, c.as_ptr(), &mut out) };
        (
            s,
            if s == MudkitStatus::Ok {
                take(out)
            } else {
                Value::Null
            },
        )
    }
}

fn scenario() -> Handle {
    let ws = Handle::new();
    assert_eq!(ws.add(&corpus("scenario/a.json")).0, MudkitStatus::Ok);
    assert_eq!(ws.add(&corpus("scenario/b.json")).0, MudkitStatus::Ok);
    assert_eq!(
        ws.set_context(&corpus("scenario/context.json")),
        MudkitStatus::Ok
    );
    ws
}

#[test]
fn version_matches_package() {
    let v = unsafe { CStr::from_ptr(mudkit_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn validate_reports_findings() {
    let mut out = ptr::null_mut();
    let doc = corpus("valid/lightbulb.json");
    assert_eq!(
        unsafe { mudkit_validate(doc.as_ptr(), doc.len(), &mut out) },
        MudkitStatus::Ok
    );
    assert_eq!(take(out)["errors"], 0);

    let doc = corpus("faults/bad_version.json");
    assert_eq!(
        unsafe { mudkit_validate(doc.as_ptr(), doc.len(), &mut out) },
        MudkitStatus::Ok
    );
    let report = take(out);
    assert_eq!(report["errors"], 1);
    assert_eq!(report["findings"][0]["severity"], "error");
}

#[test]
fn null_arguments_are_rejected() {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { mudkit_validate(ptr::null(), 5, &mut out) },
        MudkitStatus::NullArgument
    );
    assert!(last_error().contains("data"));
    let doc = b"{}";
    assert_eq!(
        unsafe { mudkit_validate(doc.as_ptr(), doc.len(), ptr::null_mut()) },
        MudkitStatus::NullArgument
    );
    assert_eq!(
        unsafe { mudkit_workspace_graph(ptr::null_mut(), &mut out) },
        MudkitStatus::NullArgument
    );
    assert_eq!(unsafe { mudkit_workspace_revision(ptr::null()) }, 0);
    unsafe { mudkit_workspace_free(ptr::null_mut()) };
    unsafe { mudkit_string_free(ptr::null_mut()) };
}

#[test]
fn success_clears_last_error() {
    let ws = Handle::new();
    assert_eq!(
        unsafe { mudkit_workspace_remove_file(ws.0, 9) },
        MudkitStatus::NotFound
    );
    assert!(last_error().contains('9'));
    ws.call(mudkit_workspace_graph);
    assert!(mudkit_last_error().is_null());
}

#[test]
fn workspace_lifecycle() {
    let ws = scenario();
    assert_eq!(unsafe { mudkit_workspace_revision(ws.0) }, 3);

    let graph = ws.call(mudkit_workspace_graph);
    assert_eq!(graph["revision"], 3);
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 4);
    assert_eq!(graph["edges"].as_array().unwrap().len(), 3);

    let (status, id, findings) = ws.add(&corpus("faults/unused_acl.json"));
    assert_eq!(status, MudkitStatus::Ok);
    assert_eq!(id, 3);
    assert_eq!(findings[0]["code"], "unused-acl");
    let all = ws.call(mudkit_workspace_findings);
    assert!(all["findings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|f| f["file"] == 3));

    assert_eq!(
        unsafe { mudkit_workspace_remove_file(ws.0, 1) },
        MudkitStatus::Ok
    );
    assert_eq!(
        ws.call(mudkit_workspace_graph)["edges"],
        serde_json::json!([])
    );
}

#[test]
fn non_utf8_upload_is_refused() {
    let ws = Handle::new();
    let (status, _, _) = ws.add(&[0xff, 0xfe, b'{']);
    assert_eq!(status, MudkitStatus::InvalidUtf8);
    assert_eq!(unsafe { mudkit_workspace_revision(ws.0) }, 0);
}

#[test]
fn context_errors_map_to_statuses() {
    let ws = Handle::new();
    assert_eq!(ws.set_context(b"{not json"), MudkitStatus::InvalidInput);
    let dangling = br#"{"devices": [{"id": "A", "mud_url": "https://x.example/a"}], "my_controller_bindings": {"A": ["Z"]}}"#;
    assert_eq!(ws.set_context(dangling), MudkitStatus::Conflict);
    assert!(last_error().contains("\"Z\""));
    assert_eq!(unsafe { mudkit_workspace_revision(ws.0) }, 0);
    assert_eq!(
        unsafe { mudkit_workspace_set_context(ws.0, ptr::null()) },
        MudkitStatus::Ok
    );
}

#[test]
fn queries_and_summaries() {
    let ws = scenario();
    let q = |port: u16| {
        format!(
            r#"{{"device": "A", "direction": "from-device", "remote": {{"kind": "domain", "value": "cloud.example.com"}},
                "protocol": 6, "src_port": 50000, "dst_port": {port}}}"#
        )
    };
    let (s, yes) = ws.query(&q(443));
    assert_eq!(s, MudkitStatus::Ok);
    assert_eq!(yes["decision"], "accept");
    assert_eq!(yes["refs"][0]["ace"], "cloud-frdev");
    assert_eq!(ws.query(&q(444)).1["decision"], "no_match");
    assert_eq!(ws.query("[]").0, MudkitStatus::InvalidInput);
    let (s, _) = ws.query(&q(443).replace("\"A\"", "\"ghost\""));
    assert_eq!(s, MudkitStatus::NotFound);

    let device = CString::new("A").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { mudkit_workspace_summary(ws.0, device.as_ptr(), &mut out) },
        MudkitStatus::Ok
    );
    assert_eq!(
        take(out)["allowed_local_peers"],
        serde_json::json!(["B", "C"])
    );
    let ghost = CString::new("ghost").unwrap();
    assert_eq!(
        unsafe { mudkit_workspace_summary(ws.0, ghost.as_ptr(), &mut out) },
        MudkitStatus::NotFound
    );
}
