// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{read_corpus, TestServer};
use mudkit::service::ServiceConfig;
use serde_json::{json, Value};

fn scenario(server: &TestServer) -> (u64, u64) {
    let a = server
        .send("POST", "/api/mudfiles", &read_corpus("scenario/a.json"))
        .json();
    let b = server
        .send("POST", "/api/mudfiles", &read_corpus("scenario/b.json"))
        .json();
    let r = server.send("PUT", "/api/context", &read_corpus("scenario/context.json"));
    assert_eq!(r.status, 200);
    (a["id"].as_u64().unwrap(), b["id"].as_u64().unwrap())
}

#[test]
fn health() {
    let server = TestServer::start(Default::default());
    let r = server.get("/api/health");
    assert_eq!(r.status, 200);
    assert_eq!(r.json(), json!({"status": "ok"}));
}

#[test]
fn uploads_get_fresh_ids_even_with_errors() {
    let server = TestServer::start(Default::default());
    let ok = server.send("POST", "/api/mudfiles", &read_corpus("valid/tv.json"));
    assert_eq!(ok.status, 201);
    let ok = ok.json();
    assert_eq!(ok["findings"], json!([]));

    let bad = server.send(
        "POST",
        "/api/mudfiles",
        &read_corpus("faults/bad_version.json"),
    );
    assert_eq!(bad.status, 201);
    let bad = bad.json();
    assert_eq!(bad["findings"].as_array().unwrap().len(), 1);
    assert_eq!(bad["findings"][0]["severity"], "error");
    assert_ne!(ok["id"], bad["id"]);

    let list = server.get("/api/mudfiles").json();
    assert_eq!(list["files"].as_array().unwrap().len(), 2);
    assert_eq!(list["files"][1]["errors"], 1);

    let graph = server.get("/api/graph").json();
    let devices: Vec<&str> = graph["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["kind"] == "device")
        .map(|n| n["id"].as_str().unwrap())
        .collect();
    assert_eq!(
        devices,
        ["device:tv-55"],
        "files with errors stay out of the merge"
    );
}

#[test]
fn upload_limits() {
    let server = TestServer::start(ServiceConfig {
        max_body: 512,
        ..Default::default()
    });
    let big = read_corpus("valid/camera.json");
    assert!(big.len() > 512);
    assert_eq!(server.send("POST", "/api/mudfiles", &big).status, 413);
    assert_eq!(
        server
            .send("POST", "/api/mudfiles", &[0xff, 0xfe, b'{'])
            .status,
        400
    );
    assert_eq!(server.get("/api/mudfiles").json()["revision"], 0);
}

#[test]
fn file_details_and_delete() {
    let server = TestServer::start(Default::default());
    let (a, _) = scenario(&server);
    let detail = server.get(&format!("/api/mudfiles/{a}")).json();
    assert_eq!(detail["label"], "a");
    assert!(detail["raw"]
        .as_str()
        .unwrap()
        .contains("same-manufacturer"));

    assert_eq!(
        server.get("/api/graph").json()["edges"]
            .as_array()
            .unwrap()
            .len(),
        3
    );
    assert_eq!(
        server
            .send("DELETE", &format!("/api/mudfiles/{a}"), b"")
            .status,
        204
    );
    assert_eq!(
        server
            .send("DELETE", &format!("/api/mudfiles/{a}"), b"")
            .status,
        404
    );
    assert_eq!(server.get(&format!("/api/mudfiles/{a}")).status, 404);
    let graph = server.get("/api/graph").json();
    assert_eq!(graph["edges"], json!([]));
    assert_eq!(graph["nodes"].as_array().unwrap().len(), 3);
}

#[test]
fn context_errors() {
    let server = TestServer::start(Default::default());
    assert_eq!(server.get("/api/context").json()["context"], Value::Null);
    assert_eq!(server.send("PUT", "/api/context", b"{not json").status, 400);
    assert_eq!(
        server
            .send("PUT", "/api/context", br#"{"devices": [], "extra": 1}"#)
            .status,
        400
    );
    let r = server.send(
        "PUT",
        "/api/context",
        br#"{"devices": [{"id": "A", "mud_url": "https://x.example/a"}], "my_controller_bindings": {"A": ["Z"]}}"#,
    );
    assert_eq!(r.status, 409);
    assert!(r.json()["error"].as_str().unwrap().contains("\"Z\""));
    assert_eq!(server.get("/api/context").json()["revision"], 0);

    assert_eq!(
        server
            .send("PUT", "/api/context", &read_corpus("scenario/context.json"))
            .status,
        200
    );
    let ctx = server.get("/api/context").json();
    assert_eq!(ctx["context"]["devices"].as_array().unwrap().len(), 3);
    assert_eq!(ctx["context"]["my_controller_bindings"]["A"], json!(["C"]));
}

#[test]
fn graph_matches_documented_schema() {
    let server = TestServer::start(Default::default());
    scenario(&server);
    let graph = server.get("/api/graph").json();
    let keys = |v: &Value| v.as_object().unwrap().keys().cloned().collect::<Vec<_>>();
    assert_eq!(keys(&graph), ["revision", "nodes", "edges"]);
    for node in graph["nodes"].as_array().unwrap() {
        assert_eq!(keys(node), ["id", "kind", "label"]);
    }
    let edge = graph["edges"]
        .as_array()
        .unwrap()
        .iter()
        .find(|e| e["target"] == "domain:cloud.example.com")
        .unwrap();
    assert_eq!(
        keys(edge),
        [
            "id",
            "source",
            "target",
            "protocol",
            "dst_ports",
            "src_ports",
            "direction_initiated",
            "action",
            "provenance"
        ]
    );
    assert_eq!(edge["source"], "device:A");
    assert_eq!(edge["protocol"], 6);
    assert_eq!(edge["dst_ports"], json!([{"lo": 443, "hi": 443}]));
    assert_eq!(edge["action"], "accept");
    assert_eq!(
        edge["provenance"],
        json!([{"source_file": "https://mfg.example.com/a.json", "acl": "a-v4fr", "ace": "cloud-frdev", "abstraction": "domain-name"}])
    );
}

#[test]
fn flows_between_devices_and_domains() {
    let server = TestServer::start(Default::default());
    scenario(&server);
    assert_eq!(server.get("/api/flows?src=ghost&dst=B").status, 404);
    assert_eq!(
        server.get("/api/flows?src=A&dst=not%20a%20host").status,
        404
    );

    let to_b = server.get("/api/flows?src=A&dst=B").json();
    assert_eq!(to_b["flows"].as_array().unwrap().len(), 1);
    assert_eq!(
        to_b["flows"][0]["remote"],
        json!({"kind": "local-device", "value": "B"})
    );

    let cloud = server.get("/api/flows?src=A&dst=cloud.example.com").json();
    assert_eq!(cloud["flows"][0]["dst_port"], json!({"lo": 443, "hi": 443}));
    assert_eq!(
        server.get("/api/flows?src=B&dst=A").json()["flows"],
        json!([])
    );
}

#[test]
fn what_if_queries() {
    let server = TestServer::start(Default::default());
    scenario(&server);
    let q = |port: u16| {
        server
            .get(&format!(
                "/api/query?device=A&direction=from-device&remote=cloud.example.com&protocol=6&src_port=50000&dst_port={port}"
            ))
            .json()
    };
    let yes = q(443);
    assert_eq!(yes["decision"], "accept");
    assert_eq!(yes["refs"][0]["ace"], "cloud-frdev");
    let no = q(444);
    assert_eq!(no["decision"], "no_match");
    assert_eq!(no["refs"], json!([]));

    let post = server.send(
        "POST",
        "/api/query",
        json!({"device": "A", "direction": "from-device", "remote": {"kind": "device", "value": "C"},
               "protocol": 17, "src_port": 1, "dst_port": 2})
        .to_string()
        .as_bytes(),
    );
    assert_eq!(post.status, 200);
    assert_eq!(post.json()["decision"], "accept");

    let unknown = server
        .get("/api/query?device=ghost&direction=to-device&remote=local&protocol=6&dst_port=1");
    assert_eq!(unknown.status, 404);
    let bad_remote =
        server.get("/api/query?device=A&direction=to-device&remote=%2F%2F&protocol=6&dst_port=1");
    assert_eq!(bad_remote.status, 400);
}

#[test]
fn summary_and_findings() {
    let server = TestServer::start(Default::default());
    scenario(&server);
    let s = server.get("/api/summary/A").json();
    assert_eq!(s["allowed_local_peers"], json!(["B", "C"]));
    assert_eq!(s["allowed_remote_hosts"], json!(["cloud.example.com"]));
    assert_eq!(server.get("/api/summary/ghost").status, 404);

    server.send(
        "POST",
        "/api/mudfiles",
        &read_corpus("faults/unused_acl.json"),
    );
    let findings = server.get("/api/findings").json();
    let list = findings["findings"].as_array().unwrap();
    assert!(list
        .iter()
        .any(|f| f["code"] == "unused-acl" && f["file"] == 3));
    assert!(list
        .iter()
        .any(|f| f["code"] == "unbound-file" && f.get("file").is_none()));
}

#[test]
fn reads_between_mutations_are_byte_identical() {
    let server = TestServer::start(Default::default());
    scenario(&server);
    for path in [
        "/api/graph",
        "/api/findings",
        "/api/mudfiles",
        "/api/summary/A",
    ] {
        let first = server.get(path).body;
        let second = server.get(path).body;
        assert_eq!(first, second, "{path}");
    }
    let before = server.get("/api/graph").json()["revision"]
        .as_u64()
        .unwrap();
    server.send("POST", "/api/mudfiles", &read_corpus("valid/plug.json"));
    assert_eq!(
        server.get("/api/graph").json()["revision"]
            .as_u64()
            .unwrap(),
        before + 1
    );
}

#[test]
fn workspace_persists_across_restarts() {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        workspace_path: Some(dir.path().join("workspace.json")),
        ..Default::default()
    };
    let graph = {
        let server = TestServer::start(config.clone());
        scenario(&server);
        server.get("/api/graph").body
    };
    let server = TestServer::start(config);
    assert_eq!(server.get("/api/graph").body, graph);
    let next = server
        .send("POST", "/api/mudfiles", &read_corpus("valid/hub.json"))
        .json();
    assert_eq!(next["id"], 3);
}

#[test]
fn root_serves_stub_or_static_assets() {
    let server = TestServer::start(Default::default());
    let r = server.get("/");
    assert_eq!(r.status, 200);
    assert!(String::from_utf8_lossy(&r.body).contains("/api"));

    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<h1>ui</h1>").unwrap();
    std::fs::write(dir.path().join("app.js"), "console.log(1)").unwrap();
    let server = TestServer::start(ServiceConfig {
        static_dir: Some(dir.path().to_owned()),
        ..Default::default()
    });
    assert_eq!(server.get("/").body, b"<h1>ui</h1>");
    assert_eq!(server.get("/app.js").body, b"console.log(1)");
    assert_eq!(server.get("/api/health").status, 200);
}

#[test]
fn cors_only_in_dev_mode() {
    let preflight = |server: &TestServer| {
        let raw = "OPTIONS /api/graph HTTP/1.1\r\nHost: x\r\nOrigin: http://localhost:5173\r\nAccess-Control-Request-Method: GET\r\nConnection: close\r\n\r\n";
        use std::io::{Read, Write};
        let mut s = std::net::TcpStream::connect(server.addr).unwrap();
        s.write_all(raw.as_bytes()).unwrap();
        let mut out = String::new();
        s.read_to_string(&mut out).unwrap();
        out.to_ascii_lowercase()
    };
    let plain = TestServer::start(Default::default());
    assert!(!preflight(&plain).contains("access-control-allow-origin"));
    let dev = TestServer::start(ServiceConfig {
        cors_origin: Some("http://localhost:5173".into()),
        ..Default::default()
    });
    assert!(preflight(&dev).contains("access-control-allow-origin: http://localhost:5173"));
}
