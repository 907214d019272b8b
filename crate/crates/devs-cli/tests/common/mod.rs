//! Shared harness for integration tests: spawns real node processes on
//! ephemeral ports and talks to them over the wire.
//!
//! Each test target uses its own slice of these helpers.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::time::Duration;

use devs_cli::wire;
use devs_core::proto::{Envelope, SimulatorKey};
use devs_core::Time;

/// A node process killed on drop. Port 0 keeps parallel tests apart.
pub struct NodeProc {
    child: Child,
    pub addr: String,
}

impl Drop for NodeProc {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn spawn_node() -> NodeProc {
    spawn_node_with_args(&[])
}

pub fn spawn_node_with_args(extra: &[&str]) -> NodeProc {
    let mut child = Command::new(env!("CARGO_BIN_EXE_devs-node"))
        .args(["--listen", "127.0.0.1:0", "--idle-timeout-secs", "300"])
        .args(extra)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .expect("spawn devs-node");
    let stdout = child.stdout.take().expect("stdout piped");
    let mut reader = BufReader::new(stdout);
    let mut line = String::new();
    reader.read_line(&mut line).expect("node announces itself");
    let addr = line
        .trim()
        .strip_prefix("devs-node listening on ")
        .unwrap_or_else(|| panic!("unexpected announce line {line:?}"))
        .to_string();
    // Keep the pipe drained so the child can never block on stdout.
    std::thread::spawn(move || {
        let mut sink = String::new();
        while matches!(reader.read_line(&mut sink), Ok(n) if n > 0) {
            sink.clear();
        }
    });
    NodeProc { child, addr }
}

pub fn spawn_cluster(n: usize) -> Vec<NodeProc> {
    (0..n).map(|_| spawn_node()).collect()
}

pub fn addrs(nodes: &[NodeProc]) -> Vec<String> {
    nodes.iter().map(|n| n.addr.clone()).collect()
}

pub fn agent() -> ureq::Agent {
    wire::agent(Duration::from_secs(60))
}

/// POST that must succeed; returns the `ok` payload.
pub fn post_ok<B: serde::Serialize>(
    agent: &ureq::Agent,
    endpoint: &str,
    path: &str,
    body: &B,
) -> serde_json::Value {
    wire::post(agent, endpoint, path, body)
        .unwrap_or_else(|e| panic!("POST {endpoint}{path}: {e}"))
}

/// POST that must fail remotely; returns the error code.
pub fn post_err<B: serde::Serialize>(
    agent: &ureq::Agent,
    endpoint: &str,
    path: &str,
    body: &B,
) -> String {
    match wire::post(agent, endpoint, path, body) {
        Ok(ok) => panic!("POST {endpoint}{path} unexpectedly succeeded: {ok}"),
        Err(err) => err
            .code()
            .unwrap_or_else(|| panic!("POST {endpoint}{path} failed without a code: {err}"))
            .to_string(),
    }
}

pub fn envelope(service: &str) -> Envelope {
    Envelope::new(service, &wire::request_id())
}

pub fn key_envelope(service: &str, name: &str, client: &str) -> Envelope {
    envelope(service).with_key(SimulatorKey::new(name, client).expect("valid key"))
}

pub fn timed_envelope(service: &str, name: &str, client: &str, t: f64) -> Envelope {
    key_envelope(service, name, client).with_time(Time::finite(t).expect("finite time"))
}

pub fn manifest_path(file_name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(file_name)
}

/// Uploads a manifest file to every server (chained) and compiles it on the
/// head; returns the namespace.
pub fn upload_and_compile(
    agent: &ureq::Agent,
    servers: &[String],
    manifest_file: &str,
) -> String {
    let bytes = std::fs::read(manifest_path(manifest_file)).expect("manifest readable");
    let manifest: serde_json::Value = serde_json::from_slice(&bytes).expect("manifest is JSON");
    let package = manifest["package"].as_str().expect("package name").to_string();
    let ok = post_ok(
        agent,
        &servers[0],
        "/main/upload",
        &serde_json::json!({
            "fileName": manifest_file,
            "manifest": manifest,
            "forwardTo": &servers[1..],
        }),
    );
    assert_eq!(
        ok["forwarded"].as_u64(),
        Some((servers.len() - 1) as u64),
        "upload reaches all peers"
    );
    let ok = post_ok(
        agent,
        &servers[0],
        "/main/compile",
        &serde_json::json!({ "package": package, "forwardTo": &servers[1..] }),
    );
    ok["namespace"].as_str().expect("namespace").to_string()
}
