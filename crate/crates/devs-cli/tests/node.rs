//! Endpoint-level tests against real node processes.

mod common;

use common::*;
use serde_json::json;

use devs_core::{ComponentModel, Params, Value};

fn generator_model() -> serde_json::Value {
    let mut params = Params::new();
    params.insert("period".to_string(), Value::Real(1.0));
    serde_json::to_value(ComponentModel::Atomic {
        kind: "ef.generator".to_string(),
        params,
    })
    .unwrap()
}

#[test]
fn upload_forwards_down_the_chain_and_versions_bump() {
    let nodes = spawn_cluster(3);
    let servers = addrs(&nodes);
    let agent = agent();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(manifest_path("ef-pipeline.devs.json")).unwrap())
            .unwrap();

    let body = json!({
        "fileName": "ef-pipeline.devs.json",
        "manifest": manifest,
        "forwardTo": &servers[1..],
    });
    let ok = post_ok(&agent, &servers[0], "/main/upload", &body);
    assert_eq!(ok["forwarded"].as_u64(), Some(2));
    assert_eq!(ok["package"].as_str(), Some("ef-pipeline"));
    assert_eq!(ok["version"].as_u64(), Some(1));

    // Every node in the chain stored it.
    for server in &servers {
        let diag = post_ok(&agent, server, "/sim/diagnostics", &envelope("sim.diagnostics"));
        assert_eq!(diag["packages"]["ef-pipeline"]["version"].as_u64(), Some(1));
        assert_eq!(
            diag["packages"]["ef-pipeline"]["fileName"].as_str(),
            Some("ef-pipeline.devs.json")
        );
    }

    // Re-upload bumps the version everywhere.
    let ok = post_ok(&agent, &servers[0], "/main/upload", &body);
    assert_eq!(ok["version"].as_u64(), Some(2));
    for server in &servers {
        let diag = post_ok(&agent, server, "/sim/diagnostics", &envelope("sim.diagnostics"));
        assert_eq!(diag["packages"]["ef-pipeline"]["version"].as_u64(), Some(2));
    }
}

#[test]
fn upload_rejects_bad_names_and_manifests() {
    let node = spawn_node();
    let agent = agent();

    let code = post_err(
        &agent,
        &node.addr,
        "/main/upload",
        &json!({ "fileName": "model.json", "manifest": {}, "forwardTo": [] }),
    );
    assert_eq!(code, "badFileName");

    let code = post_err(
        &agent,
        &node.addr,
        "/main/upload",
        &json!({
            "fileName": "broken.devs.json",
            "manifest": { "formatVersion": 1, "package": "broken" },
            "forwardTo": [],
        }),
    );
    assert_eq!(code, "badManifest");

    let code = post_err(
        &agent,
        &node.addr,
        "/main/upload",
        &json!({
            "fileName": "future.devs.json",
            "manifest": { "formatVersion": 99, "package": "future", "topModel": "X", "coupled": [] },
            "forwardTo": [],
        }),
    );
    assert_eq!(code, "unsupportedVersion");
}

#[test]
fn compile_requires_an_uploaded_package() {
    let node = spawn_node();
    let agent = agent();
    let code = post_err(
        &agent,
        &node.addr,
        "/main/compile",
        &json!({ "package": "missing", "forwardTo": [] }),
    );
    assert_eq!(code, "unknownPackage");
}

#[test]
fn compile_namespaces_are_distinct_and_list_components() {
    let node = spawn_node();
    let servers = vec![node.addr.clone()];
    let agent = agent();
    let first = upload_and_compile(&agent, &servers, "ef-pipeline.devs.json");
    assert!(first.starts_with("ef-pipeline#v1#"), "namespace {first}");

    let second = post_ok(
        &agent,
        &node.addr,
        "/main/compile",
        &json!({ "package": "ef-pipeline", "forwardTo": [] }),
    );
    let second = second["namespace"].as_str().unwrap();
    assert_ne!(first, second, "each compile gets its own namespace");

    let ok = post_ok(
        &agent,
        &node.addr,
        "/main/topComponents",
        &json!({ "namespace": second }),
    );
    let components: Vec<String> = serde_json::from_value(ok["components"].clone()).unwrap();
    assert_eq!(components, ["Generator", "Processor", "Transducer"]);

    // The package form answers from the manifest, same order.
    let ok = post_ok(
        &agent,
        &node.addr,
        "/main/topComponents",
        &json!({ "package": "ef-pipeline" }),
    );
    let from_package: Vec<String> = serde_json::from_value(ok["components"].clone()).unwrap();
    assert_eq!(from_package, components);
}

#[test]
fn simulator_lifecycle_and_error_codes() {
    let node = spawn_node();
    let agent = agent();
    let model = generator_model();

    let create = key_envelope("sim.newSimulator", "Gen", "cli").with_body(json!({ "model": model }));
    post_ok(&agent, &node.addr, "/sim/newSimulator", &create);
    let code = post_err(&agent, &node.addr, "/sim/newSimulator", &create);
    assert_eq!(code, "alreadyExists");

    let code = post_err(
        &agent,
        &node.addr,
        "/sim/newSimulator",
        &key_envelope("sim.newSimulator", "Bad", "cli").with_body(json!({
            "model": { "atomic": { "kind": "no.such.kind" } },
        })),
    );
    assert_eq!(code, "invalidModel");

    post_ok(
        &agent,
        &node.addr,
        "/sim/initialize",
        &timed_envelope("sim.initialize", "Gen", "cli", 0.0),
    );
    let tn = post_ok(&agent, &node.addr, "/sim/getTN", &key_envelope("sim.getTN", "Gen", "cli"));
    assert_eq!(tn["tN"].as_f64(), Some(1.0));

    // The simulator protocol rejects time running backwards or past tN.
    let code = post_err(
        &agent,
        &node.addr,
        "/sim/deltfcn",
        &timed_envelope("sim.deltfcn", "Gen", "cli", 2.0),
    );
    assert_eq!(code, "protocolViolation");

    post_ok(&agent, &node.addr, "/sim/exit", &key_envelope("sim.exit", "Gen", "cli"));
    let code = post_err(&agent, &node.addr, "/sim/exit", &key_envelope("sim.exit", "Gen", "cli"));
    assert_eq!(code, "notFound");
    let code = post_err(&agent, &node.addr, "/sim/getTN", &key_envelope("sim.getTN", "Gen", "cli"));
    assert_eq!(code, "notFound");
}

#[test]
fn console_lines_are_per_client_and_reset_by_initialize() {
    let node = spawn_node();
    let agent = agent();
    let model = generator_model();

    for client in ["alice", "bob"] {
        post_ok(
            &agent,
            &node.addr,
            "/sim/newSimulator",
            &key_envelope("sim.newSimulator", "Gen", client).with_body(json!({ "model": model })),
        );
        post_ok(
            &agent,
            &node.addr,
            "/sim/initialize",
            &timed_envelope("sim.initialize", "Gen", client, 0.0),
        );
    }

    // Drive one full cycle for alice only.
    post_ok(&agent, &node.addr, "/sim/lambda", &timed_envelope("sim.lambda", "Gen", "alice", 1.0));
    post_ok(&agent, &node.addr, "/sim/deltfcn", &timed_envelope("sim.deltfcn", "Gen", "alice", 1.0));

    let console = |client: &str| -> Vec<String> {
        let ok = post_ok(
            &agent,
            &node.addr,
            "/sim/getConsole",
            &envelope("sim.getConsole").with_body(json!({ "client": client })),
        );
        serde_json::from_value(ok["lines"].clone()).unwrap()
    };
    assert_eq!(
        console("alice"),
        [
            "Gen sending message: << port: out value: Job1 >>",
            "State at: Gen is: active",
        ]
    );
    assert_eq!(console("bob"), Vec::<String>::new());

    // A new run (initialize) starts a fresh console for that client only.
    post_ok(
        &agent,
        &node.addr,
        "/sim/initialize",
        &timed_envelope("sim.initialize", "Gen", "alice", 0.0),
    );
    assert_eq!(console("alice"), Vec::<String>::new());
}

#[test]
fn unknown_endpoints_and_methods_are_reported() {
    let node = spawn_node();
    let agent = agent();
    let code = post_err(&agent, &node.addr, "/main/nope", &json!({}));
    assert_eq!(code, "unknownEndpoint");
    let code = post_err(&agent, &node.addr, "/sim/nope", &envelope("sim.nope"));
    assert_eq!(code, "unknownEndpoint");

    let response = ureq::AgentBuilder::new()
        .build()
        .get(&format!("http://{}/sim/getIp", node.addr))
        .call()
        .expect("GET answers");
    let text = response.into_string().expect("readable body");
    let body: serde_json::Value = serde_json::from_str(&text).expect("JSON body");
    assert_eq!(body["error"]["code"].as_str(), Some("methodNotAllowed"));
}

#[test]
fn get_ip_reports_the_advertised_address() {
    let node = spawn_node_with_args(&["--advertise", "198.51.100.7:9000"]);
    let agent = agent();
    let ok = post_ok(&agent, &node.addr, "/sim/getIp", &envelope("sim.getIp"));
    assert_eq!(ok["address"].as_str(), Some("198.51.100.7:9000"));

    let plain = spawn_node();
    let ok = post_ok(&agent, &plain.addr, "/sim/getIp", &envelope("sim.getIp"));
    assert_eq!(ok["address"].as_str(), Some(plain.addr.as_str()));
}

#[test]
fn malformed_bodies_and_keys_are_rejected() {
    let node = spawn_node();
    let agent = agent();

    let code = post_err(&agent, &node.addr, "/main/simulate", &json!({ "bogus": true }));
    assert_eq!(code, "badRequest");

    // Envelope keys must be name@client; the serde error surfaces as a
    // bad request.
    let code = post_err(
        &agent,
        &node.addr,
        "/sim/getTN",
        &json!({ "service": "sim.getTN", "key": "no-at-sign", "requestId": "r1" }),
    );
    assert_eq!(code, "badRequest");

    // A structurally valid envelope without the required key.
    let code = post_err(&agent, &node.addr, "/sim/getTN", &envelope("sim.getTN"));
    assert_eq!(code, "badRequest");
}

#[test]
fn simulate_checks_servers_and_assignment() {
    let node = spawn_node();
    let servers = vec![node.addr.clone()];
    let agent = agent();
    let namespace = upload_and_compile(&agent, &servers, "ef-pipeline.devs.json");

    let code = post_err(
        &agent,
        &node.addr,
        "/main/simulate",
        &json!({ "namespace": "nope", "servers": servers, "client": "c", "iterations": 1 }),
    );
    assert_eq!(code, "unknownNamespace");

    // No bound at all.
    let code = post_err(
        &agent,
        &node.addr,
        "/main/simulate",
        &json!({ "namespace": namespace, "servers": servers, "client": "c" }),
    );
    assert_eq!(code, "badRequest");

    // Assignment naming a server outside the run.
    let code = post_err(
        &agent,
        &node.addr,
        "/main/simulateAssoc",
        &json!({
            "namespace": namespace,
            "servers": servers,
            "client": "c",
            "iterations": 1,
            "assignment": {
                "Generator": servers[0],
                "Processor": servers[0],
                "Transducer": "127.0.0.1:1",
            },
        }),
    );
    assert_eq!(code, "badAssignment");

    // Assignment missing a component.
    let code = post_err(
        &agent,
        &node.addr,
        "/main/simulateAssoc",
        &json!({
            "namespace": namespace,
            "servers": servers,
            "client": "c",
            "iterations": 1,
            "assignment": { "Generator": servers[0] },
        }),
    );
    assert_eq!(code, "badAssignment");
}

#[test]
fn centralized_run_without_retain_leaves_no_simulators() {
    let node = spawn_node();
    let servers = vec![node.addr.clone()];
    let agent = agent();
    let namespace = upload_and_compile(&agent, &servers, "ef-pipeline.devs.json");

    let ok = post_ok(
        &agent,
        &node.addr,
        "/main/simulate",
        &json!({ "namespace": namespace, "servers": servers, "client": "c", "iterations": 4 }),
    );
    assert_eq!(ok["iterations"].as_u64(), Some(4));
    assert_eq!(ok["trace"].as_array().map(Vec::len), Some(10));

    let diag = post_ok(&agent, &node.addr, "/sim/diagnostics", &envelope("sim.diagnostics"));
    assert_eq!(diag["keys"].as_array().map(Vec::len), Some(0));
}

#[test]
fn log_dir_mirrors_the_console() {
    let dir = std::env::temp_dir().join(format!("devs-logdir-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    let node = spawn_node_with_args(&["--log-dir", dir.to_str().unwrap()]);
    let agent = agent();
    let model = generator_model();

    post_ok(
        &agent,
        &node.addr,
        "/sim/newSimulator",
        &key_envelope("sim.newSimulator", "Gen", "10.0.0.9").with_body(json!({ "model": model })),
    );
    post_ok(
        &agent,
        &node.addr,
        "/sim/initialize",
        &timed_envelope("sim.initialize", "Gen", "10.0.0.9", 0.0),
    );
    post_ok(&agent, &node.addr, "/sim/lambda", &timed_envelope("sim.lambda", "Gen", "10.0.0.9", 1.0));
    post_ok(&agent, &node.addr, "/sim/deltfcn", &timed_envelope("sim.deltfcn", "Gen", "10.0.0.9", 1.0));

    let logged = std::fs::read_to_string(dir.join("10.0.0.9.log")).expect("log file exists");
    assert_eq!(
        logged,
        "Gen sending message: << port: out value: Job1 >>\nState at: Gen is: active\n"
    );
    let _ = std::fs::remove_dir_all(&dir);
}
