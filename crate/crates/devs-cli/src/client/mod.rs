//! The run workflow behind `devs-client run`.
//!
//! One verb does the whole session against a static server list: upload the
//! model package to every node (chained forwarding), compile it on each,
//! start the run on the first server as head node, then collect every
//! node's console so the report carries both the head's global trace and
//! the per-node projections.

use std::collections::BTreeMap;
use std::io::Write;
use std::net::UdpSocket;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use serde_json::json;

use devs_core::proto::{
    parse_manifest, round_robin_assign, AssignmentMap, Envelope, MANIFEST_EXTENSION,
};
use devs_core::sim::RtSummary;
use devs_core::Time;

use crate::node::SimulateResponse;
use crate::wire;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Centralized,
    Rt,
}

impl RunMode {
    fn label(self) -> &'static str {
        match self {
            RunMode::Centralized => "centralized",
            RunMode::Rt => "rt",
        }
    }
}

#[derive(Debug, Clone)]
pub enum AssignChoice {
    /// Round robin, planned by the head node and cross-checked locally.
    Auto,
    /// Explicit component-to-server map, read from a JSON file.
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub servers_file: PathBuf,
    pub model_file: PathBuf,
    pub assign: AssignChoice,
    pub mode: RunMode,
    pub iterations: Option<u64>,
    pub end_time: Option<f64>,
    pub observe: Option<f64>,
    pub timescale: f64,
    pub out: PathBuf,
    pub stable_output: bool,
    pub client_addr: Option<String>,
}

/// Everything a run produced, written to `--out` as pretty JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulationReport {
    pub mode: String,
    pub model: String,
    pub package: String,
    pub version: u32,
    pub namespace: String,
    pub client: String,
    pub servers: Vec<String>,
    pub assignment: AssignmentMap,
    pub iterations: u64,
    pub next_time: Time,
    pub relayed: u64,
    pub trace: Vec<String>,
    pub per_node_output: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<BTreeMap<String, RtSummary>>,
    pub completed: bool,
}

/// Reads a server list: one `host:port` per line, blank lines and `#`
/// comments skipped.
pub fn parse_servers(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// The address this client is reachable (or at least routable) from, used
/// as the client part of simulator keys. Detection opens a UDP socket
/// toward the first server; nothing is sent.
fn detect_client_addr(first_server: &str) -> String {
    let detect = || -> std::io::Result<String> {
        let socket = UdpSocket::bind("0.0.0.0:0")?;
        socket.connect(first_server)?;
        Ok(socket.local_addr()?.ip().to_string())
    };
    detect().unwrap_or_else(|_| "client".to_string())
}

/// Rewrites addresses out of a report so two runs against different ports
/// compare byte-for-byte: each server becomes `server-<index>` (file
/// order), the client address becomes `client`. Applied to every string in
/// the JSON tree, object keys included; longer originals are replaced
/// first so one address being a substring of another cannot corrupt it.
pub fn stabilize(value: &mut serde_json::Value, servers: &[String], client: &str) {
    let mut substitutions: Vec<(String, String)> = servers
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), format!("server-{i}")))
        .collect();
    substitutions.push((client.to_string(), "client".to_string()));
    substitutions.sort_by_key(|(from, _)| std::cmp::Reverse(from.len()));

    fn rewrite(s: &str, substitutions: &[(String, String)]) -> String {
        let mut out = s.to_string();
        for (from, to) in substitutions {
            out = out.replace(from, to);
        }
        out
    }

    fn walk(value: &mut serde_json::Value, substitutions: &[(String, String)]) {
        match value {
            serde_json::Value::String(s) => *s = rewrite(s, substitutions),
            serde_json::Value::Array(items) => {
                for item in items {
                    walk(item, substitutions);
                }
            }
            serde_json::Value::Object(map) => {
                let entries: Vec<(String, serde_json::Value)> = std::mem::take(map)
                    .into_iter()
                    .map(|(key, mut item)| {
                        walk(&mut item, substitutions);
                        (rewrite(&key, substitutions), item)
                    })
                    .collect();
                map.extend(entries);
            }
            _ => {}
        }
    }

    walk(value, &substitutions);
}

fn read_assignment(path: &Path) -> anyhow::Result<AssignmentMap> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading assignment file {}", path.display()))?;
    let map: BTreeMap<String, String> =
        serde_json::from_str(&text).context("assignment file must be a JSON object")?;
    Ok(AssignmentMap(map))
}

pub fn run(config: &RunConfig) -> anyhow::Result<SimulationReport> {
    let servers_text = std::fs::read_to_string(&config.servers_file)
        .with_context(|| format!("reading servers file {}", config.servers_file.display()))?;
    let servers = parse_servers(&servers_text);
    if servers.is_empty() {
        bail!("servers file lists no servers");
    }
    let head = servers[0].clone();

    let file_name = config
        .model_file
        .file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| anyhow::anyhow!("model path has no file name"))?;
    if !file_name.ends_with(MANIFEST_EXTENSION) {
        bail!("model file must be a {MANIFEST_EXTENSION} file");
    }
    let manifest_bytes = std::fs::read(&config.model_file)
        .with_context(|| format!("reading model file {}", config.model_file.display()))?;
    let manifest = parse_manifest(&manifest_bytes).context("model file does not parse")?;
    let manifest_value: serde_json::Value =
        serde_json::from_slice(&manifest_bytes).context("model file is not JSON")?;
    let component_names = manifest.top_component_names();

    let client = config
        .client_addr
        .clone()
        .unwrap_or_else(|| detect_client_addr(&head));

    let agent = wire::agent(Duration::from_secs(120));

    println!("[1/5] uploading {file_name} to {} server(s)", servers.len());
    let upload = wire::post(
        &agent,
        &head,
        "/main/upload",
        &json!({
            "fileName": file_name,
            "manifest": manifest_value,
            "forwardTo": &servers[1..],
        }),
    )?;
    let forwarded = upload.get("forwarded").and_then(|f| f.as_u64()).unwrap_or(0);
    if forwarded != (servers.len() - 1) as u64 {
        bail!(
            "upload reached {} of {} peer servers",
            forwarded,
            servers.len() - 1
        );
    }
    let package = upload
        .get("package")
        .and_then(|p| p.as_str())
        .unwrap_or(&manifest.package)
        .to_string();
    let version = upload.get("version").and_then(|v| v.as_u64()).unwrap_or(1) as u32;

    println!("[2/5] compiling package {package}");
    let compile = wire::post(
        &agent,
        &head,
        "/main/compile",
        &json!({ "package": package, "forwardTo": &servers[1..] }),
    )?;
    let namespace = compile
        .get("namespace")
        .and_then(|n| n.as_str())
        .ok_or_else(|| anyhow::anyhow!("compile response lacks namespace"))?
        .to_string();
    let top_components: Vec<String> = compile
        .get("topComponents")
        .cloned()
        .map(serde_json::from_value)
        .transpose()?
        .unwrap_or_default();
    if top_components != component_names {
        bail!(
            "server compiled components {:?}, manifest lists {:?}",
            top_components,
            component_names
        );
    }

    println!("[3/5] planning assignment for {} component(s)", component_names.len());
    // Planned locally either way: auto for the cross-check against the
    // head's answer, explicit because the head needs it sent along.
    let (path_suffix, explicit, planned) = match &config.assign {
        AssignChoice::Auto => {
            let planned = round_robin_assign(&component_names, &servers)?;
            (String::new(), None, planned)
        }
        AssignChoice::File(path) => {
            let assignment = read_assignment(path)?;
            assignment.ensure_total(&component_names)?;
            for (component, endpoint) in assignment.iter() {
                if !servers.iter().any(|s| s == endpoint) {
                    bail!("{component} assigned to {endpoint}, which is not in the servers file");
                }
            }
            (
                "Assoc".to_string(),
                Some(assignment.clone()),
                assignment,
            )
        }
    };

    let (path, run_agent) = match config.mode {
        RunMode::Centralized => {
            if config.iterations.is_none() && config.end_time.is_none() {
                bail!("centralized mode needs --iterations or --end-time");
            }
            (
                format!("/main/simulate{path_suffix}"),
                wire::agent(Duration::from_secs(600)),
            )
        }
        RunMode::Rt => {
            let observe = config.observe.ok_or_else(|| {
                anyhow::anyhow!("rt mode needs --observe")
            })?;
            let wall = Duration::from_secs_f64(observe * config.timescale)
                + Duration::from_secs(60);
            (format!("/main/simulate{path_suffix}RT"), wire::agent(wall))
        }
    };

    let mut body = json!({
        "namespace": namespace,
        "servers": servers,
        "client": client,
        "timescale": config.timescale,
    });
    if let Some(assignment) = &explicit {
        body["assignment"] = serde_json::to_value(assignment)?;
    }
    if let Some(iterations) = config.iterations {
        body["iterations"] = json!(iterations);
    }
    if let Some(end_time) = config.end_time {
        body["endTime"] = json!(end_time);
    }
    if let Some(observe) = config.observe {
        body["observe"] = json!(observe);
    }

    println!("[4/5] running {} simulation on head {head}", config.mode.label());
    let response: SimulateResponse = wire::post_typed(&run_agent, &head, &path, &body)?;
    if matches!(config.assign, AssignChoice::Auto) && response.assignment != planned {
        bail!(
            "head planned a different assignment than this client: {:?} vs {:?}",
            response.assignment,
            planned
        );
    }

    println!("[5/5] fetching per-node logs");
    let mut per_node_output = BTreeMap::new();
    for server in &servers {
        let envelope = Envelope::new("sim.getConsole", &wire::request_id())
            .with_body(json!({ "client": client }));
        let ok = wire::post(&agent, server, "/sim/getConsole", &envelope)?;
        let lines: Vec<String> = ok
            .get("lines")
            .cloned()
            .map(serde_json::from_value)
            .transpose()?
            .unwrap_or_default();
        per_node_output.insert(server.clone(), lines);
    }

    let report = SimulationReport {
        mode: config.mode.label().to_string(),
        model: file_name,
        package,
        version,
        namespace,
        client: client.clone(),
        servers: servers.clone(),
        assignment: response.assignment,
        iterations: response.iterations,
        next_time: response.next_time,
        relayed: response.relayed,
        trace: response.trace,
        per_node_output,
        summaries: response.summaries,
        completed: true,
    };

    let mut value = serde_json::to_value(&report)?;
    if config.stable_output {
        stabilize(&mut value, &servers, &client);
    }
    let mut file = std::fs::File::create(&config.out)
        .with_context(|| format!("creating {}", config.out.display()))?;
    serde_json::to_writer_pretty(&mut file, &value)?;
    writeln!(file)?;

    println!(
        "run complete: {} iterations, next event at {}, {} message(s) relayed",
        report.iterations, report.next_time, report.relayed
    );
    for line in &report.trace {
        println!("{line}");
    }
    println!("report written to {}", config.out.display());

    Ok(report)
}
