//! The node daemon.
//!
//! One process per execution site. It stores uploaded model packages,
//! compiles them into runnable coupled specs, hosts simulators in a key
//! table, and orchestrates runs when addressed as the head node:
//!
//! * `/main/*` is the package and run workflow: `upload` (with chained
//!   forwarding to the remaining nodes), `compile`, `topComponents`, and the
//!   four run starters `simulate`, `simulateAssoc`, `simulateRT`,
//!   `simulateAssocRT` (`Assoc` means the caller supplies the
//!   component-to-server assignment, otherwise round robin);
//! * `/sim/*` is the simulator protocol driven by a head node: lifecycle
//!   (`newSimulator`, `initialize`, `exit`), the cycle operations (`lambda`,
//!   `getOutput`, `deltfcn`, `getTN`, `receiveInput`), real-time control
//!   (`rtInstallRoutes`, `rtStart`, `rtCollect`), and introspection
//!   (`getConsole`, `getIp`, `diagnostics`).
//!
//! Every request gets its own thread, so a handler may call back into its
//! own node (a head node is usually also an execution site). No lock is
//! held across an outbound HTTP call.
//!
//! Centralized runs log send/state lines on the node hosting each
//! simulator, keyed by the requesting client; because the head visits
//! simulators in sorted name order within each cycle phase, a node's console
//! is exactly the projection of the head's trace onto the components it
//! hosts. Real-time runs append the same line formats from the wall-clock
//! loop.

mod remote;

pub use remote::RemoteService;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::{Arc, Mutex, MutexGuard, PoisonError};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use devs_core::models::register_builtins;
use devs_core::proto::{
    parse_manifest, round_robin_assign, AssignmentMap, Envelope, ModelManifest, ProtoError,
    SimulatorKey, MANIFEST_EXTENSION,
};
use devs_core::sim::{
    run_rt, Coordinator, DeltResult, RtArrival, RtConfig, RtDelivery, RtRoute, RtSummary,
    RunBound, SimError, SimulationService, SimulatorHandle,
};
use devs_core::{
    BehaviorRegistry, ComponentModel, CoupledSpec, Time, TranslationRegistry, Value,
};

use crate::wire;

pub struct NodeConfig {
    /// Bind address, e.g. `127.0.0.1:0`.
    pub listen: String,
    /// Address reported to peers and clients when it differs from the bound
    /// one (NAT, container).
    pub advertise: Option<String>,
    /// When set, console lines are also appended to `<client>.log` here.
    pub log_dir: Option<PathBuf>,
    /// Exit after this many seconds without a request.
    pub idle_timeout_secs: Option<u64>,
}

struct StoredPackage {
    file_name: String,
    version: u32,
    manifest: ModelManifest,
}

struct CompiledModel {
    spec: CoupledSpec,
}

pub struct NodeState {
    address: String,
    registry: Arc<BehaviorRegistry>,
    translations: Arc<TranslationRegistry>,
    store: Mutex<BTreeMap<String, StoredPackage>>,
    compiled: Mutex<BTreeMap<String, CompiledModel>>,
    compile_counter: AtomicU64,
    sims: Mutex<BTreeMap<SimulatorKey, SimulatorHandle>>,
    /// Console lines per client address.
    consoles: Mutex<BTreeMap<String, Vec<String>>>,
    /// Arrival channels of simulators currently in a real-time loop.
    rt_senders: Mutex<BTreeMap<SimulatorKey, mpsc::Sender<RtArrival>>>,
    /// Routes installed for the next real-time run, per simulator.
    rt_routes: Mutex<BTreeMap<SimulatorKey, Vec<RtRoute>>>,
    /// Latest real-time run per simulator. An entry appears when the run is
    /// accepted and keeps its summary until the simulator exits, so start
    /// requests are idempotent per epoch and summaries can be re-collected.
    rt_runs: Mutex<BTreeMap<SimulatorKey, RtRun>>,
    /// Outbound agent for upload forwards.
    agent: ureq::Agent,
    /// Outbound agent for peer deliveries inside real-time loops. Short read
    /// timeout: a slow peer must not stall the wall-clock loop for long.
    delivery_agent: ureq::Agent,
    last_request: Mutex<Instant>,
    log_dir: Option<PathBuf>,
}

struct RtRun {
    epoch_millis: u64,
    outcome: RtOutcome,
}

enum RtOutcome {
    Running,
    Done(RtSummary),
    Failed(String),
}

fn lock<T>(mutex: &Mutex<T>) -> MutexGuard<'_, T> {
    mutex.lock().unwrap_or_else(PoisonError::into_inner)
}

/// An application-level failure: stable code plus human-readable message.
#[derive(Debug)]
pub struct Failure {
    pub code: String,
    pub message: String,
}

impl Failure {
    fn new(code: &str, message: impl Into<String>) -> Failure {
        Failure {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl From<SimError> for Failure {
    fn from(err: SimError) -> Failure {
        Failure {
            code: err.code().to_string(),
            message: err.to_string(),
        }
    }
}

impl From<ProtoError> for Failure {
    fn from(err: ProtoError) -> Failure {
        let code = match &err {
            ProtoError::UnsupportedVersion { .. } => "unsupportedVersion",
            ProtoError::Decode { .. } | ProtoError::Schema { .. } => "badManifest",
            ProtoError::MalformedKey { .. } => "badKey",
            ProtoError::NoServers
            | ProtoError::DuplicateComponent(_)
            | ProtoError::MissingComponent(_)
            | ProtoError::UnknownComponent(_) => "badAssignment",
            ProtoError::Encode(_) => "internal",
        };
        Failure::new(code, err.to_string())
    }
}

type HandlerResult = Result<serde_json::Value, Failure>;

impl NodeState {
    fn new(address: String, log_dir: Option<PathBuf>) -> NodeState {
        let mut registry = BehaviorRegistry::new();
        register_builtins(&mut registry);
        NodeState {
            address,
            registry: Arc::new(registry),
            translations: Arc::new(TranslationRegistry::new()),
            store: Mutex::new(BTreeMap::new()),
            compiled: Mutex::new(BTreeMap::new()),
            compile_counter: AtomicU64::new(0),
            sims: Mutex::new(BTreeMap::new()),
            consoles: Mutex::new(BTreeMap::new()),
            rt_senders: Mutex::new(BTreeMap::new()),
            rt_routes: Mutex::new(BTreeMap::new()),
            rt_runs: Mutex::new(BTreeMap::new()),
            agent: wire::agent(Duration::from_secs(60)),
            delivery_agent: wire::agent(Duration::from_secs(5)),
            last_request: Mutex::new(Instant::now()),
            log_dir,
        }
    }

    fn log_line(&self, client: &str, line: String) {
        if let Some(dir) = &self.log_dir {
            let sanitized: String = client
                .chars()
                .map(|c| if c.is_alphanumeric() || ".-_".contains(c) { c } else { '-' })
                .collect();
            if let Ok(mut file) = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(dir.join(format!("{sanitized}.log")))
            {
                let _ = writeln!(file, "{line}");
            }
        }
        lock(&self.consoles)
            .entry(client.to_string())
            .or_default()
            .push(line);
    }
}

/// Binds, announces itself on stdout, and serves until killed (or idle past
/// the configured timeout).
pub fn run(config: NodeConfig) -> anyhow::Result<()> {
    let server = tiny_http::Server::http(&config.listen)
        .map_err(|e| anyhow::anyhow!("binding {}: {e}", config.listen))?;
    let bound = server
        .server_addr()
        .to_ip()
        .ok_or_else(|| anyhow::anyhow!("no ip listener"))?;
    let advertised = config.advertise.unwrap_or_else(|| bound.to_string());

    // Parsed by callers that spawn nodes; flushed because stdout may be a
    // pipe.
    println!("devs-node listening on {bound}");
    std::io::stdout().flush().ok();
    log::info!("advertised address: {advertised}");

    if let Some(dir) = &config.log_dir {
        std::fs::create_dir_all(dir)?;
    }
    let state = Arc::new(NodeState::new(advertised, config.log_dir));

    if let Some(secs) = config.idle_timeout_secs {
        let state = Arc::clone(&state);
        std::thread::spawn(move || loop {
            std::thread::sleep(Duration::from_secs(1));
            if lock(&state.last_request).elapsed() > Duration::from_secs(secs) {
                log::info!("idle for {secs}s; shutting down");
                std::process::exit(0);
            }
        });
    }

    loop {
        let request = server.recv()?;
        *lock(&state.last_request) = Instant::now();
        let state = Arc::clone(&state);
        std::thread::spawn(move || {
            if let Err(err) = handle_request(&state, request) {
                log::warn!("request handling failed: {err}");
            }
        });
    }
}

fn handle_request(
    state: &Arc<NodeState>,
    mut request: tiny_http::Request,
) -> std::io::Result<()> {
    let mut body = String::new();
    request.as_reader().read_to_string(&mut body)?;
    let path = request.url().to_string();
    log::debug!("handling {path}");

    let outcome = if *request.method() == tiny_http::Method::Post {
        dispatch(state, &path, &body)
    } else {
        Err(Failure::new("methodNotAllowed", "use POST"))
    };
    let payload = match outcome {
        Ok(ok) => {
            log::debug!("done {path}");
            json!({ "ok": ok })
        }
        Err(failure) => {
            log::debug!("{path}: {} {}", failure.code, failure.message);
            json!({ "error": { "code": failure.code, "message": failure.message } })
        }
    };
    let response = tiny_http::Response::from_string(payload.to_string()).with_header(
        tiny_http::Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
            .expect("static header"),
    );
    request.respond(response)
}

fn parse<T: serde::de::DeserializeOwned>(body: &str) -> Result<T, Failure> {
    serde_json::from_str(body).map_err(|e| Failure::new("badRequest", e.to_string()))
}

fn parse_value<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T, Failure> {
    serde_json::from_value(value).map_err(|e| Failure::new("badRequest", e.to_string()))
}

fn dispatch(state: &Arc<NodeState>, path: &str, body: &str) -> HandlerResult {
    match path {
        "/main/upload" => upload(state, parse(body)?),
        "/main/compile" => compile(state, parse(body)?),
        "/main/topComponents" => top_components(state, parse(body)?),
        "/main/simulate" => simulate(state, parse(body)?, false, false),
        "/main/simulateAssoc" => simulate(state, parse(body)?, true, false),
        "/main/simulateRT" => simulate(state, parse(body)?, false, true),
        "/main/simulateAssocRT" => simulate(state, parse(body)?, true, true),
        _ if path.starts_with("/sim/") => sim_dispatch(state, path, parse(body)?),
        _ => Err(Failure::new("unknownEndpoint", path)),
    }
}

// ---------------------------------------------------------------- packages

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct UploadRequest {
    file_name: String,
    manifest: serde_json::Value,
    #[serde(default)]
    forward_to: Vec<String>,
}

fn upload(state: &Arc<NodeState>, req: UploadRequest) -> HandlerResult {
    if !req.file_name.ends_with(MANIFEST_EXTENSION) {
        return Err(Failure::new(
            "badFileName",
            format!("model packages are {MANIFEST_EXTENSION} files"),
        ));
    }
    let bytes = serde_json::to_vec(&req.manifest)
        .map_err(|e| Failure::new("badRequest", e.to_string()))?;
    let manifest = parse_manifest(&bytes)?;
    let package = manifest.package.clone();

    let version = {
        let mut store = lock(&state.store);
        let version = store.get(&package).map(|p| p.version + 1).unwrap_or(1);
        store.insert(
            package.clone(),
            StoredPackage {
                file_name: req.file_name.clone(),
                version,
                manifest,
            },
        );
        version
    };
    log::info!("stored package {package} v{version} ({})", req.file_name);

    // Forward down the chain; the first peer passes the rest along.
    let forwarded = match req.forward_to.split_first() {
        None => 0,
        Some((next, rest)) => {
            let body = json!({
                "fileName": req.file_name,
                "manifest": req.manifest,
                "forwardTo": rest,
            });
            let ok = wire::post(&state.agent, next, "/main/upload", &body)
                .map_err(|e| Failure::new("forwardFailed", e.to_string()))?;
            1 + ok.get("forwarded").and_then(|f| f.as_u64()).unwrap_or(0)
        }
    };

    Ok(json!({ "package": package, "version": version, "forwarded": forwarded }))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct CompileRequest {
    package: String,
    #[serde(default)]
    forward_to: Vec<String>,
}

fn compile(state: &Arc<NodeState>, req: CompileRequest) -> HandlerResult {
    let (version, spec) = {
        let store = lock(&state.store);
        let stored = store.get(&req.package).ok_or_else(|| {
            Failure::new("unknownPackage", format!("package {:?} not uploaded", req.package))
        })?;
        (stored.version, stored.manifest.to_coupled_spec()?)
    };

    let violations = devs_core::validate_coupled(&spec, &state.registry);
    if !violations.is_empty() {
        return Err(Failure::new(
            "invalidModel",
            devs_core::coupled::join_violations(&violations),
        ));
    }
    for coupling in &spec.couplings {
        if let Some(id) = &coupling.translation {
            if !state.translations.contains(id) {
                return Err(Failure::new(
                    "invalidModel",
                    format!("unknown translation {id:?}"),
                ));
            }
        }
    }

    let counter = state.compile_counter.fetch_add(1, Ordering::Relaxed) + 1;
    let namespace = format!("{}#v{version}#{counter}", req.package);
    let components: Vec<String> = spec.components.iter().map(|c| c.name.clone()).collect();
    lock(&state.compiled).insert(namespace.clone(), CompiledModel { spec });
    log::info!("compiled {namespace}");

    let forwarded = match req.forward_to.split_first() {
        None => 0,
        Some((next, rest)) => {
            let body = json!({ "package": req.package, "forwardTo": rest });
            let ok = wire::post(&state.agent, next, "/main/compile", &body)
                .map_err(|e| Failure::new("forwardFailed", e.to_string()))?;
            1 + ok.get("forwarded").and_then(|f| f.as_u64()).unwrap_or(0)
        }
    };

    Ok(json!({
        "namespace": namespace,
        "topComponents": components,
        "forwarded": forwarded,
    }))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct TopComponentsRequest {
    #[serde(default)]
    namespace: Option<String>,
    #[serde(default)]
    package: Option<String>,
}

fn top_components(state: &Arc<NodeState>, req: TopComponentsRequest) -> HandlerResult {
    let components: Vec<String> = if let Some(namespace) = &req.namespace {
        let compiled = lock(&state.compiled);
        let model = compiled.get(namespace).ok_or_else(|| {
            Failure::new("unknownNamespace", format!("{namespace:?} not compiled"))
        })?;
        model.spec.components.iter().map(|c| c.name.clone()).collect()
    } else if let Some(package) = &req.package {
        let store = lock(&state.store);
        let stored = store.get(package).ok_or_else(|| {
            Failure::new("unknownPackage", format!("package {package:?} not uploaded"))
        })?;
        stored.manifest.top_component_names()
    } else {
        return Err(Failure::new("badRequest", "namespace or package required"));
    };
    Ok(json!({ "components": components }))
}

// -------------------------------------------------------------------- runs

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SimulateRequest {
    namespace: String,
    servers: Vec<String>,
    client: String,
    #[serde(default)]
    assignment: Option<BTreeMap<String, String>>,
    #[serde(default)]
    iterations: Option<u64>,
    #[serde(default)]
    end_time: Option<f64>,
    #[serde(default)]
    observe: Option<f64>,
    #[serde(default)]
    timescale: Option<f64>,
    #[serde(default)]
    retain: bool,
    #[serde(default)]
    late_tolerance_ms: Option<u64>,
    #[serde(default)]
    grace_ms: Option<u64>,
}

/// The head node's run report; the client embeds it in its own.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SimulateResponse {
    pub iterations: u64,
    pub next_time: Time,
    pub relayed: u64,
    pub trace: Vec<String>,
    pub assignment: AssignmentMap,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summaries: Option<BTreeMap<String, RtSummary>>,
}

fn simulate(
    state: &Arc<NodeState>,
    req: SimulateRequest,
    explicit_assignment: bool,
    real_time: bool,
) -> HandlerResult {
    if req.servers.is_empty() {
        return Err(Failure::new("badRequest", "servers must be non-empty"));
    }
    let spec = {
        let compiled = lock(&state.compiled);
        let model = compiled.get(&req.namespace).ok_or_else(|| {
            Failure::new(
                "unknownNamespace",
                format!("{:?} not compiled on this node", req.namespace),
            )
        })?;
        model.spec.clone()
    };

    let names: Vec<String> = spec.components.iter().map(|c| c.name.clone()).collect();
    let assignment = if explicit_assignment {
        let map = req
            .assignment
            .clone()
            .ok_or_else(|| Failure::new("badRequest", "assignment required"))?;
        let assignment = AssignmentMap(map);
        assignment.ensure_total(&names)?;
        for (component, endpoint) in assignment.iter() {
            if !req.servers.iter().any(|s| s == endpoint) {
                return Err(Failure::new(
                    "badAssignment",
                    format!("{component} assigned to {endpoint}, which is not a run server"),
                ));
            }
        }
        assignment
    } else {
        round_robin_assign(&names, &req.servers)?
    };

    let response = if real_time {
        simulate_rt(&spec, assignment, &req)?
    } else {
        simulate_centralized(state, &spec, assignment, &req)?
    };
    Ok(serde_json::to_value(response).expect("report serializes"))
}

fn services_for(servers: &[String]) -> BTreeMap<String, RemoteService> {
    servers
        .iter()
        .map(|s| (s.clone(), RemoteService::new(s)))
        .collect()
}

fn simulate_centralized(
    state: &Arc<NodeState>,
    spec: &CoupledSpec,
    assignment: AssignmentMap,
    req: &SimulateRequest,
) -> Result<SimulateResponse, Failure> {
    if req.iterations.is_none() && req.end_time.is_none() {
        return Err(Failure::new(
            "badRequest",
            "centralized runs need iterations or endTime",
        ));
    }
    let end_time = match req.end_time {
        None => Time::INFINITY,
        Some(v) => Time::finite(v)
            .map_err(|e| Failure::new("badRequest", format!("endTime: {e}")))?,
    };
    let bound = RunBound {
        max_cycles: req.iterations.unwrap_or(u64::MAX),
        end_time,
    };

    let mut coordinator = Coordinator::new(
        spec,
        &assignment,
        services_for(&req.servers),
        &req.client,
        state.translations.clone(),
    )?;
    coordinator.initialize(Time::ZERO)?;
    let outcome = coordinator.simulate(bound)?;
    let response = SimulateResponse {
        iterations: outcome.iterations,
        next_time: outcome.next_time,
        relayed: coordinator.relayed(),
        trace: coordinator.trace().to_vec(),
        assignment,
        summaries: None,
    };
    if !req.retain {
        coordinator.exit_all()?;
    }
    Ok(response)
}

fn simulate_rt(
    spec: &CoupledSpec,
    assignment: AssignmentMap,
    req: &SimulateRequest,
) -> Result<SimulateResponse, Failure> {
    let observe = req
        .observe
        .ok_or_else(|| Failure::new("badRequest", "real-time runs need observe"))?;
    let timescale = req.timescale.unwrap_or(1.0);
    // is_finite also rejects NaN.
    if !observe.is_finite() || observe < 0.0 || !timescale.is_finite() || timescale <= 0.0 {
        return Err(Failure::new(
            "badRequest",
            "observe must be finite and >= 0, timescale finite and > 0",
        ));
    }

    let mut services = services_for(&req.servers);
    let mut keys: Vec<(SimulatorKey, String)> = Vec::new();
    for component in &spec.components {
        let key = SimulatorKey::new(&component.name, &req.client)?;
        let endpoint = assignment
            .get(&component.name)
            .expect("assignment checked total")
            .to_string();
        keys.push((key, endpoint));
    }

    // Create and initialize everywhere; on failure tear down what exists.
    let mut created: Vec<usize> = Vec::new();
    let mut setup = || -> Result<(), SimError> {
        for (i, component) in spec.components.iter().enumerate() {
            let (key, endpoint) = &keys[i];
            let service = services.get_mut(endpoint).expect("services cover servers");
            service.new_simulator(key, &component.model)?;
            created.push(i);
        }
        for (key, endpoint) in &keys {
            let service = services.get_mut(endpoint).expect("services cover servers");
            service.initialize(key, Time::ZERO)?;
        }
        Ok(())
    };
    if let Err(err) = setup() {
        for i in created {
            let (key, endpoint) = &keys[i];
            if let Some(service) = services.get_mut(endpoint) {
                let _ = service.exit(key);
            }
        }
        return Err(err.into());
    }

    // Peer-to-peer routes, from the coupling structure. Couplings to the
    // root model have no run-time target and are dropped.
    for (i, component) in spec.components.iter().enumerate() {
        let (key, endpoint) = &keys[i];
        let routes: Vec<RtRoute> = spec
            .couplings
            .iter()
            .filter(|c| c.from.component == component.name && c.to.component != spec.name)
            .map(|c| -> Result<RtRoute, Failure> {
                let to_endpoint = assignment.get(&c.to.component).ok_or_else(|| {
                    Failure::new(
                        "badAssignment",
                        format!("coupling target {:?} unassigned", c.to.component),
                    )
                })?;
                Ok(RtRoute {
                    from_port: c.from.port.clone(),
                    endpoint: to_endpoint.to_string(),
                    to_key: format!("{}@{}", c.to.component, req.client),
                    to_port: c.to.port.clone(),
                    translation: c.translation.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        services
            .get(endpoint)
            .expect("services cover servers")
            .install_routes(key, &routes)?;
    }

    // Shared model-time zero, far enough out that every start is accepted
    // first, retries included.
    let epoch_millis = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .expect("clock after unix epoch")
        .as_millis() as u64
        + 750;

    let mut threads = Vec::new();
    for (key, endpoint) in keys.clone() {
        let late = req.late_tolerance_ms;
        let grace = req.grace_ms;
        threads.push(std::thread::spawn(move || {
            let service = RemoteService::new(&endpoint);
            service
                .rt_start(&key, epoch_millis, observe, timescale, late, grace)
                .map(|summary| (key.name().to_string(), summary))
        }));
    }
    let mut summaries: BTreeMap<String, RtSummary> = BTreeMap::new();
    let mut first_error: Option<SimError> = None;
    for thread in threads {
        match thread.join() {
            Ok(Ok((name, summary))) => {
                summaries.insert(name, summary);
            }
            Ok(Err(err)) => first_error = first_error.or(Some(err)),
            Err(_) => {
                first_error =
                    first_error.or(Some(SimError::InvalidModel {
                        detail: "rt starter thread panicked".into(),
                    }))
            }
        }
    }

    if !req.retain {
        for (key, endpoint) in &keys {
            let service = services.get_mut(endpoint).expect("services cover servers");
            match service.exit(key) {
                Ok(()) | Err(SimError::NotFound { .. }) => {}
                Err(err) => first_error = first_error.or(Some(err)),
            }
        }
    }
    if let Some(err) = first_error {
        return Err(err.into());
    }

    let iterations = summaries.values().map(|s| s.internal_events).sum();
    let next_time = summaries
        .values()
        .map(|s| s.t_next)
        .fold(Time::INFINITY, Time::min);
    Ok(SimulateResponse {
        iterations,
        next_time,
        relayed: 0,
        trace: Vec::new(),
        assignment,
        summaries: Some(summaries),
    })
}

// --------------------------------------------------------- simulator table

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ReceiveBody {
    from_port: String,
    value: Value,
    to_port: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RtStartBody {
    epoch_millis: u64,
    observe: f64,
    timescale: f64,
    #[serde(default)]
    late_tolerance_ms: Option<u64>,
    #[serde(default)]
    grace_ms: Option<u64>,
}

/// Node-level diagnostics, mostly for operators and tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Diagnostics {
    pub address: String,
    pub keys: Vec<String>,
    pub packages: BTreeMap<String, PackageInfo>,
    pub compiled: Vec<String>,
    pub rt_active: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PackageInfo {
    pub version: u32,
    pub file_name: String,
}

fn need_key(envelope: &Envelope) -> Result<SimulatorKey, Failure> {
    envelope
        .key
        .clone()
        .ok_or_else(|| Failure::new("badRequest", "key required"))
}

fn need_time(envelope: &Envelope) -> Result<Time, Failure> {
    envelope
        .time
        .ok_or_else(|| Failure::new("badRequest", "time required"))
}

fn sim_dispatch(state: &Arc<NodeState>, path: &str, envelope: Envelope) -> HandlerResult {
    match path {
        "/sim/newSimulator" => {
            let key = need_key(&envelope)?;
            #[derive(Deserialize)]
            struct Body {
                model: ComponentModel,
            }
            let body: Body = parse_value(envelope.body)?;
            let model = devs_core::sim::LocalService::build_model(
                &state.registry,
                &state.translations,
                &body.model,
            )?;
            let mut sims = lock(&state.sims);
            if sims.contains_key(&key) {
                return Err(SimError::AlreadyExists {
                    key: key.to_string(),
                }
                .into());
            }
            sims.insert(key.clone(), SimulatorHandle::new(key, model));
            Ok(json!({}))
        }
        "/sim/initialize" => {
            let key = need_key(&envelope)?;
            let t = need_time(&envelope)?;
            {
                let mut sims = lock(&state.sims);
                let handle = not_found(sims.get_mut(&key), &key)?;
                handle.initialize(t);
            }
            // A fresh initialization starts a new run for this client; its
            // console restarts with it. All initializations of a run happen
            // before any line is logged, so repeated clearing is harmless.
            lock(&state.consoles).remove(key.client());
            Ok(json!({}))
        }
        "/sim/receiveInput" => {
            let key = need_key(&envelope)?;
            let body: ReceiveBody = parse_value(envelope.body)?;
            // A simulator in a real-time loop owns its handle; feed the loop.
            let sender = lock(&state.rt_senders).get(&key).cloned();
            if let Some(sender) = sender {
                let sent = sender.send(RtArrival {
                    from_port: body.from_port.clone(),
                    to_port: body.to_port.clone(),
                    value: body.value.clone(),
                });
                if sent.is_ok() {
                    return Ok(json!({}));
                }
                // The loop just ended; fall through to the table.
            }
            let mut sims = lock(&state.sims);
            let handle = not_found(sims.get_mut(&key), &key)?;
            handle.receive_input(&body.value, &body.to_port)?;
            Ok(json!({}))
        }
        "/sim/lambda" => {
            let key = need_key(&envelope)?;
            let t = need_time(&envelope)?;
            let line = {
                let mut sims = lock(&state.sims);
                let handle = not_found(sims.get_mut(&key), &key)?;
                handle.lambda(t);
                (!handle.output().is_empty())
                    .then(|| devs_core::sim::send_line(key.name(), handle.output()))
            };
            if let Some(line) = line {
                state.log_line(key.client(), line);
            }
            Ok(json!({}))
        }
        "/sim/getOutput" => {
            let key = need_key(&envelope)?;
            let sims = lock(&state.sims);
            let handle = not_found(sims.get(&key), &key)?;
            Ok(serde_json::to_value(handle.output()).expect("bag serializes"))
        }
        "/sim/deltfcn" => {
            let key = need_key(&envelope)?;
            let t = need_time(&envelope)?;
            let (result, line) = {
                let mut sims = lock(&state.sims);
                let handle = not_found(sims.get_mut(&key), &key)?;
                let emitted = !handle.output().is_empty();
                let transition = handle.deltfcn(t)?;
                let phase = handle.phase();
                let line =
                    emitted.then(|| devs_core::sim::state_line(key.name(), &phase));
                (DeltResult { transition, phase }, line)
            };
            if let Some(line) = line {
                state.log_line(key.client(), line);
            }
            Ok(serde_json::to_value(result).expect("result serializes"))
        }
        "/sim/getTN" => {
            let key = need_key(&envelope)?;
            let sims = lock(&state.sims);
            let handle = not_found(sims.get(&key), &key)?;
            Ok(json!({ "tN": handle.t_next() }))
        }
        "/sim/exit" => {
            let key = need_key(&envelope)?;
            if lock(&state.rt_senders).contains_key(&key) {
                return Err(Failure::new(
                    "busy",
                    format!("{key} is in a real-time run"),
                ));
            }
            lock(&state.rt_routes).remove(&key);
            lock(&state.rt_runs).remove(&key);
            match lock(&state.sims).remove(&key) {
                Some(_) => Ok(json!({})),
                None => Err(SimError::NotFound {
                    key: key.to_string(),
                }
                .into()),
            }
        }
        "/sim/getConsole" => {
            #[derive(Deserialize)]
            struct Body {
                client: String,
            }
            let body: Body = parse_value(envelope.body)?;
            let lines = lock(&state.consoles)
                .get(&body.client)
                .cloned()
                .unwrap_or_default();
            Ok(json!({ "lines": lines }))
        }
        "/sim/getIp" => Ok(json!({ "address": state.address })),
        "/sim/rtInstallRoutes" => {
            let key = need_key(&envelope)?;
            #[derive(Deserialize)]
            struct Body {
                routes: Vec<RtRoute>,
            }
            let body: Body = parse_value(envelope.body)?;
            for route in &body.routes {
                SimulatorKey::parse(&route.to_key)?;
                if let Some(id) = &route.translation {
                    if !state.translations.contains(id) {
                        return Err(Failure::new(
                            "invalidModel",
                            format!("unknown translation {id:?}"),
                        ));
                    }
                }
            }
            {
                let sims = lock(&state.sims);
                not_found(sims.get(&key), &key)?;
            }
            lock(&state.rt_routes).insert(key, body.routes);
            Ok(json!({}))
        }
        "/sim/rtStart" => {
            let key = need_key(&envelope)?;
            let body: RtStartBody = parse_value(envelope.body)?;
            rt_begin(state, key, body)
        }
        "/sim/rtCollect" => {
            let key = need_key(&envelope)?;
            let runs = lock(&state.rt_runs);
            match runs.get(&key).map(|run| &run.outcome) {
                None => Err(SimError::NotFound {
                    key: key.to_string(),
                }
                .into()),
                Some(RtOutcome::Running) => Ok(json!({ "running": true })),
                Some(RtOutcome::Done(summary)) => {
                    Ok(json!({ "running": false, "summary": summary }))
                }
                Some(RtOutcome::Failed(message)) => {
                    Err(Failure::new("core", message.clone()))
                }
            }
        }
        "/sim/diagnostics" => {
            let diagnostics = Diagnostics {
                address: state.address.clone(),
                keys: lock(&state.sims).keys().map(ToString::to_string).collect(),
                packages: lock(&state.store)
                    .iter()
                    .map(|(name, stored)| {
                        (
                            name.clone(),
                            PackageInfo {
                                version: stored.version,
                                file_name: stored.file_name.clone(),
                            },
                        )
                    })
                    .collect(),
                compiled: lock(&state.compiled).keys().cloned().collect(),
                rt_active: lock(&state.rt_senders)
                    .keys()
                    .map(ToString::to_string)
                    .collect(),
            };
            Ok(serde_json::to_value(diagnostics).expect("diagnostics serialize"))
        }
        _ => Err(Failure::new("unknownEndpoint", path)),
    }
}

fn not_found<T>(found: Option<T>, key: &SimulatorKey) -> Result<T, Failure> {
    found.ok_or_else(|| {
        SimError::NotFound {
            key: key.to_string(),
        }
        .into()
    })
}

struct HttpDelivery<'a> {
    agent: &'a ureq::Agent,
}

impl RtDelivery for HttpDelivery<'_> {
    fn deliver(&self, route: &RtRoute, value: &Value) -> Result<(), String> {
        let key = SimulatorKey::parse(&route.to_key).map_err(|e| e.to_string())?;
        let envelope = Envelope::new("sim.receiveInput", &wire::request_id())
            .with_key(key)
            .with_body(json!({
                "fromPort": route.from_port,
                "value": value,
                "toPort": route.to_port,
            }));
        wire::post(self.agent, &route.endpoint, "/sim/receiveInput", &envelope)
            .map(|_| ())
            .map_err(|e| e.to_string())
    }
}

/// Accepts a real-time run for one simulator and returns right away; the
/// loop runs on its own thread and `rtCollect` serves the summary. A repeat
/// start for the same epoch is a no-op, so a start request whose response
/// was lost can be retried on a fresh connection without risking a second
/// run against the same window.
fn rt_begin(state: &Arc<NodeState>, key: SimulatorKey, body: RtStartBody) -> HandlerResult {
    let started = json!({ "started": true });

    let mut runs = lock(&state.rt_runs);
    if runs
        .get(&key)
        .is_some_and(|run| run.epoch_millis == body.epoch_millis)
    {
        return Ok(started);
    }
    let mut handle = match lock(&state.sims).remove(&key) {
        Some(handle) => handle,
        None => {
            return Err(SimError::NotFound {
                key: key.to_string(),
            }
            .into())
        }
    };
    let routes = lock(&state.rt_routes).remove(&key).unwrap_or_default();
    let (tx, rx) = mpsc::channel();
    lock(&state.rt_senders).insert(key.clone(), tx);
    runs.insert(
        key.clone(),
        RtRun {
            epoch_millis: body.epoch_millis,
            outcome: RtOutcome::Running,
        },
    );
    drop(runs);

    let mut cfg = RtConfig::new(body.epoch_millis, body.observe, body.timescale);
    if let Some(ms) = body.late_tolerance_ms {
        cfg.late_tolerance_ms = ms;
    }
    if let Some(ms) = body.grace_ms {
        cfg.grace_ms = ms;
    }

    let state = Arc::clone(state);
    std::thread::spawn(move || {
        // Opening the peer connections now keeps the first delivery off the
        // connect path once the window is running.
        let peers: BTreeSet<&str> = routes.iter().map(|r| r.endpoint.as_str()).collect();
        for peer in peers {
            let probe = Envelope::new("sim.getIp", &wire::request_id());
            let _ = wire::post(&state.delivery_agent, peer, "/sim/getIp", &probe);
        }

        let delivery = HttpDelivery {
            agent: &state.delivery_agent,
        };
        let client = key.client().to_string();
        let mut log = |line: String| state.log_line(&client, line);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            run_rt(
                &mut handle,
                &routes,
                &rx,
                &cfg,
                &delivery,
                &state.translations,
                &mut log,
            )
        }));
        lock(&state.rt_senders).remove(&key);
        let outcome = match outcome {
            Ok(summary) => {
                lock(&state.sims).insert(key.clone(), handle);
                RtOutcome::Done(summary)
            }
            // The handle's state is unknown; drop it rather than re-list it.
            Err(_) => RtOutcome::Failed("real-time loop panicked".into()),
        };
        if let Some(run) = lock(&state.rt_runs).get_mut(&key) {
            run.outcome = outcome;
        }
    });
    Ok(started)
}
