//! HTTP-backed [`SimulationService`]: the head node drives simulators on
//! peer nodes through the `/sim/*` endpoints with the same trait the
//! in-process service implements.

use std::time::Duration;

use serde_json::json;

use devs_core::proto::{Envelope, SimulatorKey};
use devs_core::sim::{DeltResult, RtRoute, RtSummary, SimError, SimulationService};
use devs_core::{ComponentModel, MessageBag, Time, Value};

use crate::wire::{self, WireError};

pub struct RemoteService {
    endpoint: String,
    agent: ureq::Agent,
}

impl RemoteService {
    pub fn new(endpoint: &str) -> RemoteService {
        RemoteService {
            endpoint: endpoint.to_string(),
            agent: wire::agent(Duration::from_secs(120)),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn to_sim_error(&self, key: Option<&SimulatorKey>, err: WireError) -> SimError {
        // The absence of a simulator must survive the wire: exit sweeps rely
        // on telling it apart from real failures.
        if err.code() == Some("notFound") {
            return SimError::NotFound {
                key: key.map(ToString::to_string).unwrap_or_default(),
            };
        }
        SimError::Endpoint {
            endpoint: self.endpoint.clone(),
            detail: err.to_string(),
        }
    }

    fn call(
        &self,
        path: &str,
        envelope: &Envelope,
    ) -> Result<serde_json::Value, SimError> {
        wire::post(&self.agent, &self.endpoint, path, envelope)
            .map_err(|e| self.to_sim_error(envelope.key.as_ref(), e))
    }

    fn envelope(service: &str, key: &SimulatorKey) -> Envelope {
        Envelope::new(service, &wire::request_id()).with_key(key.clone())
    }

    /// Installs peer-to-peer output routes ahead of a real-time run.
    pub fn install_routes(
        &self,
        key: &SimulatorKey,
        routes: &[RtRoute],
    ) -> Result<(), SimError> {
        let envelope = Self::envelope("sim.rtInstallRoutes", key)
            .with_body(json!({ "routes": routes }));
        self.call("/sim/rtInstallRoutes", &envelope).map(|_| ())
    }

    /// Starts the real-time loop for `key`, then polls until its summary is
    /// available. Both phases use short one-shot connections: the start is
    /// idempotent per epoch, so a post that times out is simply retried on a
    /// fresh connection, and closing a connection per poll keeps the peer's
    /// accept workers turning over while its long-lived connections sit in
    /// blocking reads.
    pub fn rt_start(
        &self,
        key: &SimulatorKey,
        epoch_millis: u64,
        observe: f64,
        timescale: f64,
        late_tolerance_ms: Option<u64>,
        grace_ms: Option<u64>,
    ) -> Result<RtSummary, SimError> {
        let mut body = json!({
            "epochMillis": epoch_millis,
            "observe": observe,
            "timescale": timescale,
        });
        if let Some(ms) = late_tolerance_ms {
            body["lateToleranceMs"] = json!(ms);
        }
        if let Some(ms) = grace_ms {
            body["graceMs"] = json!(ms);
        }
        let envelope = Self::envelope("sim.rtStart", key).with_body(body);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let agent = wire::agent(Duration::from_millis(400));
            match wire::post(&agent, &self.endpoint, "/sim/rtStart", &envelope) {
                Ok(_) => break,
                Err(err @ WireError::Remote { .. }) => {
                    return Err(self.to_sim_error(Some(key), err))
                }
                Err(err) if attempts >= 6 => return Err(self.to_sim_error(Some(key), err)),
                Err(_) => {}
            }
        }

        let wall = Duration::from_secs_f64(observe * timescale)
            + Duration::from_millis(
                grace_ms.unwrap_or(250) + late_tolerance_ms.unwrap_or(50),
            )
            + Duration::from_secs(15);
        let deadline = std::time::Instant::now() + wall;
        let collect = Self::envelope("sim.rtCollect", key);
        loop {
            std::thread::sleep(Duration::from_millis(150));
            let agent = wire::agent(Duration::from_secs(2));
            match wire::post(&agent, &self.endpoint, "/sim/rtCollect", &collect) {
                Ok(ok) => {
                    if let Some(summary) = ok.get("summary") {
                        return serde_json::from_value(summary.clone()).map_err(|e| {
                            SimError::Endpoint {
                                endpoint: self.endpoint.clone(),
                                detail: format!("decoding rt summary: {e}"),
                            }
                        });
                    }
                }
                Err(err @ WireError::Remote { .. }) => {
                    return Err(self.to_sim_error(Some(key), err))
                }
                Err(err) if std::time::Instant::now() >= deadline => {
                    return Err(self.to_sim_error(Some(key), err))
                }
                Err(_) => {}
            }
            if std::time::Instant::now() >= deadline {
                return Err(SimError::Endpoint {
                    endpoint: self.endpoint.clone(),
                    detail: "real-time run did not finish within its window".into(),
                });
            }
        }
    }
}

impl SimulationService for RemoteService {
    fn new_simulator(
        &mut self,
        key: &SimulatorKey,
        model: &ComponentModel,
    ) -> Result<(), SimError> {
        let envelope =
            Self::envelope("sim.newSimulator", key).with_body(json!({ "model": model }));
        self.call("/sim/newSimulator", &envelope).map(|_| ())
    }

    fn initialize(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError> {
        let envelope = Self::envelope("sim.initialize", key).with_time(t);
        self.call("/sim/initialize", &envelope).map(|_| ())
    }

    fn receive_input(
        &mut self,
        key: &SimulatorKey,
        from_port: &str,
        value: &Value,
        to_port: &str,
    ) -> Result<(), SimError> {
        let envelope = Self::envelope("sim.receiveInput", key).with_body(json!({
            "fromPort": from_port,
            "value": value,
            "toPort": to_port,
        }));
        self.call("/sim/receiveInput", &envelope).map(|_| ())
    }

    fn lambda(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError> {
        let envelope = Self::envelope("sim.lambda", key).with_time(t);
        self.call("/sim/lambda", &envelope).map(|_| ())
    }

    fn get_output(&mut self, key: &SimulatorKey) -> Result<MessageBag, SimError> {
        let ok = self.call("/sim/getOutput", &Self::envelope("sim.getOutput", key))?;
        serde_json::from_value(ok).map_err(|e| SimError::Endpoint {
            endpoint: self.endpoint.clone(),
            detail: format!("decoding output bag: {e}"),
        })
    }

    fn deltfcn(&mut self, key: &SimulatorKey, t: Time) -> Result<DeltResult, SimError> {
        let envelope = Self::envelope("sim.deltfcn", key).with_time(t);
        let ok = self.call("/sim/deltfcn", &envelope)?;
        serde_json::from_value(ok).map_err(|e| SimError::Endpoint {
            endpoint: self.endpoint.clone(),
            detail: format!("decoding transition result: {e}"),
        })
    }

    fn get_tn(&mut self, key: &SimulatorKey) -> Result<Time, SimError> {
        let ok = self.call("/sim/getTN", &Self::envelope("sim.getTN", key))?;
        let tn = ok.get("tN").cloned().ok_or_else(|| SimError::Endpoint {
            endpoint: self.endpoint.clone(),
            detail: "getTN response lacks tN".into(),
        })?;
        serde_json::from_value(tn).map_err(|e| SimError::Endpoint {
            endpoint: self.endpoint.clone(),
            detail: format!("decoding tN: {e}"),
        })
    }

    fn exit(&mut self, key: &SimulatorKey) -> Result<(), SimError> {
        self.call("/sim/exit", &Self::envelope("sim.exit", key))
            .map(|_| ())
    }
}
