//! Real-time execution: one simulator driven by the wall clock.
//!
//! Every participating simulator runs this loop on its own site. There is no
//! coordinator in the data path: output routes are installed up front and
//! each emitted message goes straight to its target simulator through the
//! [`RtDelivery`] callback. All sites share an epoch (the wall-clock instant
//! of model time zero), so `model_time = (wall - epoch) / timescale`
//! everywhere.
//!
//! Ordering rules that keep real-time runs comparable to centralized ones:
//!
//! * due internal events fire before queued arrivals are processed, so a
//!   simulator imminent at `t` sees exactly the state a centralized cycle
//!   at `t` would see (outputs are computed before inputs are applied);
//! * arrivals are applied at the current model time, never earlier;
//! * the model clock is clamped to the observation horizon, so everything
//!   after the deadline (late internals, the final drain) executes at the
//!   horizon itself;
//! * a late internal event is executed late rather than skipped; beyond the
//!   tolerance it is also counted and logged as missed.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, VecDeque};
use std::sync::mpsc::{Receiver, RecvTimeoutError};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use super::handle::SimulatorHandle;
use super::trace::{send_line, state_line};
use crate::message::Value;
use crate::registry::TranslationRegistry;
use crate::time::Time;

/// An installed output route: where values emitted on `from_port` go.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RtRoute {
    pub from_port: String,
    /// Target site, e.g. `127.0.0.1:9001`.
    pub endpoint: String,
    pub to_key: String,
    pub to_port: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
}

/// A message delivered to this simulator by a peer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RtArrival {
    pub from_port: String,
    pub to_port: String,
    pub value: Value,
}

/// Transport used to push an emitted value along a route.
pub trait RtDelivery {
    fn deliver(&self, route: &RtRoute, value: &Value) -> Result<(), String>;
}

#[derive(Debug, Clone, Copy)]
pub struct RtConfig {
    /// Unix milliseconds of model time zero, shared by all sites.
    pub epoch_millis: u64,
    /// Observation horizon in model time units.
    pub observe: f64,
    /// Wall seconds per model time unit.
    pub timescale: f64,
    /// Lateness beyond this counts an internal event as missed.
    pub late_tolerance_ms: u64,
    /// After the deadline, arrivals are still drained for this long.
    pub grace_ms: u64,
    /// Hard cap on executed events; guards against zero-delay loops.
    pub max_events: u64,
}

impl RtConfig {
    pub fn new(epoch_millis: u64, observe: f64, timescale: f64) -> RtConfig {
        RtConfig {
            epoch_millis,
            observe,
            timescale,
            late_tolerance_ms: 50,
            grace_ms: 250,
            max_events: 100_000,
        }
    }
}

/// What one simulator did during a real-time run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RtSummary {
    pub internal_events: u64,
    pub external_events: u64,
    pub missed: u64,
    pub peer_sent: u64,
    pub phase: String,
    pub t_last: Time,
    pub t_next: Time,
}

/// Runs `handle` against the wall clock until the horizon passes.
///
/// `rx` feeds arrivals from the enclosing site; `log` receives the same
/// send/state lines a centralized run would produce for this simulator.
pub fn run_rt(
    handle: &mut SimulatorHandle,
    routes: &[RtRoute],
    rx: &Receiver<RtArrival>,
    cfg: &RtConfig,
    delivery: &dyn RtDelivery,
    translations: &TranslationRegistry,
    log: &mut dyn FnMut(String),
) -> RtSummary {
    assert!(cfg.timescale > 0.0, "timescale must be positive");
    assert!(cfg.observe >= 0.0, "observe must be non-negative");

    let epoch = UNIX_EPOCH + Duration::from_millis(cfg.epoch_millis);
    let horizon = Time::finite(cfg.observe).expect("observe checked above");
    let wall_for = |t: Time| epoch + Duration::from_secs_f64(t.as_f64() * cfg.timescale);
    let deadline = wall_for(horizon);
    let model_now = || {
        let elapsed = SystemTime::now()
            .duration_since(epoch)
            .unwrap_or(Duration::ZERO)
            .as_secs_f64();
        Time::finite((elapsed / cfg.timescale).min(cfg.observe)).expect("clamped")
    };

    let mut table: BTreeMap<&str, Vec<&RtRoute>> = BTreeMap::new();
    for route in routes {
        table.entry(route.from_port.as_str()).or_default().push(route);
    }

    let mut summary = RtSummary {
        internal_events: 0,
        external_events: 0,
        missed: 0,
        peer_sent: 0,
        phase: handle.phase(),
        t_last: handle.t_last(),
        t_next: handle.t_next(),
    };
    let name = handle.key().name().to_string();

    if let Ok(until_epoch) = epoch.duration_since(SystemTime::now()) {
        std::thread::sleep(until_epoch);
    }

    let mut pending: VecDeque<RtArrival> = VecDeque::new();
    let mut events: u64 = 0;
    let fire_internal = |handle: &mut SimulatorHandle,
                             summary: &mut RtSummary,
                             log: &mut dyn FnMut(String)| {
        let t = handle.t_next();
        if let Ok(behind) = SystemTime::now().duration_since(wall_for(t)) {
            if behind.as_millis() as u64 > cfg.late_tolerance_ms {
                summary.missed += 1;
                log(format!(
                    "{name} missed deadline for t={t} by {}ms",
                    behind.as_millis()
                ));
            }
        }
        handle.lambda(t);
        let output = handle.output().clone();
        if !output.is_empty() {
            log(send_line(&name, &output));
        }
        handle.deltfcn(t).expect("t == tN is always in window");
        if !output.is_empty() {
            log(state_line(&name, &handle.phase()));
        }
        summary.internal_events += 1;
        for item in output.items() {
            let Some(routes) = table.get(item.port.as_str()) else {
                continue;
            };
            for route in routes {
                let value = translations
                    .apply(route.translation.as_deref(), &item.value)
                    .expect("translations were checked at installation");
                match delivery.deliver(route, &value) {
                    Ok(()) => summary.peer_sent += 1,
                    Err(detail) => log(format!(
                        "{name} delivery to {} failed: {detail}",
                        route.endpoint
                    )),
                }
            }
        }
    };

    loop {
        while let Ok(arrival) = rx.try_recv() {
            pending.push_back(arrival);
        }
        if events >= cfg.max_events {
            log(format!("{name} hit the event cap; stopping"));
            break;
        }
        let now = model_now();

        if handle.t_next().is_finite() && handle.t_next() <= now.min(horizon) {
            fire_internal(handle, &mut summary, log);
            events += 1;
            continue;
        }

        if !pending.is_empty() {
            for arrival in pending.drain(..) {
                if let Err(err) = handle.receive_input(&arrival.value, &arrival.to_port) {
                    log(format!("{name} rejected arrival: {err}"));
                }
            }
            if !handle.input().is_empty() {
                handle
                    .deltfcn(now)
                    .expect("now is clamped into the clock window");
                summary.external_events += 1;
                events += 1;
            }
            continue;
        }

        let wall_now = SystemTime::now();
        if wall_now >= deadline {
            let grace_end = deadline + Duration::from_millis(cfg.grace_ms);
            let Ok(remaining) = grace_end.duration_since(wall_now) else {
                break;
            };
            match rx.recv_timeout(remaining) {
                Ok(arrival) => pending.push_back(arrival),
                Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => break,
            }
            continue;
        }

        let next_wall = if handle.t_next().is_finite() {
            wall_for(handle.t_next().min(horizon)).min(deadline)
        } else {
            deadline
        };
        let wait = next_wall
            .duration_since(wall_now)
            .unwrap_or(Duration::ZERO)
            .max(Duration::from_millis(1));
        match rx.recv_timeout(wait) {
            Ok(arrival) => pending.push_back(arrival),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => std::thread::sleep(wait),
        }
    }

    summary.phase = handle.phase();
    summary.t_last = handle.t_last();
    summary.t_next = handle.t_next();
    summary
}
