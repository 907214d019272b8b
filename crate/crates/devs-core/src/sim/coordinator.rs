//! Sequential coordinator over a set of simulation services.
//!
//! The coordinator owns the global clock pair `(tL, tN)` and drives every
//! component simulator through the same cycle at each event time `t = tN`:
//!
//! 1. `lambda(t)` on every simulator, then `getOutput`; non-empty outputs
//!    are logged as send lines;
//! 2. outputs propagate along the couplings (with translation) into the
//!    target simulators' input bags;
//! 3. `deltfcn(t)` on every simulator; emitters get a state line with their
//!    post-transition phase;
//! 4. `tL = t`, `tN = min over getTN`, and the loop repeats until the bound
//!    is hit or `tN` is infinite.
//!
//! Simulators are visited in sorted name order within each phase, so the
//! trace is a deterministic function of the model alone. That makes the
//! trace comparable byte for byte across in-process, single-node, and
//! multi-node runs of the same model.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::service::{SimError, SimulationService};
use super::trace::{send_line, state_line};
use crate::coupled::{Coupling, CoupledSpec};
use crate::message::MessageBag;
use crate::proto::{AssignmentMap, SimulatorKey};
use crate::registry::TranslationRegistry;
use crate::time::Time;

/// Stop conditions for a run; the first one reached wins.
#[derive(Debug, Clone, Copy)]
pub struct RunBound {
    /// Maximum number of event cycles to execute.
    pub max_cycles: u64,
    /// Run while `tN <= end_time` (inclusive).
    pub end_time: Time,
}

impl RunBound {
    pub fn cycles(max_cycles: u64) -> RunBound {
        RunBound {
            max_cycles,
            end_time: Time::INFINITY,
        }
    }

    pub fn until(end_time: Time) -> RunBound {
        RunBound {
            max_cycles: u64::MAX,
            end_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// Event cycles actually executed.
    pub iterations: u64,
    /// Global `tN` after the run; infinite when the model went quiet.
    pub next_time: Time,
}

pub struct Coordinator<S: SimulationService> {
    services: BTreeMap<String, S>,
    /// Component names in model declaration order.
    order: Vec<String>,
    /// Component names in sorted order; phase loops use this.
    sorted: Vec<String>,
    keys: BTreeMap<String, SimulatorKey>,
    placement: BTreeMap<String, String>,
    /// (source component, source port) -> couplings out of it.
    routes: BTreeMap<(String, String), Vec<Coupling>>,
    root_name: String,
    translations: Arc<TranslationRegistry>,
    t_last: Time,
    t_next: Time,
    trace: Vec<String>,
    relayed: u64,
    root_outputs: Vec<(Time, MessageBag)>,
}

impl<S: SimulationService> Coordinator<S> {
    /// Creates the component simulators on their assigned services, in
    /// declaration order. When any creation fails the ones already created
    /// are torn down best-effort and the failing endpoints are reported.
    pub fn new(
        spec: &CoupledSpec,
        placement: &AssignmentMap,
        services: BTreeMap<String, S>,
        client: &str,
        translations: Arc<TranslationRegistry>,
    ) -> Result<Self, SimError> {
        let mut coordinator = Coordinator {
            services,
            order: Vec::new(),
            sorted: Vec::new(),
            keys: BTreeMap::new(),
            placement: BTreeMap::new(),
            routes: BTreeMap::new(),
            root_name: spec.name.clone(),
            translations,
            t_last: Time::ZERO,
            t_next: Time::INFINITY,
            trace: Vec::new(),
            relayed: 0,
            root_outputs: Vec::new(),
        };

        for component in &spec.components {
            let name = component.name.clone();
            let key = SimulatorKey::new(&name, client).map_err(|e| SimError::InvalidModel {
                detail: e.to_string(),
            })?;
            let endpoint =
                placement
                    .get(&name)
                    .ok_or_else(|| SimError::InvalidModel {
                        detail: format!("component {name:?} has no server assignment"),
                    })?;
            if !coordinator.services.contains_key(endpoint) {
                return Err(SimError::Endpoint {
                    endpoint: endpoint.to_string(),
                    detail: "assignment names a server with no service".into(),
                });
            }
            coordinator.keys.insert(name.clone(), key);
            coordinator
                .placement
                .insert(name.clone(), endpoint.to_string());
            coordinator.order.push(name);
        }
        coordinator.sorted = coordinator.order.clone();
        coordinator.sorted.sort();

        for coupling in &spec.couplings {
            coordinator
                .routes
                .entry((
                    coupling.from.component.clone(),
                    coupling.from.port.clone(),
                ))
                .or_default()
                .push(coupling.clone());
        }

        let mut failed: Vec<String> = Vec::new();
        let mut created: Vec<String> = Vec::new();
        for component in &spec.components {
            let name = &component.name;
            let endpoint = coordinator.placement[name].clone();
            let key = coordinator.keys[name].clone();
            let service = coordinator.services.get_mut(&endpoint).expect("checked");
            match service.new_simulator(&key, &component.model) {
                Ok(()) => created.push(name.clone()),
                Err(err) => {
                    log::warn!("new_simulator {key} at {endpoint} failed: {err}");
                    if !failed.contains(&endpoint) {
                        failed.push(endpoint);
                    }
                }
            }
        }
        if !failed.is_empty() {
            for name in created {
                let endpoint = coordinator.placement[&name].clone();
                let key = coordinator.keys[&name].clone();
                if let Some(service) = coordinator.services.get_mut(&endpoint) {
                    let _ = service.exit(&key);
                }
            }
            return Err(SimError::InitFailure { endpoints: failed });
        }
        Ok(coordinator)
    }

    /// Initializes every simulator at `t0` and resets run artifacts, so a
    /// coordinator can be reused for another run.
    pub fn initialize(&mut self, t0: Time) -> Result<(), SimError> {
        for name in &self.order {
            let key = &self.keys[name];
            let endpoint = &self.placement[name];
            self.services
                .get_mut(endpoint)
                .expect("constructor checked endpoints")
                .initialize(key, t0)?;
        }
        self.t_last = t0;
        self.t_next = self.min_tn()?;
        self.trace.clear();
        self.relayed = 0;
        self.root_outputs.clear();
        Ok(())
    }

    /// Runs event cycles until a bound is hit or the model goes quiet.
    pub fn simulate(&mut self, bound: RunBound) -> Result<RunOutcome, SimError> {
        let mut iterations = 0;
        while iterations < bound.max_cycles
            && self.t_next.is_finite()
            && self.t_next <= bound.end_time
        {
            self.cycle()?;
            iterations += 1;
        }
        Ok(RunOutcome {
            iterations,
            next_time: self.t_next,
        })
    }

    fn cycle(&mut self) -> Result<(), SimError> {
        let t = self.t_next;

        for name in &self.sorted {
            let key = &self.keys[name];
            let endpoint = &self.placement[name];
            self.services
                .get_mut(endpoint)
                .expect("constructor checked endpoints")
                .lambda(key, t)?;
        }

        let mut emitted: BTreeMap<String, MessageBag> = BTreeMap::new();
        for name in &self.sorted {
            let key = &self.keys[name];
            let endpoint = &self.placement[name];
            let output = self
                .services
                .get_mut(endpoint)
                .expect("constructor checked endpoints")
                .get_output(key)?;
            if !output.is_empty() {
                self.trace.push(send_line(name, &output));
                emitted.insert(name.clone(), output);
            }
        }

        let mut root_bag = MessageBag::new();
        for (name, output) in &emitted {
            self.propagate(name, output, &mut root_bag)?;
        }
        if !root_bag.is_empty() {
            self.root_outputs.push((t, root_bag));
        }

        for name in &self.sorted {
            let key = &self.keys[name];
            let endpoint = &self.placement[name];
            let result = self
                .services
                .get_mut(endpoint)
                .expect("constructor checked endpoints")
                .deltfcn(key, t)?;
            if emitted.contains_key(name) {
                self.trace.push(state_line(name, &result.phase));
            }
        }

        self.t_last = t;
        self.t_next = self.min_tn()?;
        Ok(())
    }

    fn propagate(
        &mut self,
        from_component: &str,
        output: &MessageBag,
        root_bag: &mut MessageBag,
    ) -> Result<(), SimError> {
        for item in output.items() {
            let route_key = (from_component.to_string(), item.port.clone());
            let Some(couplings) = self.routes.get(&route_key).cloned() else {
                log::debug!(
                    "output {}.{} has no coupling; dropped",
                    from_component,
                    item.port
                );
                continue;
            };
            for coupling in couplings {
                let value = self
                    .translations
                    .apply(coupling.translation.as_deref(), &item.value)?;
                if coupling.to.component == self.root_name {
                    root_bag.push(coupling.to.port.clone(), value);
                    continue;
                }
                let key = self.keys[&coupling.to.component].clone();
                let endpoint = self.placement[&coupling.to.component].clone();
                self.service(&endpoint)
                    .receive_input(&key, &item.port, &value, &coupling.to.port)?;
                self.relayed += 1;
            }
        }
        Ok(())
    }

    /// Tears down every simulator. Missing ones are fine: a second call, or
    /// a sweep after a partial failure, must not turn into an error storm.
    pub fn exit_all(&mut self) -> Result<(), SimError> {
        let mut first_error = None;
        for name in &self.order {
            let key = self.keys[name].clone();
            let endpoint = self.placement[name].clone();
            match self.services.get_mut(&endpoint).expect("checked").exit(&key) {
                Ok(()) | Err(SimError::NotFound { .. }) => {}
                Err(err) => first_error = first_error.or(Some(err)),
            }
        }
        match first_error {
            None => Ok(()),
            Some(err) => Err(err),
        }
    }

    fn min_tn(&mut self) -> Result<Time, SimError> {
        let mut tn = Time::INFINITY;
        for name in &self.order {
            let key = &self.keys[name];
            let endpoint = &self.placement[name];
            tn = tn.min(
                self.services
                    .get_mut(endpoint)
                    .expect("constructor checked endpoints")
                    .get_tn(key)?,
            );
        }
        Ok(tn)
    }

    fn service(&mut self, endpoint: &str) -> &mut S {
        self.services
            .get_mut(endpoint)
            .expect("constructor checked endpoints")
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    /// Messages this coordinator carried between simulators.
    pub fn relayed(&self) -> u64 {
        self.relayed
    }

    /// Outputs that reached the root model's output ports, by event time.
    pub fn root_outputs(&self) -> &[(Time, MessageBag)] {
        &self.root_outputs
    }

    pub fn t_next(&self) -> Time {
        self.t_next
    }

    pub fn component_key(&self, name: &str) -> Option<&SimulatorKey> {
        self.keys.get(name)
    }

    /// Read access to one of the coordinated services, for post-run
    /// inspection.
    pub fn service_ref(&self, endpoint: &str) -> Option<&S> {
        self.services.get(endpoint)
    }
}
