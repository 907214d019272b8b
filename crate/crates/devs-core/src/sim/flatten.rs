//! Closure under coupling: a coupled model as a single atomic behavior.
//!
//! [`FlattenedModel`] runs the component simulators of one coupled model
//! behind the [`AtomicBehavior`] interface. The enclosing simulator sees an
//! ordinary atomic model whose time advance is the earliest child event;
//! internally each transition executes one full event cycle over the
//! children. This is the constructive form of the closure property: the
//! result composes and distributes exactly like a hand-written atomic model,
//! so one network site can host a whole subtree as a single simulator.
//!
//! The flattened model keeps a local clock that starts at zero and advances
//! by elapsed times, which makes the behavior independent of the global
//! start time used by the enclosing simulator.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::coordinator::RunBound;
use super::handle::SimulatorHandle;
use super::service::{LocalService, SimError};
use crate::behavior::{AtomicBehavior, Model};
use crate::coupled::{join_violations, ComponentModel, CoupledSpec};
use crate::error::CoreError;
use crate::message::{MessageBag, Value};
use crate::proto::SimulatorKey;
use crate::registry::{BehaviorRegistry, TranslationRegistry};
use crate::time::Time;

/// One routing edge inside the flattened model.
#[derive(Debug, Clone)]
struct Edge {
    to_component: String,
    to_port: String,
    translation: Option<String>,
}

#[derive(Clone)]
pub struct FlattenedModel {
    input_ports: Vec<String>,
    output_ports: Vec<String>,
    children: BTreeMap<String, SimulatorHandle>,
    /// Own input port -> edges into children.
    eic: BTreeMap<String, Vec<Edge>>,
    /// (child, child output port) -> edges into sibling children.
    ic: BTreeMap<(String, String), Vec<Edge>>,
    /// (child, child output port) -> edges onto own output ports.
    eoc: BTreeMap<(String, String), Vec<Edge>>,
    translations: Arc<TranslationRegistry>,
    /// Local clock: time of the last executed transition.
    t_last: Time,
}

impl FlattenedModel {
    fn build(
        spec: &CoupledSpec,
        registry: &BehaviorRegistry,
        translations: &Arc<TranslationRegistry>,
    ) -> Result<FlattenedModel, CoreError> {
        let mut children = BTreeMap::new();
        for component in &spec.components {
            let model = match &component.model {
                ComponentModel::Atomic { kind, params } => registry.instantiate(kind, params)?,
                ComponentModel::Coupled(sub) => digraph_to_atomic(sub, registry, translations)?,
            };
            let key = SimulatorKey::new(&component.name, "internal")
                .map_err(|e| CoreError::InvalidModel(e.to_string()))?;
            let mut handle = SimulatorHandle::new(key, model);
            handle.initialize(Time::ZERO);
            children.insert(component.name.clone(), handle);
        }

        let mut eic: BTreeMap<String, Vec<Edge>> = BTreeMap::new();
        let mut ic: BTreeMap<(String, String), Vec<Edge>> = BTreeMap::new();
        let mut eoc: BTreeMap<(String, String), Vec<Edge>> = BTreeMap::new();
        for coupling in &spec.couplings {
            let edge = Edge {
                to_component: coupling.to.component.clone(),
                to_port: coupling.to.port.clone(),
                translation: coupling.translation.clone(),
            };
            if coupling.from.component == spec.name {
                eic.entry(coupling.from.port.clone()).or_default().push(edge);
            } else if coupling.to.component == spec.name {
                eoc.entry((
                    coupling.from.component.clone(),
                    coupling.from.port.clone(),
                ))
                .or_default()
                .push(edge);
            } else {
                ic.entry((
                    coupling.from.component.clone(),
                    coupling.from.port.clone(),
                ))
                .or_default()
                .push(edge);
            }
        }

        Ok(FlattenedModel {
            input_ports: spec.input_ports.clone(),
            output_ports: spec.output_ports.clone(),
            children,
            eic,
            ic,
            eoc,
            translations: Arc::clone(translations),
            t_last: Time::ZERO,
        })
    }

    fn min_child_tn(&self) -> Time {
        self.children
            .values()
            .map(SimulatorHandle::t_next)
            .fold(Time::INFINITY, Time::min)
    }

    fn translate(&self, translation: Option<&str>, value: &Value) -> Value {
        self.translations
            .apply(translation, value)
            .expect("translations were checked at construction")
    }

    fn inject_external(&mut self, input: &MessageBag) {
        for item in input.items() {
            let Some(edges) = self.eic.get(&item.port).cloned() else {
                continue;
            };
            for edge in edges {
                let value = self.translate(edge.translation.as_deref(), &item.value);
                self.children
                    .get_mut(&edge.to_component)
                    .expect("couplings were validated")
                    .receive_input(&value, &edge.to_port)
                    .expect("couplings were validated");
            }
        }
    }

    /// One event cycle at the earliest child event time: imminent lambdas
    /// route along internal couplings, the external bag (if any) routes in,
    /// then every child transitions. Outputs that leave through external
    /// output couplings are dropped here; `lambda` already exposed them.
    fn cycle(&mut self, external: Option<&MessageBag>) {
        let t = self.min_child_tn();
        debug_assert!(t.is_finite(), "cycle called with no scheduled child");

        let mut deliveries: Vec<(String, String, Value)> = Vec::new();
        for (name, handle) in &self.children {
            if handle.t_next() != t {
                continue;
            }
            let output = handle.model().lambda();
            for item in output.items() {
                let route = (name.clone(), item.port.clone());
                if let Some(edges) = self.ic.get(&route) {
                    for edge in edges {
                        let value = self.translate(edge.translation.as_deref(), &item.value);
                        deliveries.push((edge.to_component.clone(), edge.to_port.clone(), value));
                    }
                }
            }
        }
        for (component, port, value) in deliveries {
            self.children
                .get_mut(&component)
                .expect("couplings were validated")
                .receive_input(&value, &port)
                .expect("couplings were validated");
        }
        if let Some(bag) = external {
            self.inject_external(bag);
        }
        for handle in self.children.values_mut() {
            handle
                .deltfcn(t)
                .expect("child clocks are maintained by this cycle");
        }
        self.t_last = t;
    }
}

impl AtomicBehavior for FlattenedModel {
    fn input_ports(&self) -> Vec<String> {
        self.input_ports.clone()
    }

    fn output_ports(&self) -> Vec<String> {
        self.output_ports.clone()
    }

    fn ta(&self) -> Time {
        let tn = self.min_child_tn();
        if tn.is_finite() {
            tn.since(self.t_last)
        } else {
            Time::INFINITY
        }
    }

    fn delta_int(&mut self) {
        self.cycle(None);
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        let t = self.t_last + elapsed;
        self.inject_external(input);
        let receivers: Vec<String> = self
            .children
            .iter()
            .filter(|(_, h)| !h.input().is_empty())
            .map(|(n, _)| n.clone())
            .collect();
        for name in receivers {
            self.children
                .get_mut(&name)
                .expect("just listed")
                .deltfcn(t)
                .expect("child clocks are maintained by this cycle");
        }
        self.t_last = t;
    }

    fn delta_con(&mut self, input: &MessageBag) {
        self.cycle(Some(input));
    }

    fn lambda(&self) -> MessageBag {
        let t = self.min_child_tn();
        if !t.is_finite() {
            return MessageBag::new();
        }
        let mut out = MessageBag::new();
        for (name, handle) in &self.children {
            if handle.t_next() != t {
                continue;
            }
            let output = handle.model().lambda();
            for item in output.items() {
                let route = (name.clone(), item.port.clone());
                if let Some(edges) = self.eoc.get(&route) {
                    for edge in edges {
                        let value = self.translate(edge.translation.as_deref(), &item.value);
                        out.push(edge.to_port.clone(), value);
                    }
                }
            }
        }
        out
    }

    fn phase(&self) -> String {
        let body = self
            .children
            .iter()
            .map(|(name, handle)| format!("{name}={}", handle.phase()))
            .collect::<Vec<_>>()
            .join(", ");
        format!("{{{body}}}")
    }

    fn snapshot(&self) -> Value {
        let mut record = BTreeMap::new();
        for (name, handle) in &self.children {
            let child = BTreeMap::from([
                ("state".to_string(), handle.snapshot()),
                ("tL".to_string(), Value::text(handle.t_last().to_string())),
                ("tN".to_string(), Value::text(handle.t_next().to_string())),
            ]);
            record.insert(name.clone(), Value::Record(child));
        }
        Value::Record(record)
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Collapses a coupled spec into a single atomic [`Model`]. The spec is
/// validated first; structural problems are reported together.
pub fn digraph_to_atomic(
    spec: &CoupledSpec,
    registry: &BehaviorRegistry,
    translations: &Arc<TranslationRegistry>,
) -> Result<Model, CoreError> {
    let violations = crate::coupled::validate_coupled(spec, registry);
    if !violations.is_empty() {
        return Err(CoreError::InvalidModel(join_violations(&violations)));
    }
    for coupling in &spec.couplings {
        if let Some(id) = &coupling.translation {
            if !translations.contains(id) {
                return Err(CoreError::UnknownTranslation { id: id.clone() });
            }
        }
    }
    let flattened = FlattenedModel::build(spec, registry, translations)?;
    Ok(Model::new(
        format!("coupled:{}", spec.name),
        Box::new(flattened),
    ))
}

/// Flattens the spec and runs it to a bound, returning the root output
/// trace: one entry per event time with a non-empty root output bag.
pub fn run_flat(
    spec: &CoupledSpec,
    registry: &BehaviorRegistry,
    translations: &Arc<TranslationRegistry>,
    bound: RunBound,
) -> Result<Vec<(Time, MessageBag)>, SimError> {
    let model = LocalService::build_model(
        registry,
        translations,
        &ComponentModel::Coupled(Box::new(spec.clone())),
    )?;
    let key = SimulatorKey::new(&spec.name, "internal").map_err(|e| SimError::InvalidModel {
        detail: e.to_string(),
    })?;
    let mut handle = SimulatorHandle::new(key, model);
    handle.initialize(Time::ZERO);

    let mut outputs = Vec::new();
    let mut cycles = 0;
    while cycles < bound.max_cycles
        && handle.t_next().is_finite()
        && handle.t_next() <= bound.end_time
    {
        let t = handle.t_next();
        handle.lambda(t);
        if !handle.output().is_empty() {
            outputs.push((t, handle.output().clone()));
        }
        handle.deltfcn(t)?;
        cycles += 1;
    }
    Ok(outputs)
}
