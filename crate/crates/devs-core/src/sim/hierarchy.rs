//! Hierarchical simulation: one simulator per atomic model, one coordinator
//! per coupled model, composed as a tree.
//!
//! This engine exists as an independent reference for the closure property.
//! It shares no dispatch code with [`super::flatten`]: the atomic transition
//! logic here is written directly against [`Model`], and coordination works
//! on the tree rather than on a flattened child table. Tests run both
//! engines over the same models and require identical root output traces.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::coordinator::RunBound;
use crate::behavior::Model;
use crate::coupled::{join_violations, ComponentModel, CoupledSpec};
use crate::error::CoreError;
use crate::message::{MessageBag, Value};
use crate::registry::{BehaviorRegistry, TranslationRegistry};
use crate::time::Time;

#[derive(Debug, Clone)]
struct Edge {
    to_component: String,
    to_port: String,
    translation: Option<String>,
}

enum HierNode {
    Atomic(AtomicNode),
    Coupled(CoupledNode),
}

struct AtomicNode {
    model: Model,
    t_last: Time,
    t_next: Time,
    input: MessageBag,
    cached_output: MessageBag,
}

struct CoupledNode {
    name: String,
    children: BTreeMap<String, HierNode>,
    eic: BTreeMap<String, Vec<Edge>>,
    ic: BTreeMap<(String, String), Vec<Edge>>,
    eoc: BTreeMap<(String, String), Vec<Edge>>,
    translations: Arc<TranslationRegistry>,
    t_last: Time,
    t_next: Time,
    input: MessageBag,
    cached_output: MessageBag,
}

impl HierNode {
    fn initialize(&mut self, t: Time) {
        match self {
            HierNode::Atomic(node) => {
                node.t_last = t;
                node.t_next = t + node.model.ta();
                node.input.clear();
                node.cached_output.clear();
            }
            HierNode::Coupled(node) => {
                for child in node.children.values_mut() {
                    child.initialize(t);
                }
                node.t_last = t;
                node.t_next = node.min_child_tn();
                node.input.clear();
                node.cached_output.clear();
            }
        }
    }

    fn t_next(&self) -> Time {
        match self {
            HierNode::Atomic(node) => node.t_next,
            HierNode::Coupled(node) => node.t_next,
        }
    }

    fn cached_output(&self) -> &MessageBag {
        match self {
            HierNode::Atomic(node) => &node.cached_output,
            HierNode::Coupled(node) => &node.cached_output,
        }
    }

    fn has_input(&self) -> bool {
        match self {
            HierNode::Atomic(node) => !node.input.is_empty(),
            HierNode::Coupled(node) => !node.input.is_empty(),
        }
    }

    fn inject(&mut self, port: &str, value: Value) {
        match self {
            HierNode::Atomic(node) => node.input.push(port.to_string(), value),
            HierNode::Coupled(node) => node.input.push(port.to_string(), value),
        }
    }

    /// Computes and caches this subtree's output for time `t`.
    fn collect_output(&mut self, t: Time) {
        match self {
            HierNode::Atomic(node) => {
                node.cached_output = if t == node.t_next {
                    node.model.lambda()
                } else {
                    MessageBag::new()
                };
            }
            HierNode::Coupled(node) => {
                node.cached_output = MessageBag::new();
                let mut lifted: Vec<(String, String, Value)> = Vec::new();
                for (name, child) in node.children.iter_mut() {
                    child.collect_output(t);
                    for item in child.cached_output().items() {
                        let route = (name.clone(), item.port.clone());
                        if let Some(edges) = node.eoc.get(&route) {
                            for edge in edges {
                                let value = node
                                    .translations
                                    .apply(edge.translation.as_deref(), &item.value)
                                    .expect("translations were checked at construction");
                                lifted.push((edge.to_component.clone(), edge.to_port.clone(), value));
                            }
                        }
                    }
                }
                for (_, port, value) in lifted {
                    node.cached_output.push(port, value);
                }
            }
        }
    }

    /// Applies the transition for time `t`. For a coupled node this routes
    /// the cached child outputs and own input first, then transitions every
    /// child that is imminent or received something.
    fn transition(&mut self, t: Time) {
        match self {
            HierNode::Atomic(node) => node.transition(t),
            HierNode::Coupled(node) => node.transition(t),
        }
    }
}

impl AtomicNode {
    fn transition(&mut self, t: Time) {
        assert!(
            t <= self.t_next && t >= self.t_last,
            "transition at t={t} outside [{}, {}]",
            self.t_last,
            self.t_next
        );
        let at_event = t == self.t_next;
        if self.input.is_empty() && !at_event {
            return;
        }
        if !self.input.is_empty() && at_event {
            self.model
                .delta_con(&self.input)
                .expect("ports were validated at construction");
        } else if self.input.is_empty() {
            self.model.delta_int();
        } else {
            self.model
                .delta_ext(t.since(self.t_last), &self.input)
                .expect("ports were validated at construction");
        }
        self.t_last = t;
        self.t_next = t + self.model.ta();
        self.input.clear();
    }
}

impl CoupledNode {
    fn min_child_tn(&self) -> Time {
        self.children
            .values()
            .map(HierNode::t_next)
            .fold(Time::INFINITY, Time::min)
    }

    fn transition(&mut self, t: Time) {
        let mut deliveries: Vec<(String, String, Value)> = Vec::new();
        for (name, child) in &self.children {
            for item in child.cached_output().items() {
                let route = (name.clone(), item.port.clone());
                if let Some(edges) = self.ic.get(&route) {
                    for edge in edges {
                        let value = self
                            .translations
                            .apply(edge.translation.as_deref(), &item.value)
                            .expect("translations were checked at construction");
                        deliveries.push((edge.to_component.clone(), edge.to_port.clone(), value));
                    }
                }
            }
        }
        for item in self.input.items() {
            if let Some(edges) = self.eic.get(&item.port) {
                for edge in edges {
                    let value = self
                        .translations
                        .apply(edge.translation.as_deref(), &item.value)
                        .expect("translations were checked at construction");
                    deliveries.push((edge.to_component.clone(), edge.to_port.clone(), value));
                }
            }
        }
        self.input.clear();
        for (component, port, value) in deliveries {
            self.children
                .get_mut(&component)
                .expect("couplings were validated")
                .inject(&port, value);
        }
        for child in self.children.values_mut() {
            if t == child.t_next() || child.has_input() {
                child.transition(t);
            }
        }
        self.t_last = t;
        self.t_next = self.min_child_tn();
    }

    fn build(
        spec: &CoupledSpec,
        registry: &BehaviorRegistry,
        translations: &Arc<TranslationRegistry>,
    ) -> Result<CoupledNode, CoreError> {
        let mut children = BTreeMap::new();
        for component in &spec.components {
            let node = match &component.model {
                ComponentModel::Atomic { kind, params } => HierNode::Atomic(AtomicNode {
                    model: registry.instantiate(kind, params)?,
                    t_last: Time::ZERO,
                    t_next: Time::INFINITY,
                    input: MessageBag::new(),
                    cached_output: MessageBag::new(),
                }),
                ComponentModel::Coupled(sub) => {
                    HierNode::Coupled(CoupledNode::build(sub, registry, translations)?)
                }
            };
            children.insert(component.name.clone(), node);
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
                eoc.entry((coupling.from.component.clone(), coupling.from.port.clone()))
                    .or_default()
                    .push(edge);
            } else {
                ic.entry((coupling.from.component.clone(), coupling.from.port.clone()))
                    .or_default()
                    .push(edge);
            }
        }
        Ok(CoupledNode {
            name: spec.name.clone(),
            children,
            eic,
            ic,
            eoc,
            translations: Arc::clone(translations),
            t_last: Time::ZERO,
            t_next: Time::INFINITY,
            input: MessageBag::new(),
            cached_output: MessageBag::new(),
        })
    }
}

/// The root coordinator: drives the tree and records root outputs.
pub struct RootSim {
    root: HierNode,
}

impl RootSim {
    pub fn new(
        spec: &CoupledSpec,
        registry: &BehaviorRegistry,
        translations: &Arc<TranslationRegistry>,
    ) -> Result<RootSim, CoreError> {
        let violations = crate::coupled::validate_coupled(spec, registry);
        if !violations.is_empty() {
            return Err(CoreError::InvalidModel(join_violations(&violations)));
        }
        let mut root = HierNode::Coupled(CoupledNode::build(spec, registry, translations)?);
        root.initialize(Time::ZERO);
        Ok(RootSim { root })
    }

    pub fn name(&self) -> &str {
        match &self.root {
            HierNode::Coupled(node) => &node.name,
            HierNode::Atomic(_) => unreachable!("root is always coupled"),
        }
    }

    /// Runs to a bound and returns the root output trace: one entry per
    /// event time with a non-empty root output bag.
    pub fn run(&mut self, bound: RunBound) -> Vec<(Time, MessageBag)> {
        let mut outputs = Vec::new();
        let mut cycles = 0;
        loop {
            let t = self.root.t_next();
            if cycles >= bound.max_cycles || !t.is_finite() || t > bound.end_time {
                break;
            }
            self.root.collect_output(t);
            let out = self.root.cached_output().clone();
            if !out.is_empty() {
                outputs.push((t, out));
            }
            self.root.transition(t);
            cycles += 1;
        }
        outputs
    }
}

/// Builds the tree and runs it from `t = 0`.
pub fn run_hierarchical(
    spec: &CoupledSpec,
    registry: &BehaviorRegistry,
    translations: &Arc<TranslationRegistry>,
    bound: RunBound,
) -> Result<Vec<(Time, MessageBag)>, CoreError> {
    let mut sim = RootSim::new(spec, registry, translations)?;
    Ok(sim.run(bound))
}
