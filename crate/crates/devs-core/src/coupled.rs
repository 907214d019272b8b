//! Coupled model specifications and structural validation.
//!
//! A [`CoupledSpec`] is the network form of a model: named components (atomic
//! or nested coupled), the coupled model's own input/output ports, and
//! couplings. A coupling endpoint that names the coupled model itself refers
//! to one of its external ports, which covers external-input, internal, and
//! external-output couplings with a single shape.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

use crate::registry::{BehaviorRegistry, Params};

/// `component.port` endpoint; `component` may be the enclosing coupled
/// model's name to address its external ports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortRef {
    pub component: String,
    pub port: String,
}

impl PortRef {
    pub fn new(component: impl Into<String>, port: impl Into<String>) -> PortRef {
        PortRef {
            component: component.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.component, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub from: PortRef,
    pub to: PortRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
}

impl Coupling {
    pub fn new(from: PortRef, to: PortRef) -> Coupling {
        Coupling {
            from,
            to,
            translation: None,
        }
    }
}

/// The model behind a component: an atomic behavior reference or a nested
/// coupled specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ComponentModel {
    Atomic {
        kind: String,
        #[serde(default, skip_serializing_if = "Params::is_empty")]
        params: Params,
    },
    Coupled(Box<CoupledSpec>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub model: ComponentModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoupledSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_ports: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output_ports: Vec<String>,
    pub components: Vec<Component>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<Coupling>,
}

impl CoupledSpec {
    pub fn component_names(&self) -> Vec<String> {
        self.components.iter().map(|c| c.name.clone()).collect()
    }

    pub fn component(&self, name: &str) -> Option<&Component> {
        self.components.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("coupled model {coupled:?}: invalid name {name:?}: {reason}")]
    BadName {
        coupled: String,
        name: String,
        reason: String,
    },

    #[error("coupled model {coupled:?}: duplicate component name {name:?}")]
    DuplicateComponent { coupled: String, name: String },

    #[error("coupled model {coupled:?}: duplicate port {port:?}")]
    DuplicatePort { coupled: String, port: String },

    #[error("coupled model {coupled:?}: component {component:?} uses unknown behavior kind {kind:?}")]
    UnknownKind {
        coupled: String,
        component: String,
        kind: String,
    },

    #[error("coupled model {coupled:?}: component {component:?} failed to instantiate: {detail}")]
    BadComponent {
        coupled: String,
        component: String,
        detail: String,
    },

    #[error("coupled model {coupled:?}: coupling endpoint {endpoint} names an unknown component")]
    UnknownComponent { coupled: String, endpoint: String },

    #[error("coupled model {coupled:?}: coupling endpoint {endpoint} names an undeclared port")]
    UnknownPort { coupled: String, endpoint: String },

    #[error("coupled model {coupled:?}: coupling {endpoint} -> {endpoint} connects a port to itself")]
    SelfLoop { coupled: String, endpoint: String },

    #[error("coupled model {coupled:?}: coupling endpoint {endpoint} has the wrong direction: {reason}")]
    BadDirection {
        coupled: String,
        endpoint: String,
        reason: String,
    },
}

fn check_name(coupled: &str, name: &str, out: &mut Vec<Violation>) {
    let reason = if name.is_empty() {
        Some("empty".to_string())
    } else if name.contains('@') || name.contains('.') {
        Some("must not contain '@' or '.'".to_string())
    } else if name.chars().any(char::is_whitespace) {
        Some("must not contain whitespace".to_string())
    } else {
        None
    };
    if let Some(reason) = reason {
        out.push(Violation::BadName {
            coupled: coupled.to_string(),
            name: name.to_string(),
            reason,
        });
    }
}

/// Port sets of one component, resolved for endpoint checking.
struct ComponentPorts {
    inputs: Vec<String>,
    outputs: Vec<String>,
}

/// Validates `spec` structurally and returns every violation found, not just
/// the first: unique valid names, known behavior kinds with instantiable
/// parameters, endpoints that resolve to declared ports, correct coupling
/// direction, and no port coupled directly to itself. Nested coupled
/// components are validated recursively.
pub fn validate_coupled(spec: &CoupledSpec, registry: &BehaviorRegistry) -> Vec<Violation> {
    let mut out = Vec::new();
    validate_into(spec, registry, &mut out);
    out
}

fn validate_into(spec: &CoupledSpec, registry: &BehaviorRegistry, out: &mut Vec<Violation>) {
    let coupled = spec.name.clone();
    check_name(&coupled, &spec.name, out);

    for ports in [&spec.input_ports, &spec.output_ports] {
        let mut seen = BTreeSet::new();
        for p in ports {
            check_name(&coupled, p, out);
            if !seen.insert(p) {
                out.push(Violation::DuplicatePort {
                    coupled: coupled.clone(),
                    port: p.clone(),
                });
            }
        }
    }

    let mut seen = BTreeSet::new();
    let mut resolved: Vec<(String, ComponentPorts)> = Vec::new();
    for component in &spec.components {
        check_name(&coupled, &component.name, out);
        if component.name == spec.name {
            out.push(Violation::BadName {
                coupled: coupled.clone(),
                name: component.name.clone(),
                reason: "collides with the coupled model's own name".to_string(),
            });
        }
        if !seen.insert(component.name.clone()) {
            out.push(Violation::DuplicateComponent {
                coupled: coupled.clone(),
                name: component.name.clone(),
            });
            continue;
        }
        match &component.model {
            ComponentModel::Atomic { kind, params } => {
                if !registry.contains(kind) {
                    out.push(Violation::UnknownKind {
                        coupled: coupled.clone(),
                        component: component.name.clone(),
                        kind: kind.clone(),
                    });
                    continue;
                }
                match registry.instantiate(kind, params) {
                    Ok(model) => resolved.push((
                        component.name.clone(),
                        ComponentPorts {
                            inputs: model.input_ports().to_vec(),
                            outputs: model.output_ports().to_vec(),
                        },
                    )),
                    Err(e) => out.push(Violation::BadComponent {
                        coupled: coupled.clone(),
                        component: component.name.clone(),
                        detail: e.to_string(),
                    }),
                }
            }
            ComponentModel::Coupled(nested) => {
                validate_into(nested, registry, out);
                resolved.push((
                    component.name.clone(),
                    ComponentPorts {
                        inputs: nested.input_ports.clone(),
                        outputs: nested.output_ports.clone(),
                    },
                ));
            }
        }
    }

    let find = |name: &str| resolved.iter().find(|(n, _)| n == name).map(|(_, p)| p);

    for coupling in &spec.couplings {
        // Source: a component output port, or the coupled model's own input.
        let from_ok = if coupling.from.component == spec.name {
            if spec.input_ports.contains(&coupling.from.port) {
                true
            } else {
                out.push(Violation::UnknownPort {
                    coupled: coupled.clone(),
                    endpoint: coupling.from.to_string(),
                });
                false
            }
        } else {
            match find(&coupling.from.component) {
                None => {
                    out.push(Violation::UnknownComponent {
                        coupled: coupled.clone(),
                        endpoint: coupling.from.to_string(),
                    });
                    false
                }
                Some(ports) if ports.outputs.contains(&coupling.from.port) => true,
                Some(ports) if ports.inputs.contains(&coupling.from.port) => {
                    out.push(Violation::BadDirection {
                        coupled: coupled.clone(),
                        endpoint: coupling.from.to_string(),
                        reason: "a coupling source must be an output port".to_string(),
                    });
                    false
                }
                Some(_) => {
                    out.push(Violation::UnknownPort {
                        coupled: coupled.clone(),
                        endpoint: coupling.from.to_string(),
                    });
                    false
                }
            }
        };

        // Target: a component input port, or the coupled model's own output.
        let to_ok = if coupling.to.component == spec.name {
            if spec.output_ports.contains(&coupling.to.port) {
                true
            } else {
                out.push(Violation::UnknownPort {
                    coupled: coupled.clone(),
                    endpoint: coupling.to.to_string(),
                });
                false
            }
        } else {
            match find(&coupling.to.component) {
                None => {
                    out.push(Violation::UnknownComponent {
                        coupled: coupled.clone(),
                        endpoint: coupling.to.to_string(),
                    });
                    false
                }
                Some(ports) if ports.inputs.contains(&coupling.to.port) => true,
                Some(ports) if ports.outputs.contains(&coupling.to.port) => {
                    out.push(Violation::BadDirection {
                        coupled: coupled.clone(),
                        endpoint: coupling.to.to_string(),
                        reason: "a coupling target must be an input port".to_string(),
                    });
                    false
                }
                Some(_) => {
                    out.push(Violation::UnknownPort {
                        coupled: coupled.clone(),
                        endpoint: coupling.to.to_string(),
                    });
                    false
                }
            }
        };

        if from_ok && to_ok && coupling.from == coupling.to {
            out.push(Violation::SelfLoop {
                coupled: coupled.clone(),
                endpoint: coupling.from.to_string(),
            });
        }
    }
}

/// Joins violations into the single-line form carried by errors.
pub fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
