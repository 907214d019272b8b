//! Model package manifests (`*.devs.json`).
//!
//! A manifest is the uploadable description of a model package: a format
//! version, a package name, a list of coupled model definitions, and the name
//! of the top model. Components reference either an atomic behavior kind with
//! parameters or a sibling coupled definition by name; couplings use compact
//! `component.port` strings, where the defining coupled model's own name
//! addresses its external ports.
//!
//! Parsing is strict (unknown fields rejected) and schema errors carry a
//! JSON-pointer-style locator so a bad manifest names the offending element.

use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

use super::envelope::to_canonical_json;
use super::ProtoError;
use crate::coupled::{Component, ComponentModel, Coupling, CoupledSpec, PortRef};
use crate::registry::Params;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_EXTENSION: &str = ".devs.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ModelManifest {
    pub format_version: u32,
    pub package: String,
    pub top_model: String,
    pub coupled: Vec<CoupledDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CoupledDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub input_ports: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub output_ports: Vec<String>,
    pub components: Vec<ComponentDef>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<CouplingDef>,
}

/// Exactly one of `atomic` or `coupled` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct ComponentDef {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub atomic: Option<AtomicDef>,
    /// Name of a coupled definition in the same manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupled: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct AtomicDef {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Params::is_empty")]
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct CouplingDef {
    /// `component.port` source endpoint.
    pub from: String,
    /// `component.port` target endpoint.
    pub to: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
}

fn schema_err(pointer: String, detail: impl Into<String>) -> ProtoError {
    ProtoError::Schema {
        pointer,
        detail: detail.into(),
    }
}

/// Parses and schema-checks a manifest. Registry-dependent checks (behavior
/// kinds, component ports, translations) belong to compilation; this layer
/// guarantees the document is structurally sound and resolvable.
pub fn parse_manifest(bytes: &[u8]) -> Result<ModelManifest, ProtoError> {
    // A lenient pre-pass isolates the version check from strict field
    // handling, so an unknown future version errors as such instead of as a
    // pile of unknown fields.
    let tree: serde_json::Value =
        serde_json::from_slice(bytes).map_err(|e| ProtoError::from_serde(&e))?;
    match tree.get("formatVersion") {
        None => return Err(schema_err("/formatVersion".into(), "missing")),
        Some(v) => {
            let found = v.as_i64().unwrap_or(-1);
            if found != FORMAT_VERSION as i64 {
                return Err(ProtoError::UnsupportedVersion {
                    found,
                    supported: FORMAT_VERSION,
                });
            }
        }
    }

    let manifest: ModelManifest =
        serde_json::from_value(tree).map_err(|e| ProtoError::from_serde(&e))?;
    schema_check(&manifest)?;
    Ok(manifest)
}

/// Emits canonical bytes: sorted fields, no insignificant whitespace. The
/// same manifest always emits the same bytes.
pub fn emit_manifest(manifest: &ModelManifest) -> Result<Vec<u8>, ProtoError> {
    schema_check(manifest)?;
    to_canonical_json(manifest)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && !name.contains('@')
        && !name.contains('.')
        && !name.chars().any(char::is_whitespace)
}

fn check_endpoint(pointer: String, endpoint: &str) -> Result<(String, String), ProtoError> {
    let Some((component, port)) = endpoint.split_once('.') else {
        return Err(schema_err(pointer, format!("endpoint {endpoint:?} is not component.port")));
    };
    if component.is_empty() || port.is_empty() || port.contains('.') {
        return Err(schema_err(pointer, format!("endpoint {endpoint:?} is not component.port")));
    }
    Ok((component.to_string(), port.to_string()))
}

fn schema_check(manifest: &ModelManifest) -> Result<(), ProtoError> {
    if manifest.package.is_empty() {
        return Err(schema_err("/package".into(), "empty package name"));
    }

    let mut names = BTreeSet::new();
    for (i, def) in manifest.coupled.iter().enumerate() {
        if !valid_name(&def.name) {
            return Err(schema_err(format!("/coupled/{i}/name"), format!("invalid name {:?}", def.name)));
        }
        if !names.insert(def.name.as_str()) {
            return Err(schema_err(
                format!("/coupled/{i}/name"),
                format!("duplicate coupled model {:?}", def.name),
            ));
        }
    }

    if !names.contains(manifest.top_model.as_str()) {
        return Err(schema_err(
            "/topModel".into(),
            format!("names unknown coupled model {:?}", manifest.top_model),
        ));
    }

    for (i, def) in manifest.coupled.iter().enumerate() {
        let mut comp_names = BTreeSet::new();
        for (j, comp) in def.components.iter().enumerate() {
            let here = format!("/coupled/{i}/components/{j}");
            if !valid_name(&comp.name) {
                return Err(schema_err(format!("{here}/name"), format!("invalid name {:?}", comp.name)));
            }
            if !comp_names.insert(comp.name.as_str()) {
                return Err(schema_err(
                    format!("{here}/name"),
                    format!("duplicate component {:?}", comp.name),
                ));
            }
            match (&comp.atomic, &comp.coupled) {
                (Some(_), None) => {}
                (None, Some(reference)) => {
                    if !names.contains(reference.as_str()) {
                        return Err(schema_err(
                            format!("{here}/coupled"),
                            format!("references unknown coupled model {reference:?}"),
                        ));
                    }
                }
                (Some(_), Some(_)) => {
                    return Err(schema_err(here, "component is both atomic and coupled"));
                }
                (None, None) => {
                    return Err(schema_err(here, "component is neither atomic nor coupled"));
                }
            }
        }
        for (k, coupling) in def.couplings.iter().enumerate() {
            let base = format!("/coupled/{i}/couplings/{k}");
            let (from_comp, _) = check_endpoint(format!("{base}/from"), &coupling.from)?;
            let (to_comp, _) = check_endpoint(format!("{base}/to"), &coupling.to)?;
            for (comp, pointer) in [(from_comp, format!("{base}/from")), (to_comp, format!("{base}/to"))] {
                if comp != def.name && !comp_names.contains(comp.as_str()) {
                    return Err(schema_err(
                        pointer,
                        format!("endpoint names unknown component {comp:?}"),
                    ));
                }
            }
        }
    }

    // The coupled-reference graph must be acyclic from the top model.
    let mut stack = Vec::new();
    check_cycles(manifest, &manifest.top_model, &mut stack)?;
    Ok(())
}

fn check_cycles<'a>(
    manifest: &'a ModelManifest,
    name: &'a str,
    stack: &mut Vec<&'a str>,
) -> Result<(), ProtoError> {
    if stack.contains(&name) {
        return Err(schema_err(
            "/coupled".into(),
            format!("coupled model references form a cycle through {name:?}"),
        ));
    }
    let Some(def) = manifest.coupled.iter().find(|d| d.name == name) else {
        return Ok(());
    };
    stack.push(name);
    for comp in &def.components {
        if let Some(reference) = &comp.coupled {
            check_cycles(manifest, reference, stack)?;
        }
    }
    stack.pop();
    Ok(())
}

impl ModelManifest {
    /// Component names of the top model, in manifest order.
    pub fn top_component_names(&self) -> Vec<String> {
        self.coupled
            .iter()
            .find(|d| d.name == self.top_model)
            .map(|d| d.components.iter().map(|c| c.name.clone()).collect())
            .unwrap_or_default()
    }

    /// Resolves the top model into a self-contained [`CoupledSpec`] with
    /// nested coupled components inlined.
    pub fn to_coupled_spec(&self) -> Result<CoupledSpec, ProtoError> {
        self.resolve(&self.top_model)
    }

    fn resolve(&self, name: &str) -> Result<CoupledSpec, ProtoError> {
        let def = self
            .coupled
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| schema_err("/coupled".into(), format!("unknown coupled model {name:?}")))?;

        let mut components = Vec::new();
        for comp in &def.components {
            let model = match (&comp.atomic, &comp.coupled) {
                (Some(atomic), None) => ComponentModel::Atomic {
                    kind: atomic.kind.clone(),
                    params: atomic.params.clone(),
                },
                (None, Some(reference)) => {
                    let mut nested = self.resolve(reference)?;
                    // The component instance name wins over the definition
                    // name so couplings resolve against instance names.
                    rename_spec(&mut nested, &comp.name);
                    ComponentModel::Coupled(Box::new(nested))
                }
                _ => unreachable!("schema_check enforces exactly one of atomic/coupled"),
            };
            components.push(Component {
                name: comp.name.clone(),
                model,
            });
        }

        let mut couplings = Vec::new();
        for coupling in &def.couplings {
            let (fc, fp) = coupling
                .from
                .split_once('.')
                .expect("schema_check validated endpoints");
            let (tc, tp) = coupling
                .to
                .split_once('.')
                .expect("schema_check validated endpoints");
            couplings.push(Coupling {
                from: PortRef::new(fc, fp),
                to: PortRef::new(tc, tp),
                translation: coupling.translation.clone(),
            });
        }

        Ok(CoupledSpec {
            name: def.name.clone(),
            input_ports: def.input_ports.clone(),
            output_ports: def.output_ports.clone(),
            components,
            couplings,
        })
    }
}

fn rename_spec(spec: &mut CoupledSpec, new_name: &str) {
    for coupling in &mut spec.couplings {
        if coupling.from.component == spec.name {
            coupling.from.component = new_name.to_string();
        }
        if coupling.to.component == spec.name {
            coupling.to.component = new_name.to_string();
        }
    }
    spec.name = new_name.to_string();
}
