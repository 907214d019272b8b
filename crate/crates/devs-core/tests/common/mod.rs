//! Shared helpers for the integration tests. Not every test target uses
//! every helper.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use devs_core::models::register_builtins;
use devs_core::proto::{parse_manifest, AssignmentMap, ModelManifest};
use devs_core::sim::{Coordinator, LocalService};
use devs_core::{BehaviorRegistry, CoupledSpec, TranslationRegistry};

pub fn builtin_registry() -> Arc<BehaviorRegistry> {
    let mut registry = BehaviorRegistry::new();
    register_builtins(&mut registry);
    Arc::new(registry)
}

pub fn load_manifest(file_name: &str) -> ModelManifest {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../manifests")
        .join(file_name);
    let bytes =
        std::fs::read(&path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    parse_manifest(&bytes).expect("bundled manifest parses")
}

/// A coordinator with every component of `spec` placed on one in-process
/// service.
pub fn local_coordinator(spec: &CoupledSpec) -> Coordinator<LocalService> {
    let registry = builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());
    let service = LocalService::new(registry, translations.clone());
    let mut services = BTreeMap::new();
    services.insert("local".to_string(), service);
    let placement = AssignmentMap(
        spec.components
            .iter()
            .map(|c| (c.name.clone(), "local".to_string()))
            .collect(),
    );
    Coordinator::new(spec, &placement, services, "client", translations)
        .expect("coordinator construction")
}
