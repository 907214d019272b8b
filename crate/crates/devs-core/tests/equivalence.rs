//! Differential tests: three engine compositions, one semantics.
//!
//! The hierarchical tree, full flattening, and the coordinator (which
//! flattens nested coupled components but coordinates the top level itself)
//! must produce identical root outputs, timestamps included. Timing
//! parameters in the random family are dyadic so agreement is exact, not
//! approximate.

mod common;

use std::sync::Arc;

use devs_core::models::random_two_level_spec;
use devs_core::sim::{run_flat, run_hierarchical, RunBound};
use devs_core::{CoupledSpec, MessageBag, Time, TranslationRegistry};

fn coordinator_outputs(spec: &CoupledSpec, bound: RunBound) -> Vec<(Time, MessageBag)> {
    let mut coordinator = common::local_coordinator(spec);
    coordinator.initialize(Time::ZERO).expect("initialize");
    coordinator.simulate(bound).expect("run");
    coordinator.root_outputs().to_vec()
}

fn assert_engines_agree(spec: &CoupledSpec, bound: RunBound, label: &str) {
    let registry = common::builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());

    let hierarchical =
        run_hierarchical(spec, &registry, &translations, bound).expect("hierarchical run");
    let flat = run_flat(spec, &registry, &translations, bound).expect("flat run");
    assert_eq!(hierarchical, flat, "{label}: hierarchy vs flatten");

    let coordinated = coordinator_outputs(spec, bound);
    assert_eq!(hierarchical, coordinated, "{label}: hierarchy vs coordinator");
}

#[test]
fn random_family_agrees_across_engines() {
    for seed in 0..60 {
        let spec = random_two_level_spec(seed);
        assert_engines_agree(&spec, RunBound::cycles(40), &format!("seed {seed}"));
    }
}

#[test]
fn random_family_produces_output() {
    // Guards against the family degenerating into silence, which would make
    // the differential tests vacuous.
    let registry = common::builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());
    let mut total = 0;
    for seed in 0..60 {
        let spec = random_two_level_spec(seed);
        total += run_flat(&spec, &registry, &translations, RunBound::cycles(40))
            .expect("flat run")
            .len();
    }
    assert!(total > 60 * 5, "only {total} output events across the family");
}

#[test]
fn bundled_pipeline_agrees_across_engines() {
    let manifest = common::load_manifest("ef-pipeline.devs.json");
    let spec = manifest.to_coupled_spec().expect("resolves");
    assert_engines_agree(&spec, RunBound::cycles(30), "pipeline");
}

#[test]
fn bundled_scenario_agrees_across_engines() {
    let manifest = common::load_manifest("jcas.devs.json");
    let spec = manifest.to_coupled_spec().expect("resolves");
    assert_engines_agree(&spec, RunBound::cycles(11), "scenario");
}

#[test]
fn wrapping_a_spec_one_level_deeper_changes_nothing() {
    // Top(Inner(pipeline)) with the inner outputs lifted through both
    // levels: flattening depth must not affect the observable outputs.
    let manifest = common::load_manifest("ef-pipeline.devs.json");
    let mut inner = manifest.to_coupled_spec().expect("resolves");
    inner.name = "Inner".into();
    inner.output_ports = vec!["relayed".into()];
    inner.couplings.push(devs_core::Coupling {
        from: devs_core::PortRef::new("Processor", "out"),
        to: devs_core::PortRef::new("Inner", "relayed"),
        translation: None,
    });

    let outer = CoupledSpec {
        name: "Outer".into(),
        input_ports: vec![],
        output_ports: vec!["out".into()],
        components: vec![devs_core::Component {
            name: "Inner".into(),
            model: devs_core::ComponentModel::Coupled(Box::new(inner)),
        }],
        couplings: vec![devs_core::Coupling {
            from: devs_core::PortRef::new("Inner", "relayed"),
            to: devs_core::PortRef::new("Outer", "out"),
            translation: None,
        }],
    };
    assert_engines_agree(&outer, RunBound::cycles(30), "wrapped pipeline");

    // The lifted stream is the processor's completions.
    let registry = common::builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());
    let outputs = run_flat(&outer, &registry, &translations, RunBound::cycles(30))
        .expect("flat run");
    let times: Vec<f64> = outputs.iter().map(|(t, _)| t.as_f64()).collect();
    assert_eq!(&times[..3], &[3.5, 6.5, 9.5]);
}
