//! Engine and protocol hot paths: coordinator cycles on the bundled
//! pipeline, the hierarchical tree against its flattened equivalent, and
//! canonical envelope round-trips.

use std::collections::BTreeMap;
use std::hint::black_box;
use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use serde_json::json;

use devs_core::models::{random_two_level_spec, register_builtins};
use devs_core::proto::{
    decode_envelope, encode_envelope, parse_manifest, AssignmentMap, Envelope, SimulatorKey,
};
use devs_core::sim::{run_flat, run_hierarchical, Coordinator, LocalService, RunBound};
use devs_core::{BehaviorRegistry, CoupledSpec, Time, TranslationRegistry};

fn builtin_registry() -> Arc<BehaviorRegistry> {
    let mut registry = BehaviorRegistry::new();
    register_builtins(&mut registry);
    Arc::new(registry)
}

fn pipeline_spec() -> CoupledSpec {
    let path = concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../manifests/ef-pipeline.devs.json"
    );
    parse_manifest(&std::fs::read(path).expect("bundled manifest"))
        .expect("manifest parses")
        .to_coupled_spec()
        .expect("manifest lifts to a spec")
}

fn coordinator_cycles(c: &mut Criterion) {
    let spec = pipeline_spec();
    let registry = builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());
    let placement = AssignmentMap(
        spec.components
            .iter()
            .map(|component| (component.name.clone(), "local".to_string()))
            .collect(),
    );

    let mut group = c.benchmark_group("coordinator_cycles");
    for cycles in [8u64, 64, 512] {
        group.throughput(Throughput::Elements(cycles));
        group.bench_with_input(BenchmarkId::from_parameter(cycles), &cycles, |b, &cycles| {
            b.iter(|| {
                let mut services = BTreeMap::new();
                services.insert(
                    "local".to_string(),
                    LocalService::new(registry.clone(), translations.clone()),
                );
                let mut coordinator =
                    Coordinator::new(&spec, &placement, services, "bench", translations.clone())
                        .expect("coordinator construction");
                coordinator.initialize(Time::ZERO).expect("initialize");
                coordinator
                    .simulate(RunBound::cycles(cycles))
                    .expect("run");
                black_box(coordinator.trace().len())
            })
        });
    }
    group.finish();
}

fn flatten_vs_hierarchy(c: &mut Criterion) {
    let spec = random_two_level_spec(7);
    let registry = builtin_registry();
    let translations = Arc::new(TranslationRegistry::new());
    let bound = RunBound::cycles(20);

    let mut group = c.benchmark_group("flatten_vs_hierarchy");
    group.bench_function("hierarchy", |b| {
        b.iter(|| {
            black_box(
                run_hierarchical(&spec, &registry, &translations, bound)
                    .expect("hierarchical run")
                    .len(),
            )
        })
    });
    group.bench_function("flat", |b| {
        b.iter(|| {
            black_box(
                run_flat(&spec, &registry, &translations, bound)
                    .expect("flat run")
                    .len(),
            )
        })
    });
    group.finish();
}

fn envelope_round_trip(c: &mut Criterion) {
    let envelope = Envelope::new("sim.receiveInput", "bench-0001")
        .with_key(SimulatorKey::new("Processor", "192.168.1.2").expect("key"))
        .with_time(Time::finite(3.5).expect("finite"))
        .with_body(json!({
            "fromPort": "out",
            "toPort": "in",
            "value": { "job": "Job7", "processingTime": 2.5, "tags": ["a", "b", "c"] },
        }));
    let bytes = encode_envelope(&envelope).expect("envelope encodes");

    let mut group = c.benchmark_group("envelope_round_trip");
    group.throughput(Throughput::Bytes(bytes.len() as u64));
    group.bench_function("encode", |b| {
        b.iter(|| black_box(encode_envelope(black_box(&envelope)).expect("encodes")))
    });
    group.bench_function("decode_encode", |b| {
        b.iter(|| {
            let decoded = decode_envelope(black_box(&bytes)).expect("decodes");
            black_box(encode_envelope(&decoded).expect("re-encodes"))
        })
    });
    group.finish();
}

criterion_group!(
    benches,
    coordinator_cycles,
    flatten_vs_hierarchy,
    envelope_round_trip
);
criterion_main!(benches);
