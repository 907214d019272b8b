//! Deterministic pseudo-random model families.
//!
//! [`random_two_level_spec`] builds a small feed-forward coupled model from
//! the experimental-frame kinds: a few generators and processors at the top
//! level plus one nested coupled cluster, with couplings chosen by a seeded
//! generator. The same seed always yields the same spec, which makes the
//! family usable for differential testing (one model, several engines) and
//! for benchmarks.
//!
//! All timing parameters are dyadic rationals, so event times stay exact in
//! binary floating point no matter how an engine associates its clock
//! arithmetic.

use crate::coupled::{Component, ComponentModel, Coupling, CoupledSpec, PortRef};
use crate::message::Value;
use crate::registry::Params;

/// SplitMix64; good enough dispersion for picking model shapes.
struct Mix(u64);

impl Mix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

/// Exactly representable and closed under the additions an engine performs.
const DYADIC_STEPS: [f64; 6] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];

fn dyadic(rng: &mut Mix) -> f64 {
    DYADIC_STEPS[rng.below(DYADIC_STEPS.len() as u64) as usize]
}

fn generator(rng: &mut Mix) -> ComponentModel {
    ComponentModel::Atomic {
        kind: "ef.generator".into(),
        params: Params::from([("period".to_string(), Value::Real(dyadic(rng)))]),
    }
}

fn processor(rng: &mut Mix) -> ComponentModel {
    ComponentModel::Atomic {
        kind: "ef.processor".into(),
        params: Params::from([("procTime".to_string(), Value::Real(dyadic(rng)))]),
    }
}

/// A two-level coupled model: generators feeding top-level processors and a
/// nested processor cluster, everything ultimately draining to the root
/// `out` port. The shape (component counts, chain length, and which target
/// each feed hits) is a pure function of `seed`.
pub fn random_two_level_spec(seed: u64) -> CoupledSpec {
    let mut rng = Mix(seed);

    let n_generators = 1 + rng.below(3) as usize;
    let n_processors = 1 + rng.below(2) as usize;
    let chain_len = 1 + rng.below(2) as usize;

    // Nested cluster: feed -> P1 -> ... -> Pn -> yield.
    let mut cluster_components = Vec::new();
    let mut cluster_couplings = vec![Coupling {
        from: PortRef::new("Cluster", "feed"),
        to: PortRef::new("P1", "in"),
        translation: None,
    }];
    for i in 1..=chain_len {
        cluster_components.push(Component {
            name: format!("P{i}"),
            model: processor(&mut rng),
        });
        let from = PortRef::new(format!("P{i}"), "out");
        let to = if i == chain_len {
            PortRef::new("Cluster", "yield")
        } else {
            PortRef::new(format!("P{}", i + 1), "in")
        };
        cluster_couplings.push(Coupling {
            from,
            to,
            translation: None,
        });
    }
    let cluster = CoupledSpec {
        name: "Cluster".into(),
        input_ports: vec!["feed".into()],
        output_ports: vec!["yield".into()],
        components: cluster_components,
        couplings: cluster_couplings,
    };

    let mut components = Vec::new();
    let mut couplings = Vec::new();
    for i in 1..=n_generators {
        components.push(Component {
            name: format!("Gen{i}"),
            model: generator(&mut rng),
        });
    }
    for i in 1..=n_processors {
        components.push(Component {
            name: format!("Srv{i}"),
            model: processor(&mut rng),
        });
    }
    components.push(Component {
        name: "Cluster".into(),
        model: ComponentModel::Coupled(Box::new(cluster)),
    });

    // Each generator feeds the cluster, a top-level server, or the root
    // directly; the first one always feeds the cluster so the nested level
    // sees traffic in every model of the family.
    for i in 1..=n_generators {
        let from = PortRef::new(format!("Gen{i}"), "out");
        let to = if i == 1 {
            PortRef::new("Cluster", "feed")
        } else {
            match rng.below(3) {
                0 => PortRef::new("Cluster", "feed"),
                1 => PortRef::new(
                    format!("Srv{}", 1 + rng.below(n_processors as u64)),
                    "in",
                ),
                _ => PortRef::new("Top", "out"),
            }
        };
        couplings.push(Coupling {
            from,
            to,
            translation: None,
        });
    }
    for i in 1..=n_processors {
        couplings.push(Coupling {
            from: PortRef::new(format!("Srv{i}"), "out"),
            to: PortRef::new("Top", "out"),
            translation: None,
        });
    }
    couplings.push(Coupling {
        from: PortRef::new("Cluster", "yield"),
        to: PortRef::new("Top", "out"),
        translation: None,
    });

    CoupledSpec {
        name: "Top".into(),
        input_ports: vec![],
        output_ports: vec!["out".into()],
        components,
        couplings,
    }
}
