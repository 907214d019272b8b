//! Parallel DEVS modeling and distributed simulation core.
//!
//! The crate is organized around three layers:
//!
//! * the **formalism**: [`Time`], [`Value`], [`MessageBag`], the
//!   [`AtomicBehavior`] trait with its checked [`Model`] wrapper,
//!   [`CoupledSpec`] structures and their validation, and the
//!   [`BehaviorRegistry`] that turns kind identifiers into instances;
//! * the **simulation engine** ([`sim`]): per-model simulators driven by the
//!   four-way transition dispatcher, a root [`sim::Coordinator`] that runs the
//!   output/propagate/transition cycle over any [`sim::SimulationService`],
//!   closure under coupling via [`sim::FlattenedModel`], an independent
//!   hierarchical simulator tree, and a wall-clock runner for real-time
//!   execution with direct peer-to-peer message delivery;
//! * the **wire protocol** ([`proto`]): simulator keys, canonical JSON
//!   envelopes, model package manifests (`*.devs.json`), and round-robin
//!   component assignment.
//!
//! [`models`] ships the built-in experimental-frame behaviors (generator,
//! processor, transducer, acceptor) and the joint close-air-support scenario
//! used by the bundled manifests.
//!
//! Everything here is transport-free: networked deployments wrap these types
//! behind HTTP services, and in-process runs drive the very same engine
//! through [`sim::LocalService`].

pub mod behavior;
pub mod coupled;
pub mod error;
pub mod message;
pub mod models;
pub mod proto;
pub mod registry;
pub mod sim;
pub mod time;

pub use behavior::{AtomicBehavior, Model};
pub use coupled::{validate_coupled, Component, ComponentModel, Coupling, CoupledSpec, PortRef, Violation};
pub use error::CoreError;
pub use message::{MessageBag, PortValue, Value};
pub use registry::{BehaviorRegistry, Params, TranslationRegistry};
pub use time::Time;
