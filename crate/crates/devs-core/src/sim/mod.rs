//! Simulation engine.
//!
//! [`handle::SimulatorHandle`] wraps one model instance with its event
//! clocks and message buffers. [`service::SimulationService`] abstracts the
//! simulator operations so [`coordinator::Coordinator`] can drive handles
//! in-process or across the wire with identical semantics.
//!
//! [`flatten`] collapses a coupled model into a single atomic behavior;
//! [`hierarchy`] is a separately written tree-of-coordinators engine used to
//! check that collapsing preserves behavior. [`rt`] runs one simulator
//! against the wall clock with direct peer-to-peer message delivery.

pub mod coordinator;
pub mod flatten;
pub mod handle;
pub mod hierarchy;
pub mod rt;
pub mod service;
pub mod trace;

pub use coordinator::{Coordinator, RunBound, RunOutcome};
pub use flatten::{digraph_to_atomic, run_flat, FlattenedModel};
pub use handle::{SimulatorHandle, Transition};
pub use hierarchy::{run_hierarchical, RootSim};
pub use rt::{run_rt, RtArrival, RtConfig, RtDelivery, RtRoute, RtSummary};
pub use service::{DeltResult, LocalService, SimError, SimulationService};
pub use trace::{send_line, state_line};
