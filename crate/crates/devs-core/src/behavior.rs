//! Atomic model behavior and its checked wrapper.
//!
//! [`AtomicBehavior`] is the 7-tuple minus the structure the enclosing
//! coupled model supplies: states live inside the implementor, ports are
//! declared, and the four characteristic functions operate on `self`.
//!
//! Contract:
//!
//! * `ta` maps the current state to a non-negative time advance, with
//!   [`Time::INFINITY`] for passive states;
//! * `delta_ext` receives `0 <= elapsed <= ta(state)` and a non-empty bag
//!   whose items sit on declared input ports, grouped per port;
//! * `delta_con` resolves collisions; the default applies the internal
//!   transition first and then the external one with zero elapsed time, so
//!   it coincides with `delta_int` on an empty bag. Overrides must preserve
//!   exactly that identity: `delta_con(s, Φ) == delta_int(s)`;
//! * `lambda` is a pure function of the state and emits only on declared
//!   output ports.
//!
//! [`Model`] wraps a boxed behavior with the port checks callers rely on, so
//! behaviors themselves can assume validated input.

use crate::error::CoreError;
use crate::message::{MessageBag, Value};
use crate::time::Time;

pub trait AtomicBehavior: Send {
    fn input_ports(&self) -> Vec<String>;
    fn output_ports(&self) -> Vec<String>;

    /// Time advance of the current state.
    fn ta(&self) -> Time;

    fn delta_int(&mut self);

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag);

    fn delta_con(&mut self, input: &MessageBag) {
        self.delta_int();
        if !input.is_empty() {
            self.delta_ext(Time::ZERO, input);
        }
    }

    /// Output of the current state; must not depend on anything but state.
    fn lambda(&self) -> MessageBag;

    /// Short phase label used in run logs.
    fn phase(&self) -> String;

    /// Structured snapshot of the full state, used for state equality in
    /// tests and for diagnostics.
    fn snapshot(&self) -> Value;

    fn clone_box(&self) -> Box<dyn AtomicBehavior>;
}

/// An instantiated atomic model: a behavior plus checked entry points.
pub struct Model {
    kind: String,
    input_ports: Vec<String>,
    output_ports: Vec<String>,
    behavior: Box<dyn AtomicBehavior>,
}

impl Model {
    pub fn new(kind: impl Into<String>, behavior: Box<dyn AtomicBehavior>) -> Model {
        Model {
            kind: kind.into(),
            input_ports: behavior.input_ports(),
            output_ports: behavior.output_ports(),
            behavior,
        }
    }

    pub fn kind(&self) -> &str {
        &self.kind
    }

    pub fn input_ports(&self) -> &[String] {
        &self.input_ports
    }

    pub fn output_ports(&self) -> &[String] {
        &self.output_ports
    }

    pub fn ta(&self) -> Time {
        self.behavior.ta()
    }

    pub fn delta_int(&mut self) {
        self.behavior.delta_int();
    }

    /// Rejects items on undeclared ports without touching state, then hands
    /// the behavior the bag in grouped (per-port, lexicographic) form.
    pub fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) -> Result<(), CoreError> {
        self.check_input_ports(input)?;
        self.behavior.delta_ext(elapsed, &input.grouped());
        Ok(())
    }

    pub fn delta_con(&mut self, input: &MessageBag) -> Result<(), CoreError> {
        self.check_input_ports(input)?;
        self.behavior.delta_con(&input.grouped());
        Ok(())
    }

    pub fn lambda(&self) -> MessageBag {
        let out = self.behavior.lambda();
        debug_assert!(
            out.ports()
                .iter()
                .all(|p| self.output_ports.iter().any(|d| d == p)),
            "{} emitted on an undeclared port",
            self.kind
        );
        out
    }

    pub fn phase(&self) -> String {
        self.behavior.phase()
    }

    pub fn snapshot(&self) -> Value {
        self.behavior.snapshot()
    }

    pub fn check_input_port(&self, port: &str) -> Result<(), CoreError> {
        if self.input_ports.iter().any(|d| d == port) {
            Ok(())
        } else {
            Err(CoreError::PortUnknown {
                model: self.kind.clone(),
                port: port.to_string(),
            })
        }
    }

    fn check_input_ports(&self, input: &MessageBag) -> Result<(), CoreError> {
        for pv in input.items() {
            self.check_input_port(&pv.port)?;
        }
        Ok(())
    }
}

impl Clone for Model {
    fn clone(&self) -> Self {
        Model {
            kind: self.kind.clone(),
            input_ports: self.input_ports.clone(),
            output_ports: self.output_ports.clone(),
            behavior: self.behavior.clone_box(),
        }
    }
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("kind", &self.kind)
            .field("phase", &self.behavior.phase())
            .finish()
    }
}
