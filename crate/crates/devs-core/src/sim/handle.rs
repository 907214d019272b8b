//! One model instance plus everything a simulator tracks for it.

use serde::{Deserialize, Serialize};

use super::service::SimError;
use crate::behavior::Model;
use crate::message::{MessageBag, Value};
use crate::proto::SimulatorKey;
use crate::time::Time;

/// Which transition function a `deltfcn` call dispatched to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    /// Nothing happened: no input and the call was not at the event time.
    None,
    Internal,
    External,
    Confluent,
}

/// A simulator for a single model instance.
///
/// Tracks the last event time `tL`, the next scheduled event time `tN`, the
/// accumulated input bag, and the output bag produced by the latest `lambda`
/// call. All mutation goes through the methods below, which maintain the
/// invariant `tL <= tN`.
#[derive(Debug, Clone)]
pub struct SimulatorHandle {
    key: SimulatorKey,
    model: Model,
    t_last: Time,
    t_next: Time,
    input: MessageBag,
    output: MessageBag,
}

impl SimulatorHandle {
    /// A fresh handle is inert (`tL = 0`, `tN = inf`) until initialized.
    pub fn new(key: SimulatorKey, model: Model) -> Self {
        SimulatorHandle {
            key,
            model,
            t_last: Time::ZERO,
            t_next: Time::INFINITY,
            input: MessageBag::new(),
            output: MessageBag::new(),
        }
    }

    pub fn key(&self) -> &SimulatorKey {
        &self.key
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn t_last(&self) -> Time {
        self.t_last
    }

    pub fn t_next(&self) -> Time {
        self.t_next
    }

    pub fn input(&self) -> &MessageBag {
        &self.input
    }

    pub fn output(&self) -> &MessageBag {
        &self.output
    }

    pub fn phase(&self) -> String {
        self.model.phase()
    }

    pub fn snapshot(&self) -> Value {
        self.model.snapshot()
    }

    /// Aligns the clocks to a start time and schedules the first internal
    /// event. Buffers are cleared; the model keeps its current state, so
    /// re-initializing resumes the same state on a fresh timeline.
    pub fn initialize(&mut self, t: Time) {
        self.t_last = t;
        self.t_next = t + self.model.ta();
        self.input.clear();
        self.output.clear();
    }

    /// Appends one value to the input bag after validating the target port.
    /// The bag is unchanged when the port is unknown.
    pub fn receive_input(&mut self, value: &Value, to_port: &str) -> Result<(), SimError> {
        self.model.check_input_port(to_port)?;
        self.input.push(to_port, value.clone());
        Ok(())
    }

    /// Computes the output for time `t`: the model's lambda when `t` is the
    /// scheduled event time, empty otherwise. Always overwrites the previous
    /// output, so a stale bag never leaks into a later cycle.
    pub fn lambda(&mut self, t: Time) {
        self.output = if t == self.t_next {
            self.model.lambda()
        } else {
            MessageBag::new()
        };
    }

    /// Applies the transition for time `t` and reschedules.
    ///
    /// Dispatch, given the input bag and the clocks:
    /// - past `tN` or before `tL`: protocol violation, state untouched;
    /// - empty input, `t != tN`: nothing to do, clocks and input unchanged;
    /// - input present, `t == tN`: confluent transition;
    /// - empty input, `t == tN`: internal transition;
    /// - input present, `t < tN`: external transition with elapsed `t - tL`.
    ///
    /// After a real transition `tL = t`, `tN = t + ta`, and the input bag is
    /// emptied. The output bag is left alone; `lambda` owns it.
    pub fn deltfcn(&mut self, t: Time) -> Result<Transition, SimError> {
        if t > self.t_next || t < self.t_last {
            return Err(SimError::ProtocolViolation {
                key: self.key.to_string(),
                t,
                t_next: self.t_next,
            });
        }
        let at_event = t == self.t_next;
        let transition = if self.input.is_empty() && !at_event {
            return Ok(Transition::None);
        } else if !self.input.is_empty() && at_event {
            self.model.delta_con(&self.input)?;
            Transition::Confluent
        } else if self.input.is_empty() {
            self.model.delta_int();
            Transition::Internal
        } else {
            let elapsed = t.since(self.t_last);
            self.model.delta_ext(elapsed, &self.input)?;
            Transition::External
        };
        self.t_last = t;
        self.t_next = t + self.model.ta();
        self.input.clear();
        Ok(transition)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::AtomicBehavior;
    use crate::message::PortValue;

    /// Emits its phase every `period` until stopped by any input.
    #[derive(Debug, Clone)]
    struct Ticker {
        period: Time,
        running: bool,
        ticks: u32,
    }

    impl Ticker {
        fn new(period: f64) -> Self {
            Ticker {
                period: Time::finite(period).unwrap(),
                running: true,
                ticks: 0,
            }
        }
    }

    impl AtomicBehavior for Ticker {
        fn input_ports(&self) -> Vec<String> {
            vec!["stop".into()]
        }

        fn output_ports(&self) -> Vec<String> {
            vec!["tick".into()]
        }

        fn ta(&self) -> Time {
            if self.running {
                self.period
            } else {
                Time::INFINITY
            }
        }

        fn delta_int(&mut self) {
            self.ticks += 1;
        }

        fn delta_ext(&mut self, _elapsed: Time, _input: &MessageBag) {
            self.running = false;
        }

        fn lambda(&self) -> MessageBag {
            MessageBag::from_iter([("tick".to_string(), Value::Int(i64::from(self.ticks)))])
        }

        fn phase(&self) -> String {
            if self.running { "running" } else { "stopped" }.into()
        }

        fn snapshot(&self) -> Value {
            Value::Record(
                [
                    ("running".to_string(), Value::Bool(self.running)),
                    ("ticks".to_string(), Value::Int(i64::from(self.ticks))),
                ]
                .into(),
            )
        }

        fn clone_box(&self) -> Box<dyn AtomicBehavior> {
            Box::new(self.clone())
        }
    }

    fn ticker_handle() -> SimulatorHandle {
        let model = Model::new("test.ticker", Box::new(Ticker::new(2.0)));
        SimulatorHandle::new(SimulatorKey::new("T", "local").unwrap(), model)
    }

    fn t(v: f64) -> Time {
        Time::finite(v).unwrap()
    }

    #[test]
    fn fresh_handle_is_inert_until_initialized() {
        let mut handle = ticker_handle();
        assert_eq!(handle.t_next(), Time::INFINITY);
        handle.initialize(t(0.0));
        assert_eq!(handle.t_last(), t(0.0));
        assert_eq!(handle.t_next(), t(2.0));
    }

    #[test]
    fn internal_transition_advances_clocks() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.lambda(t(2.0));
        assert_eq!(handle.output().len(), 1);
        let tr = handle.deltfcn(t(2.0)).unwrap();
        assert_eq!(tr, Transition::Internal);
        assert_eq!(handle.t_last(), t(2.0));
        assert_eq!(handle.t_next(), t(4.0));
    }

    #[test]
    fn external_transition_uses_elapsed_time_and_clears_input() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.receive_input(&Value::Bool(true), "stop").unwrap();
        let tr = handle.deltfcn(t(0.5)).unwrap();
        assert_eq!(tr, Transition::External);
        assert!(handle.input().is_empty());
        assert_eq!(handle.t_next(), Time::INFINITY);
        assert_eq!(handle.phase(), "stopped");
    }

    #[test]
    fn confluent_when_input_meets_event_time() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.receive_input(&Value::Bool(true), "stop").unwrap();
        let tr = handle.deltfcn(t(2.0)).unwrap();
        assert_eq!(tr, Transition::Confluent);
    }

    #[test]
    fn off_schedule_call_without_input_is_a_no_op() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        let tr = handle.deltfcn(t(1.0)).unwrap();
        assert_eq!(tr, Transition::None);
        assert_eq!(handle.t_last(), t(0.0));
        assert_eq!(handle.t_next(), t(2.0));
    }

    #[test]
    fn calls_outside_the_clock_window_are_violations() {
        let mut handle = ticker_handle();
        handle.initialize(t(1.0));
        assert!(matches!(
            handle.deltfcn(t(3.5)),
            Err(SimError::ProtocolViolation { .. })
        ));
        assert!(matches!(
            handle.deltfcn(t(0.5)),
            Err(SimError::ProtocolViolation { .. })
        ));
    }

    #[test]
    fn lambda_off_schedule_clears_stale_output() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.lambda(t(2.0));
        assert!(!handle.output().is_empty());
        handle.lambda(t(3.0));
        assert!(handle.output().is_empty());
    }

    #[test]
    fn unknown_input_port_leaves_the_bag_untouched() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        let err = handle.receive_input(&Value::Int(1), "bogus");
        assert!(err.is_err());
        assert!(handle.input().is_empty());
    }

    #[test]
    fn reinitialize_resets_clocks_but_keeps_state() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.receive_input(&Value::Bool(true), "stop").unwrap();
        handle.deltfcn(t(1.0)).unwrap();
        assert_eq!(handle.phase(), "stopped");
        handle.initialize(t(0.0));
        assert_eq!(handle.phase(), "stopped");
        assert_eq!(handle.t_next(), Time::INFINITY);
        assert!(handle.input().is_empty());
    }

    #[test]
    fn input_items_keep_arrival_order() {
        let mut handle = ticker_handle();
        handle.initialize(t(0.0));
        handle.receive_input(&Value::Int(1), "stop").unwrap();
        handle.receive_input(&Value::Int(2), "stop").unwrap();
        let items: Vec<&PortValue> = handle.input().items().iter().collect();
        assert_eq!(items[0].value, Value::Int(1));
        assert_eq!(items[1].value, Value::Int(2));
    }
}
