//! Experimental-frame models: generator, processor, transducer, acceptor.
//!
//! Together these form the classic job-flow benchmark: a generator emits
//! jobs at a fixed period, a single-server processor serves one job at a
//! time and drops arrivals while busy, a transducer observes both streams
//! for a window and reports statistics, and an acceptor stops the generator
//! when throughput falls short.

use std::collections::BTreeMap;

use crate::behavior::AtomicBehavior;
use crate::message::{MessageBag, Value};
use crate::registry::{int_param, positive_real_param, BehaviorRegistry};
use crate::time::Time;

pub const GENERATOR: &str = "ef.generator";
pub const PROCESSOR: &str = "ef.processor";
pub const TRANSDUCER: &str = "ef.transducer";
pub const ACCEPTOR: &str = "ef.acceptor";

pub fn register_ef(registry: &mut BehaviorRegistry) {
    registry.register(GENERATOR, |params| {
        let period = positive_real_param(GENERATOR, params, "period")?;
        Ok(Box::new(Generator::new(period)))
    });
    registry.register(PROCESSOR, |params| {
        let proc_time = positive_real_param(PROCESSOR, params, "procTime")?;
        Ok(Box::new(Processor::new(proc_time)))
    });
    registry.register(TRANSDUCER, |params| {
        let window = positive_real_param(TRANSDUCER, params, "observeWindow")?;
        Ok(Box::new(Transducer::new(window)))
    });
    registry.register(ACCEPTOR, |params| {
        let check_every = positive_real_param(ACCEPTOR, params, "checkEvery")?;
        let min_received = int_param(ACCEPTOR, params, "minReceived", 0)?;
        if min_received < 0 {
            return Err(crate::error::CoreError::InvalidParameter {
                kind: ACCEPTOR.to_string(),
                name: "minReceived".to_string(),
                reason: format!("expected a non-negative integer, got {min_received}"),
            });
        }
        Ok(Box::new(Acceptor::new(check_every, min_received as u64)))
    });
}

/// Emits `Job1`, `Job2`, ... on `out` every `period` until a value on
/// `stop` sends it passive.
#[derive(Debug, Clone)]
pub struct Generator {
    period: Time,
    active: bool,
    next_id: u64,
    count: u64,
}

impl Generator {
    fn new(period: f64) -> Generator {
        Generator {
            period: Time::finite(period).expect("factory validated"),
            active: true,
            next_id: 1,
            count: 0,
        }
    }
}

impl AtomicBehavior for Generator {
    fn input_ports(&self) -> Vec<String> {
        vec!["stop".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["out".into()]
    }

    fn ta(&self) -> Time {
        if self.active {
            self.period
        } else {
            Time::INFINITY
        }
    }

    fn delta_int(&mut self) {
        self.next_id += 1;
        self.count += 1;
    }

    fn delta_ext(&mut self, _elapsed: Time, _input: &MessageBag) {
        self.active = false;
    }

    fn lambda(&self) -> MessageBag {
        MessageBag::from_iter([("out".to_string(), Value::text(format!("Job{}", self.next_id)))])
    }

    fn phase(&self) -> String {
        if self.active { "active" } else { "passive" }.into()
    }

    fn snapshot(&self) -> Value {
        Value::Record(BTreeMap::from([
            ("active".to_string(), Value::Bool(self.active)),
            ("count".to_string(), Value::Int(self.count as i64)),
            ("nextId".to_string(), Value::Int(self.next_id as i64)),
        ]))
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Single-server processor: accepts a job on `in` when passive, serves it
/// for `procTime`, emits it on `out`. Arrivals while busy are dropped.
#[derive(Debug, Clone)]
pub struct Processor {
    proc_time: Time,
    /// Remaining service time of the current job.
    sigma: Time,
    job: Option<Value>,
    served: u64,
    dropped: u64,
}

impl Processor {
    fn new(proc_time: f64) -> Processor {
        Processor {
            proc_time: Time::finite(proc_time).expect("factory validated"),
            sigma: Time::INFINITY,
            job: None,
            served: 0,
            dropped: 0,
        }
    }
}

impl AtomicBehavior for Processor {
    fn input_ports(&self) -> Vec<String> {
        vec!["in".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["out".into()]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        self.job = None;
        self.served += 1;
        self.sigma = Time::INFINITY;
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        let arrivals: Vec<&Value> = input.values_on("in").collect();
        if arrivals.is_empty() {
            return;
        }
        match self.job {
            None => {
                self.job = arrivals.first().map(|v| (*v).clone());
                self.dropped += arrivals.len().saturating_sub(1) as u64;
                self.sigma = self.proc_time;
            }
            Some(_) => {
                self.dropped += arrivals.len() as u64;
                self.sigma = self.sigma.minus(elapsed);
            }
        }
    }

    fn lambda(&self) -> MessageBag {
        match &self.job {
            Some(job) => MessageBag::from_iter([("out".to_string(), job.clone())]),
            None => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        if self.job.is_some() { "busy" } else { "passive" }.into()
    }

    fn snapshot(&self) -> Value {
        let mut record = BTreeMap::from([
            ("dropped".to_string(), Value::Int(self.dropped as i64)),
            ("served".to_string(), Value::Int(self.served as i64)),
        ]);
        if let Some(job) = &self.job {
            record.insert("job".to_string(), job.clone());
        }
        Value::Record(record)
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Observes jobs entering (`ariv`) and completing (`solved`) for a window,
/// then reports `jobsSent`, `jobsReceived`, `throughput`, `turnaround` on
/// `out` and goes quiet.
#[derive(Debug, Clone)]
pub struct Transducer {
    window: Time,
    /// Remaining observation time.
    sigma: Time,
    observing: bool,
    /// Model time since the start of observation, accumulated from elapsed
    /// times.
    clock: f64,
    arrival_times: BTreeMap<String, f64>,
    arrived: u64,
    solved: u64,
    turnaround_sum: f64,
}

impl Transducer {
    fn new(window: f64) -> Transducer {
        let window = Time::finite(window).expect("factory validated");
        Transducer {
            window,
            sigma: window,
            observing: true,
            clock: 0.0,
            arrival_times: BTreeMap::new(),
            arrived: 0,
            solved: 0,
            turnaround_sum: 0.0,
        }
    }

    /// The report is a pure function of the counters; at the window
    /// boundary the observation span is the full window.
    fn report(&self) -> Value {
        let span = self.window.as_f64();
        let throughput = if self.solved > 0 { self.solved as f64 / span } else { 0.0 };
        let turnaround = if self.solved > 0 {
            self.turnaround_sum / self.solved as f64
        } else {
            0.0
        };
        Value::Record(BTreeMap::from([
            ("jobsReceived".to_string(), Value::Int(self.solved as i64)),
            ("jobsSent".to_string(), Value::Int(self.arrived as i64)),
            ("throughput".to_string(), Value::Real(throughput)),
            ("turnaround".to_string(), Value::Real(turnaround)),
        ]))
    }
}

impl AtomicBehavior for Transducer {
    fn input_ports(&self) -> Vec<String> {
        vec!["ariv".into(), "solved".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["out".into()]
    }

    fn ta(&self) -> Time {
        if self.observing {
            self.sigma
        } else {
            Time::INFINITY
        }
    }

    fn delta_int(&mut self) {
        self.clock = self.window.as_f64();
        self.observing = false;
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        if !self.observing {
            return;
        }
        self.clock += elapsed.as_f64();
        self.sigma = self.sigma.minus(elapsed);
        for value in input.values_on("ariv") {
            self.arrival_times.insert(value.to_string(), self.clock);
            self.arrived += 1;
        }
        for value in input.values_on("solved") {
            self.solved += 1;
            if let Some(arrived_at) = self.arrival_times.get(&value.to_string()) {
                self.turnaround_sum += self.clock - arrived_at;
            }
        }
    }

    fn lambda(&self) -> MessageBag {
        if self.observing {
            MessageBag::from_iter([("out".to_string(), self.report())])
        } else {
            MessageBag::new()
        }
    }

    fn phase(&self) -> String {
        if self.observing { "observing" } else { "done" }.into()
    }

    fn snapshot(&self) -> Value {
        Value::Record(BTreeMap::from([
            ("arrived".to_string(), Value::Int(self.arrived as i64)),
            ("observing".to_string(), Value::Bool(self.observing)),
            ("solved".to_string(), Value::Int(self.solved as i64)),
        ]))
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Checks every `checkEvery` that at least `minReceived` values have been
/// seen on `in` so far; on the first shortfall it emits `stop` on `control`
/// and goes quiet.
#[derive(Debug, Clone)]
pub struct Acceptor {
    check_every: Time,
    /// Remaining time until the pending check.
    sigma: Time,
    monitoring: bool,
    min_received: u64,
    received: u64,
}

impl Acceptor {
    fn new(check_every: f64, min_received: u64) -> Acceptor {
        let check_every = Time::finite(check_every).expect("factory validated");
        Acceptor {
            check_every,
            sigma: check_every,
            monitoring: true,
            min_received,
            received: 0,
        }
    }

    fn short(&self) -> bool {
        self.received < self.min_received
    }
}

impl AtomicBehavior for Acceptor {
    fn input_ports(&self) -> Vec<String> {
        vec!["in".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["control".into()]
    }

    fn ta(&self) -> Time {
        if self.monitoring {
            self.sigma
        } else {
            Time::INFINITY
        }
    }

    fn delta_int(&mut self) {
        if self.short() {
            self.monitoring = false;
        } else {
            self.sigma = self.check_every;
        }
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        if !self.monitoring {
            return;
        }
        self.sigma = self.sigma.minus(elapsed);
        self.received += input.values_on("in").count() as u64;
    }

    fn lambda(&self) -> MessageBag {
        if self.monitoring && self.short() {
            MessageBag::from_iter([("control".to_string(), Value::text("stop"))])
        } else {
            MessageBag::new()
        }
    }

    fn phase(&self) -> String {
        if self.monitoring { "monitoring" } else { "done" }.into()
    }

    fn snapshot(&self) -> Value {
        Value::Record(BTreeMap::from([
            ("monitoring".to_string(), Value::Bool(self.monitoring)),
            ("received".to_string(), Value::Int(self.received as i64)),
        ]))
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::{BehaviorRegistry, Params};

    fn registry() -> BehaviorRegistry {
        let mut r = BehaviorRegistry::new();
        register_ef(&mut r);
        r
    }

    fn t(v: f64) -> Time {
        Time::finite(v).unwrap()
    }

    #[test]
    fn generator_emits_numbered_jobs() {
        let mut gen = Generator::new(1.0);
        assert_eq!(gen.ta(), t(1.0));
        let out = gen.lambda();
        assert_eq!(out.items()[0].value, Value::text("Job1"));
        gen.delta_int();
        assert_eq!(gen.lambda().items()[0].value, Value::text("Job2"));
    }

    #[test]
    fn generator_stops_on_any_input() {
        let mut gen = Generator::new(1.0);
        let mut bag = MessageBag::new();
        bag.push("stop", Value::Int(0));
        gen.delta_ext(t(0.5), &bag.grouped());
        assert_eq!(gen.ta(), Time::INFINITY);
        assert_eq!(gen.phase(), "passive");
    }

    #[test]
    fn processor_serves_one_job_and_drops_the_rest() {
        let mut proc = Processor::new(2.5);
        assert_eq!(proc.ta(), Time::INFINITY);
        let mut bag = MessageBag::new();
        bag.push("in", Value::text("Job1"));
        proc.delta_ext(t(0.0), &bag.grouped());
        assert_eq!(proc.ta(), t(2.5));
        assert_eq!(proc.phase(), "busy");

        let mut second = MessageBag::new();
        second.push("in", Value::text("Job2"));
        proc.delta_ext(t(1.0), &second.grouped());
        assert_eq!(proc.ta(), t(1.5), "busy arrival must not reset service");

        assert_eq!(proc.lambda().items()[0].value, Value::text("Job1"));
        proc.delta_int();
        assert_eq!(proc.phase(), "passive");
        let snap = proc.snapshot();
        let Value::Record(fields) = snap else { panic!() };
        assert_eq!(fields["served"], Value::Int(1));
        assert_eq!(fields["dropped"], Value::Int(1));
    }

    #[test]
    fn processor_busy_arrival_at_t0_3_reschedules_to_2_8_remaining() {
        // The oracle case: service started at t=0 with procTime 2.5 keeps
        // its completion time under later arrivals.
        let mut proc = Processor::new(2.5);
        let mut bag = MessageBag::new();
        bag.push("in", Value::text("Job1"));
        proc.delta_ext(t(0.0), &bag.grouped());
        let mut late = MessageBag::new();
        late.push("in", Value::text("Job2"));
        proc.delta_ext(t(0.3), &late.grouped());
        assert_eq!(proc.ta(), t(2.2));
    }

    #[test]
    fn transducer_reports_zeroes_without_completions() {
        let mut trans = Transducer::new(3.0);
        let mut bag = MessageBag::new();
        bag.push("ariv", Value::text("Job1"));
        trans.delta_ext(t(1.0), &bag.grouped());
        let mut bag2 = MessageBag::new();
        bag2.push("ariv", Value::text("Job2"));
        trans.delta_ext(t(1.0), &bag2.grouped());
        assert_eq!(trans.ta(), t(1.0));
        let out = trans.lambda();
        assert_eq!(
            out.items()[0].value.to_string(),
            r#"{"jobsReceived":0,"jobsSent":2,"throughput":0.0,"turnaround":0.0}"#
        );
        trans.delta_int();
        assert_eq!(trans.ta(), Time::INFINITY);
    }

    #[test]
    fn transducer_turnaround_and_throughput() {
        let mut trans = Transducer::new(10.0);
        let mut ariv = MessageBag::new();
        ariv.push("ariv", Value::text("Job1"));
        trans.delta_ext(t(1.0), &ariv.grouped());
        let mut solved = MessageBag::new();
        solved.push("solved", Value::text("Job1"));
        trans.delta_ext(t(2.5), &solved.grouped());
        let Value::Record(fields) = trans.report() else { panic!() };
        assert_eq!(fields["jobsReceived"], Value::Int(1));
        assert_eq!(fields["jobsSent"], Value::Int(1));
        assert_eq!(fields["throughput"], Value::Real(0.1));
        assert_eq!(fields["turnaround"], Value::Real(2.5));
    }

    #[test]
    fn acceptor_stops_generator_on_shortfall() {
        let mut acc = Acceptor::new(3.0, 2);
        let mut bag = MessageBag::new();
        bag.push("in", Value::text("Job1"));
        acc.delta_ext(t(1.0), &bag.grouped());
        assert_eq!(acc.ta(), t(2.0));
        // Window ends with 1 < 2 received: emit stop, then go quiet.
        let out = acc.lambda();
        assert_eq!(out.items()[0].port, "control");
        assert_eq!(out.items()[0].value, Value::text("stop"));
        acc.delta_int();
        assert_eq!(acc.phase(), "done");
        assert_eq!(acc.ta(), Time::INFINITY);
    }

    #[test]
    fn acceptor_keeps_monitoring_when_satisfied() {
        let mut acc = Acceptor::new(3.0, 1);
        let mut bag = MessageBag::new();
        bag.push("in", Value::text("Job1"));
        acc.delta_ext(t(2.0), &bag.grouped());
        assert!(acc.lambda().is_empty(), "no stop when the minimum is met");
        acc.delta_int();
        assert_eq!(acc.phase(), "monitoring");
        assert_eq!(acc.ta(), t(3.0));
    }

    #[test]
    fn factories_validate_parameters() {
        let r = registry();
        let err = r
            .instantiate(GENERATOR, &Params::from([("period".to_string(), Value::Real(0.0))]))
            .unwrap_err();
        assert!(err.to_string().contains("period"));
        assert!(r.instantiate(PROCESSOR, &Params::new()).is_err());
        let ok = r.instantiate(
            TRANSDUCER,
            &Params::from([("observeWindow".to_string(), Value::Int(3))]),
        );
        assert!(ok.is_ok(), "integer parameters widen to real");
    }
}
