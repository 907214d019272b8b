//! Joint close air support mission models.
//!
//! Seven machines play out one request-and-strike mission: the controller
//! (JTAC) requests resources through surveillance (AWACS) and command
//! (CAOC), the assigned aircraft asks for tasking, deconflicts against a
//! UAV's target location, takes a situation brief, and fires; the controller
//! then calls cease. An observer counts command traffic and a scenario
//! timer bounds the run.
//!
//! Every machine follows the same conventions: phases with a finite time
//! advance emit on their way out (Mealy-style via `lambda` then the internal
//! transition), waits are passive phases driven by external input, and an
//! input that does not match the current phase leaves the machine where it
//! is with its remaining time reduced by the elapsed time.

use std::collections::BTreeMap;

use crate::behavior::AtomicBehavior;
use crate::message::{MessageBag, Value};
use crate::registry::{positive_real_param, BehaviorRegistry};
use crate::time::Time;

pub const JTAC: &str = "jcas.jtac";
pub const AWACS: &str = "jcas.awacs";
pub const CAOC: &str = "jcas.caoc";
pub const UAV: &str = "jcas.uav";
pub const USMC: &str = "jcas.usmc";
pub const OBSERVER: &str = "jcas.observer";
pub const SCENARIO: &str = "jcas.scenario";

pub fn register_jcas(registry: &mut BehaviorRegistry) {
    registry.register(JTAC, |_| Ok(Box::new(Jtac::new())));
    registry.register(AWACS, |_| Ok(Box::new(Awacs::new())));
    registry.register(CAOC, |_| Ok(Box::new(Caoc::new())));
    registry.register(UAV, |_| Ok(Box::new(Uav::new())));
    registry.register(USMC, |_| Ok(Box::new(Usmc::new())));
    registry.register(OBSERVER, |_| Ok(Box::new(Observer::new())));
    registry.register(SCENARIO, |params| {
        let duration = positive_real_param(SCENARIO, params, "duration")?;
        Ok(Box::new(Scenario::new(duration)))
    });
}

/// One mission step: the fixed processing delay of every active phase.
fn step() -> Time {
    Time::finite(1.0).expect("constant")
}

/// Preparing a situation brief takes two steps.
fn brief_prep() -> Time {
    Time::finite(2.0).expect("constant")
}

fn record(phase: &str, extra: &[(&str, Value)]) -> Value {
    let mut fields = BTreeMap::from([("phase".to_string(), Value::text(phase))]);
    for (name, value) in extra {
        fields.insert((*name).to_string(), value.clone());
    }
    Value::Record(fields)
}

/// Joint terminal attack controller: requests resources, tasks the
/// aircraft, and calls cease fire once it observes weapons release.
#[derive(Debug, Clone, PartialEq)]
enum JtacPhase {
    Init,
    WaitForAssignment,
    Assigned,
    CommandAttack,
    ContinueExecution,
    CeaseFire,
    Passive,
}

#[derive(Debug, Clone)]
pub struct Jtac {
    phase: JtacPhase,
    sigma: Time,
}

impl Jtac {
    fn new() -> Jtac {
        Jtac {
            phase: JtacPhase::Init,
            sigma: step(),
        }
    }

    fn goto(&mut self, phase: JtacPhase, sigma: Time) {
        self.phase = phase;
        self.sigma = sigma;
    }
}

impl AtomicBehavior for Jtac {
    fn input_ports(&self) -> Vec<String> {
        vec![
            "YouCanUseIn".into(),
            "requestForTACIn".into(),
            "fireObservedIn".into(),
        ]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["ImmediateCASOut".into(), "TACCommandOut".into()]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        match self.phase {
            JtacPhase::Init => self.goto(JtacPhase::WaitForAssignment, Time::INFINITY),
            JtacPhase::CommandAttack => self.goto(JtacPhase::ContinueExecution, Time::INFINITY),
            JtacPhase::CeaseFire => self.goto(JtacPhase::Passive, Time::INFINITY),
            _ => self.sigma = Time::INFINITY,
        }
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        let ports = input.ports();
        match self.phase {
            JtacPhase::WaitForAssignment if ports.contains("YouCanUseIn") => {
                self.goto(JtacPhase::Assigned, Time::INFINITY)
            }
            JtacPhase::Assigned if ports.contains("requestForTACIn") => {
                self.goto(JtacPhase::CommandAttack, step())
            }
            JtacPhase::ContinueExecution if ports.contains("fireObservedIn") => {
                self.goto(JtacPhase::CeaseFire, step())
            }
            _ => self.sigma = self.sigma.minus(elapsed),
        }
    }

    fn lambda(&self) -> MessageBag {
        match self.phase {
            JtacPhase::Init => MessageBag::from_iter([(
                "ImmediateCASOut".to_string(),
                Value::text("CASResourcesSpec"),
            )]),
            JtacPhase::CommandAttack => MessageBag::from_iter([(
                "TACCommandOut".to_string(),
                Value::text("initialAttack"),
            )]),
            JtacPhase::CeaseFire => MessageBag::from_iter([(
                "TACCommandOut".to_string(),
                Value::text("ceaseAttack"),
            )]),
            _ => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        match self.phase {
            JtacPhase::Init => "init",
            JtacPhase::WaitForAssignment => "waitForAssignment",
            JtacPhase::Assigned => "assigned",
            JtacPhase::CommandAttack => "commandAttack",
            JtacPhase::ContinueExecution => "continueExecution",
            JtacPhase::CeaseFire => "ceaseFire",
            JtacPhase::Passive => "passive",
        }
        .into()
    }

    fn snapshot(&self) -> Value {
        record(&AtomicBehavior::phase(self), &[])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Airborne surveillance: passes CAS requests up to command and serves
/// situation briefs on request.
#[derive(Debug, Clone, PartialEq)]
enum AwacsPhase {
    DoSurveillance,
    PassRequest,
    PrepareBrief,
}

#[derive(Debug, Clone)]
pub struct Awacs {
    phase: AwacsPhase,
    sigma: Time,
}

impl Awacs {
    fn new() -> Awacs {
        Awacs {
            phase: AwacsPhase::DoSurveillance,
            sigma: Time::INFINITY,
        }
    }
}

impl AtomicBehavior for Awacs {
    fn input_ports(&self) -> Vec<String> {
        vec!["casRequestIn".into(), "sitBriefRequestIn".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["requestImmediateCASOut".into(), "sitBriefOut".into()]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        self.phase = AwacsPhase::DoSurveillance;
        self.sigma = Time::INFINITY;
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        let ports = input.ports();
        match self.phase {
            AwacsPhase::DoSurveillance if ports.contains("casRequestIn") => {
                self.phase = AwacsPhase::PassRequest;
                self.sigma = step();
            }
            AwacsPhase::DoSurveillance if ports.contains("sitBriefRequestIn") => {
                self.phase = AwacsPhase::PrepareBrief;
                self.sigma = brief_prep();
            }
            _ => self.sigma = self.sigma.minus(elapsed),
        }
    }

    fn lambda(&self) -> MessageBag {
        match self.phase {
            AwacsPhase::PassRequest => MessageBag::from_iter([(
                "requestImmediateCASOut".to_string(),
                Value::text("CASResourcesSpec"),
            )]),
            AwacsPhase::PrepareBrief => {
                MessageBag::from_iter([("sitBriefOut".to_string(), Value::text("sitBrief"))])
            }
            AwacsPhase::DoSurveillance => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        match self.phase {
            AwacsPhase::DoSurveillance => "doSurveillance",
            AwacsPhase::PassRequest => "passRequest",
            AwacsPhase::PrepareBrief => "prepareBrief",
        }
        .into()
    }

    fn snapshot(&self) -> Value {
        record(&AtomicBehavior::phase(self), &[])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Air operations center: approves a CAS request by cutting a ready order
/// to the aircraft and an assignment notice to the controller.
#[derive(Debug, Clone, PartialEq)]
enum CaocPhase {
    Passive,
    Approve,
}

#[derive(Debug, Clone)]
pub struct Caoc {
    phase: CaocPhase,
    sigma: Time,
}

impl Caoc {
    fn new() -> Caoc {
        Caoc {
            phase: CaocPhase::Passive,
            sigma: Time::INFINITY,
        }
    }
}

impl AtomicBehavior for Caoc {
    fn input_ports(&self) -> Vec<String> {
        vec!["casRequestIn".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["readyOrderOut".into(), "YouCanUseUSMCAircraftOut".into()]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        self.phase = CaocPhase::Passive;
        self.sigma = Time::INFINITY;
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        match self.phase {
            CaocPhase::Passive if input.ports().contains("casRequestIn") => {
                self.phase = CaocPhase::Approve;
                self.sigma = step();
            }
            _ => self.sigma = self.sigma.minus(elapsed),
        }
    }

    fn lambda(&self) -> MessageBag {
        match self.phase {
            CaocPhase::Approve => MessageBag::from_iter([
                ("readyOrderOut".to_string(), Value::text("getReady")),
                (
                    "YouCanUseUSMCAircraftOut".to_string(),
                    Value::text("CASResources"),
                ),
            ]),
            CaocPhase::Passive => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        match self.phase {
            CaocPhase::Passive => "passive",
            CaocPhase::Approve => "approve",
        }
        .into()
    }

    fn snapshot(&self) -> Value {
        record(&AtomicBehavior::phase(self), &[])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Reconnaissance drone: answers one deconfliction request with the target
/// location, then leaves station.
#[derive(Debug, Clone, PartialEq)]
enum UavPhase {
    OnStation,
    ReportLocation,
    Passive,
}

#[derive(Debug, Clone)]
pub struct Uav {
    phase: UavPhase,
    sigma: Time,
}

impl Uav {
    fn new() -> Uav {
        Uav {
            phase: UavPhase::OnStation,
            sigma: Time::INFINITY,
        }
    }

    fn location() -> Value {
        Value::Record(BTreeMap::from([
            ("lat".to_string(), Value::Real(33.3)),
            ("long".to_string(), Value::Real(44.4)),
        ]))
    }
}

impl AtomicBehavior for Uav {
    fn input_ports(&self) -> Vec<String> {
        vec!["deconflictRequestIn".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        vec!["targetLocationOut".into()]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        self.phase = UavPhase::Passive;
        self.sigma = Time::INFINITY;
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        match self.phase {
            UavPhase::OnStation if input.ports().contains("deconflictRequestIn") => {
                self.phase = UavPhase::ReportLocation;
                self.sigma = step();
            }
            _ => self.sigma = self.sigma.minus(elapsed),
        }
    }

    fn lambda(&self) -> MessageBag {
        match self.phase {
            UavPhase::ReportLocation => {
                MessageBag::from_iter([("targetLocationOut".to_string(), Uav::location())])
            }
            _ => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        match self.phase {
            UavPhase::OnStation => "onStation",
            UavPhase::ReportLocation => "reportLocation",
            UavPhase::Passive => "passive",
        }
        .into()
    }

    fn snapshot(&self) -> Value {
        record(&AtomicBehavior::phase(self), &[])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// The tasked aircraft: asks for tactical control, deconflicts and takes a
/// brief while on attack station, fires once it has both, and holds station
/// through cease-attack.
#[derive(Debug, Clone, PartialEq)]
enum UsmcPhase {
    Idle,
    RequestTac,
    WaitForTac,
    Enroute,
    Attack,
    Engage,
}

#[derive(Debug, Clone)]
pub struct Usmc {
    phase: UsmcPhase,
    sigma: Time,
    has_target: bool,
    has_brief: bool,
    engaged: bool,
    complete: bool,
}

impl Usmc {
    fn new() -> Usmc {
        Usmc {
            phase: UsmcPhase::Idle,
            sigma: Time::INFINITY,
            has_target: false,
            has_brief: false,
            engaged: false,
            complete: false,
        }
    }

    fn maybe_engage(&mut self) {
        if self.has_target && self.has_brief && !self.engaged {
            self.engaged = true;
            self.phase = UsmcPhase::Engage;
            self.sigma = step();
        }
    }
}

impl AtomicBehavior for Usmc {
    fn input_ports(&self) -> Vec<String> {
        vec![
            "readyOrderIn".into(),
            "TACCommandIn".into(),
            "targetLocationIn".into(),
            "sitBriefIn".into(),
        ]
    }

    fn output_ports(&self) -> Vec<String> {
        vec![
            "requestForTACOut".into(),
            "sitBriefRequestOut".into(),
            "deconflictRequestOut".into(),
            "fireCommand".into(),
        ]
    }

    fn ta(&self) -> Time {
        self.sigma
    }

    fn delta_int(&mut self) {
        match self.phase {
            UsmcPhase::RequestTac => {
                self.phase = UsmcPhase::WaitForTac;
                self.sigma = Time::INFINITY;
            }
            UsmcPhase::Enroute | UsmcPhase::Engage => {
                self.phase = UsmcPhase::Attack;
                self.sigma = Time::INFINITY;
            }
            _ => self.sigma = Time::INFINITY,
        }
    }

    fn delta_ext(&mut self, elapsed: Time, input: &MessageBag) {
        let ports = input.ports();
        let command = |name: &str| input.values_on("TACCommandIn").any(|v| v.as_text() == Some(name));
        match self.phase {
            UsmcPhase::Idle if ports.contains("readyOrderIn") => {
                self.phase = UsmcPhase::RequestTac;
                self.sigma = step();
            }
            UsmcPhase::WaitForTac if command("initialAttack") => {
                self.phase = UsmcPhase::Enroute;
                self.sigma = step();
            }
            UsmcPhase::Attack => {
                let mut matched = false;
                if ports.contains("targetLocationIn") {
                    self.has_target = true;
                    matched = true;
                }
                if ports.contains("sitBriefIn") {
                    self.has_brief = true;
                    matched = true;
                }
                if command("ceaseAttack") {
                    self.complete = true;
                    matched = true;
                }
                if matched {
                    self.maybe_engage();
                } else {
                    self.sigma = self.sigma.minus(elapsed);
                }
            }
            _ => self.sigma = self.sigma.minus(elapsed),
        }
    }

    fn lambda(&self) -> MessageBag {
        match self.phase {
            UsmcPhase::RequestTac => MessageBag::from_iter([(
                "requestForTACOut".to_string(),
                Value::text("requestTAC"),
            )]),
            UsmcPhase::Enroute => MessageBag::from_iter([
                (
                    "sitBriefRequestOut".to_string(),
                    Value::text("sitBriefRequest"),
                ),
                (
                    "deconflictRequestOut".to_string(),
                    Value::text("requestDeconflict"),
                ),
            ]),
            UsmcPhase::Engage => {
                MessageBag::from_iter([("fireCommand".to_string(), Value::text("fire"))])
            }
            _ => MessageBag::new(),
        }
    }

    fn phase(&self) -> String {
        match self.phase {
            UsmcPhase::Idle => "idle",
            UsmcPhase::RequestTac => "requestTAC",
            UsmcPhase::WaitForTac => "waitForTAC",
            UsmcPhase::Enroute => "enroute",
            UsmcPhase::Attack => "attack",
            UsmcPhase::Engage => "engage",
        }
        .into()
    }

    fn snapshot(&self) -> Value {
        record(
            &AtomicBehavior::phase(self),
            &[
                ("brief", Value::Bool(self.has_brief)),
                ("complete", Value::Bool(self.complete)),
                ("engaged", Value::Bool(self.engaged)),
                ("target", Value::Bool(self.has_target)),
            ],
        )
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Counts command traffic; never speaks.
#[derive(Debug, Clone)]
pub struct Observer {
    observed: u64,
}

impl Observer {
    fn new() -> Observer {
        Observer { observed: 0 }
    }
}

impl AtomicBehavior for Observer {
    fn input_ports(&self) -> Vec<String> {
        vec!["observe".into()]
    }

    fn output_ports(&self) -> Vec<String> {
        Vec::new()
    }

    fn ta(&self) -> Time {
        Time::INFINITY
    }

    fn delta_int(&mut self) {}

    fn delta_ext(&mut self, _elapsed: Time, input: &MessageBag) {
        self.observed += input.values_on("observe").count() as u64;
    }

    fn lambda(&self) -> MessageBag {
        MessageBag::new()
    }

    fn phase(&self) -> String {
        "observing".into()
    }

    fn snapshot(&self) -> Value {
        record("observing", &[("observed", Value::Int(self.observed as i64))])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

/// Bounds the mission: a single silent internal event at `duration`.
#[derive(Debug, Clone)]
pub struct Scenario {
    duration: Time,
    done: bool,
}

impl Scenario {
    fn new(duration: f64) -> Scenario {
        Scenario {
            duration: Time::finite(duration).expect("factory validated"),
            done: false,
        }
    }
}

impl AtomicBehavior for Scenario {
    fn input_ports(&self) -> Vec<String> {
        Vec::new()
    }

    fn output_ports(&self) -> Vec<String> {
        Vec::new()
    }

    fn ta(&self) -> Time {
        if self.done {
            Time::INFINITY
        } else {
            self.duration
        }
    }

    fn delta_int(&mut self) {
        self.done = true;
    }

    fn delta_ext(&mut self, _elapsed: Time, _input: &MessageBag) {}

    fn lambda(&self) -> MessageBag {
        MessageBag::new()
    }

    fn phase(&self) -> String {
        if self.done { "done" } else { "scenario" }.into()
    }

    fn snapshot(&self) -> Value {
        record(&AtomicBehavior::phase(self), &[])
    }

    fn clone_box(&self) -> Box<dyn AtomicBehavior> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(port: &str, value: Value) -> MessageBag {
        let mut b = MessageBag::new();
        b.push(port, value);
        b.grouped()
    }

    #[test]
    fn jtac_walks_the_mission_arc() {
        let mut jtac = Jtac::new();
        assert_eq!(jtac.ta(), step());
        assert_eq!(
            jtac.lambda().items()[0].value,
            Value::text("CASResourcesSpec")
        );
        jtac.delta_int();
        assert_eq!(AtomicBehavior::phase(&jtac), "waitForAssignment");

        jtac.delta_ext(step(), &bag("YouCanUseIn", Value::text("CASResources")));
        assert_eq!(AtomicBehavior::phase(&jtac), "assigned");

        jtac.delta_ext(step(), &bag("requestForTACIn", Value::text("requestTAC")));
        assert_eq!(AtomicBehavior::phase(&jtac), "commandAttack");
        assert_eq!(jtac.lambda().items()[0].value, Value::text("initialAttack"));
        jtac.delta_int();
        assert_eq!(AtomicBehavior::phase(&jtac), "continueExecution");

        jtac.delta_ext(step(), &bag("fireObservedIn", Value::text("fire")));
        assert_eq!(jtac.lambda().items()[0].value, Value::text("ceaseAttack"));
        jtac.delta_int();
        assert_eq!(AtomicBehavior::phase(&jtac), "passive");
        assert_eq!(jtac.ta(), Time::INFINITY);
    }

    #[test]
    fn unexpected_input_reduces_remaining_time_without_moving() {
        let mut jtac = Jtac::new();
        let half = Time::finite(0.5).unwrap();
        jtac.delta_ext(half, &bag("fireObservedIn", Value::text("noise")));
        assert_eq!(AtomicBehavior::phase(&jtac), "init");
        assert_eq!(jtac.ta(), half);
    }

    #[test]
    fn awacs_brief_takes_two_units() {
        let mut awacs = Awacs::new();
        awacs.delta_ext(step(), &bag("sitBriefRequestIn", Value::text("sitBriefRequest")));
        assert_eq!(AtomicBehavior::phase(&awacs), "prepareBrief");
        assert_eq!(awacs.ta(), brief_prep());
        assert_eq!(awacs.lambda().items()[0].port, "sitBriefOut");
        awacs.delta_int();
        assert_eq!(AtomicBehavior::phase(&awacs), "doSurveillance");
    }

    #[test]
    fn caoc_emits_ready_order_before_assignment_notice() {
        let mut caoc = Caoc::new();
        caoc.delta_ext(step(), &bag("casRequestIn", Value::text("CASResourcesSpec")));
        let out = caoc.lambda();
        assert_eq!(out.items()[0].port, "readyOrderOut");
        assert_eq!(out.items()[1].port, "YouCanUseUSMCAircraftOut");
    }

    #[test]
    fn uav_reports_once_then_leaves_station() {
        let mut uav = Uav::new();
        uav.delta_ext(step(), &bag("deconflictRequestIn", Value::text("requestDeconflict")));
        let out = uav.lambda();
        assert_eq!(
            out.items()[0].value.to_string(),
            r#"{"lat":33.3,"long":44.4}"#
        );
        uav.delta_int();
        assert_eq!(AtomicBehavior::phase(&uav), "passive");
        uav.delta_ext(step(), &bag("deconflictRequestIn", Value::text("again")));
        assert_eq!(AtomicBehavior::phase(&uav), "passive");
    }

    #[test]
    fn usmc_fires_only_with_target_and_brief() {
        let mut usmc = Usmc::new();
        usmc.delta_ext(step(), &bag("readyOrderIn", Value::text("getReady")));
        usmc.delta_int();
        usmc.delta_ext(step(), &bag("TACCommandIn", Value::text("initialAttack")));
        assert_eq!(AtomicBehavior::phase(&usmc), "enroute");
        let out = usmc.lambda();
        assert_eq!(out.items()[0].port, "sitBriefRequestOut");
        assert_eq!(out.items()[1].port, "deconflictRequestOut");
        usmc.delta_int();
        assert_eq!(AtomicBehavior::phase(&usmc), "attack");

        usmc.delta_ext(step(), &bag("targetLocationIn", Uav::location()));
        assert_eq!(AtomicBehavior::phase(&usmc), "attack", "target alone must not fire");
        usmc.delta_ext(step(), &bag("sitBriefIn", Value::text("sitBrief")));
        assert_eq!(AtomicBehavior::phase(&usmc), "engage");
        assert_eq!(usmc.lambda().items()[0].port, "fireCommand");
        usmc.delta_int();
        assert_eq!(AtomicBehavior::phase(&usmc), "attack");

        usmc.delta_ext(step(), &bag("TACCommandIn", Value::text("ceaseAttack")));
        assert_eq!(AtomicBehavior::phase(&usmc), "attack");
        let Value::Record(fields) = usmc.snapshot() else { panic!() };
        assert_eq!(fields["complete"], Value::Bool(true));
        assert_eq!(fields["engaged"], Value::Bool(true));
    }

    #[test]
    fn usmc_ignores_wrong_command_values() {
        let mut usmc = Usmc::new();
        usmc.delta_ext(step(), &bag("readyOrderIn", Value::text("getReady")));
        usmc.delta_int();
        usmc.delta_ext(step(), &bag("TACCommandIn", Value::text("ceaseAttack")));
        assert_eq!(AtomicBehavior::phase(&usmc), "waitForTAC");
    }

    #[test]
    fn observer_counts_without_speaking() {
        let mut obs = Observer::new();
        assert_eq!(obs.ta(), Time::INFINITY);
        obs.delta_ext(step(), &bag("observe", Value::text("getReady")));
        let Value::Record(fields) = obs.snapshot() else { panic!() };
        assert_eq!(fields["observed"], Value::Int(1));
        assert!(obs.lambda().is_empty());
    }

    #[test]
    fn scenario_times_out_silently() {
        let mut scenario = Scenario::new(11.0);
        assert_eq!(scenario.ta(), Time::finite(11.0).unwrap());
        assert!(scenario.lambda().is_empty());
        scenario.delta_int();
        assert_eq!(AtomicBehavior::phase(&scenario), "done");
        assert_eq!(scenario.ta(), Time::INFINITY);
    }
}
