//! Run log line formats.
//!
//! These strings are part of the observable output: clients print them,
//! per-node consoles store them, and tests compare them byte for byte.
//! Values render through [`Value`]'s display form (text raw, everything
//! else canonical JSON).

use crate::message::MessageBag;

/// `Gen sending message: << port: out value: Job1 >>`, one `port:`/`value:`
/// pair per bag item in insertion order.
pub fn send_line(name: &str, output: &MessageBag) -> String {
    let body = output
        .items()
        .iter()
        .map(|pv| format!("port: {} value: {}", pv.port, pv.value))
        .collect::<Vec<_>>()
        .join(" ");
    format!("{name} sending message: << {body} >>")
}

/// `State at: Gen is: active`, logged with the post-transition phase.
pub fn state_line(name: &str, phase: &str) -> String {
    format!("State at: {name} is: {phase}")
}
