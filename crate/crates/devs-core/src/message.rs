//! Port payloads and message bags.
//!
//! A [`Value`] is the closed payload union carried on ports, in manifests,
//! and inside envelopes. A [`MessageBag`] is the multiset of port/value items
//! a model emits or receives within one simulation cycle: insertion order is
//! preserved for presentation, while equality is order-insensitive.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Closed, JSON-representable payload union.
///
/// Variant order matters: untagged deserialization tries variants top to
/// bottom, so integral JSON numbers become `Int` and fractional ones `Real`.
/// Non-finite reals are not representable (JSON has no NaN or infinity), so
/// payloads stay total under round-tripping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Real(f64),
    Text(String),
    Record(BTreeMap<String, Value>),
}

impl Value {
    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    /// Numeric view used by parameter parsing: `Int` widens to `Real`.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Int(i) => Some(*i as f64),
            Value::Real(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            Value::Text(t) => Some(t),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Bool(_) => 0,
            Value::Int(_) => 1,
            Value::Real(_) => 2,
            Value::Text(_) => 3,
            Value::Record(_) => 4,
        }
    }
}

impl Eq for Value {}

impl Ord for Value {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a.cmp(b),
            (Value::Int(a), Value::Int(b)) => a.cmp(b),
            (Value::Real(a), Value::Real(b)) => a.total_cmp(b),
            (Value::Text(a), Value::Text(b)) => a.cmp(b),
            (Value::Record(a), Value::Record(b)) => a.iter().cmp(b.iter()),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Value {
    /// Log rendering: text is shown raw, everything else as canonical JSON.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Text(t) => f.write_str(t),
            other => match serde_json::to_string(other) {
                Ok(json) => f.write_str(&json),
                Err(_) => f.write_str("<unprintable>"),
            },
        }
    }
}

/// One bag item: a value on a named port.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortValue {
    pub port: String,
    pub value: Value,
}

/// Multiset of port/value items exchanged in one cycle.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MessageBag {
    items: Vec<PortValue>,
}

impl MessageBag {
    pub fn new() -> MessageBag {
        MessageBag::default()
    }

    pub fn push(&mut self, port: impl Into<String>, value: Value) {
        self.items.push(PortValue {
            port: port.into(),
            value,
        });
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[PortValue] {
        &self.items
    }

    pub fn ports(&self) -> BTreeSet<&str> {
        self.items.iter().map(|pv| pv.port.as_str()).collect()
    }

    pub fn values_on<'a>(&'a self, port: &'a str) -> impl Iterator<Item = &'a Value> {
        self.items
            .iter()
            .filter(move |pv| pv.port == port)
            .map(|pv| &pv.value)
    }

    pub fn merge(&mut self, other: MessageBag) {
        self.items.extend(other.items);
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    /// Delivery form: items grouped by port in lexicographic port order,
    /// arrival order preserved within each port.
    pub fn grouped(&self) -> MessageBag {
        let mut items = self.items.clone();
        items.sort_by(|a, b| a.port.cmp(&b.port));
        MessageBag { items }
    }

    fn canonical(&self) -> Vec<&PortValue> {
        let mut refs: Vec<&PortValue> = self.items.iter().collect();
        refs.sort_by(|a, b| a.port.cmp(&b.port).then_with(|| a.value.cmp(&b.value)));
        refs
    }
}

impl PartialEq for MessageBag {
    /// Multiset equality: two bags are equal when they hold the same items
    /// with the same multiplicities, regardless of order.
    fn eq(&self, other: &Self) -> bool {
        self.items.len() == other.items.len() && self.canonical() == other.canonical()
    }
}

impl Eq for MessageBag {}

impl FromIterator<(String, Value)> for MessageBag {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        let items = iter
            .into_iter()
            .map(|(port, value)| PortValue { port, value })
            .collect();
        MessageBag { items }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(pairs: &[(&str, &str)]) -> MessageBag {
        pairs
            .iter()
            .map(|(p, v)| (p.to_string(), Value::text(*v)))
            .collect()
    }

    #[test]
    fn equality_is_order_insensitive() {
        let a = bag(&[("x", "1"), ("y", "2"), ("x", "1")]);
        let b = bag(&[("y", "2"), ("x", "1"), ("x", "1")]);
        let c = bag(&[("y", "2"), ("x", "1")]);
        assert_eq!(a, b);
        assert_ne!(a, c, "multiplicities count");
    }

    #[test]
    fn grouping_sorts_ports_and_keeps_arrival_order_within_a_port() {
        let mut b = MessageBag::new();
        b.push("beta", Value::Int(1));
        b.push("alpha", Value::Int(2));
        b.push("beta", Value::Int(3));
        let g = b.grouped();
        let seen: Vec<(String, i64)> = g
            .items()
            .iter()
            .map(|pv| (pv.port.clone(), pv.value.as_int().unwrap()))
            .collect();
        assert_eq!(
            seen,
            vec![
                ("alpha".into(), 2),
                ("beta".into(), 1),
                ("beta".into(), 3)
            ]
        );
        assert_eq!(g, b, "grouping preserves the multiset");
    }

    #[test]
    fn untagged_values_round_trip_with_type_fidelity() {
        let vals = vec![
            Value::Bool(true),
            Value::Int(42),
            Value::Real(42.5),
            Value::Real(2.0),
            Value::text("Job#1"),
            Value::Record(BTreeMap::from([
                ("id".to_string(), Value::Int(7)),
                ("done".to_string(), Value::Bool(false)),
            ])),
        ];
        for v in vals {
            let json = serde_json::to_string(&v).unwrap();
            let back: Value = serde_json::from_str(&json).unwrap();
            assert_eq!(back, v, "round trip through {json}");
        }
        // Integral JSON numbers stay Int; fractional become Real.
        assert_eq!(serde_json::from_str::<Value>("3").unwrap(), Value::Int(3));
        assert_eq!(
            serde_json::from_str::<Value>("3.0").unwrap(),
            Value::Real(3.0)
        );
    }

    #[test]
    fn display_is_raw_for_text_and_json_otherwise() {
        assert_eq!(Value::text("fire").to_string(), "fire");
        assert_eq!(Value::Int(3).to_string(), "3");
        assert_eq!(Value::Real(0.5).to_string(), "0.5");
        let rec = Value::Record(BTreeMap::from([
            ("b".to_string(), Value::Int(2)),
            ("a".to_string(), Value::Int(1)),
        ]));
        assert_eq!(rec.to_string(), "{\"a\":1,\"b\":2}");
    }
}
