//! Simulator keys.
//!
//! Every simulator created on behalf of a client is addressed by
//! `componentName@clientAddress`; the component name is unique within a
//! model, the client address scopes concurrent runs from different clients
//! apart. Both parts are `@`-free, so the rendered form parses back
//! unambiguously.

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::ProtoError;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimulatorKey {
    name: String,
    client: String,
}

impl SimulatorKey {
    pub fn new(name: &str, client: &str) -> Result<SimulatorKey, ProtoError> {
        let check = |part: &str, what: &str| -> Result<(), ProtoError> {
            if part.is_empty() {
                Err(ProtoError::MalformedKey {
                    key: format!("{name}@{client}"),
                    reason: format!("{what} is empty"),
                })
            } else if part.contains('@') {
                Err(ProtoError::MalformedKey {
                    key: format!("{name}@{client}"),
                    reason: format!("{what} contains '@'"),
                })
            } else {
                Ok(())
            }
        };
        check(name, "component name")?;
        check(client, "client address")?;
        Ok(SimulatorKey {
            name: name.to_string(),
            client: client.to_string(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn client(&self) -> &str {
        &self.client
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(s: &str) -> Result<SimulatorKey, ProtoError> {
        s.parse()
    }
}

impl fmt::Display for SimulatorKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.client)
    }
}

impl FromStr for SimulatorKey {
    type Err = ProtoError;

    fn from_str(s: &str) -> Result<SimulatorKey, ProtoError> {
        let parts: Vec<&str> = s.split('@').collect();
        if parts.len() != 2 {
            return Err(ProtoError::MalformedKey {
                key: s.to_string(),
                reason: format!("expected exactly one '@', found {}", parts.len() - 1),
            });
        }
        SimulatorKey::new(parts[0], parts[1])
    }
}

impl Serialize for SimulatorKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for SimulatorKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<SimulatorKey, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}
