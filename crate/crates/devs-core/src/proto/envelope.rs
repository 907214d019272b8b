//! Canonical JSON envelopes.
//!
//! Every service call and reply travels as one [`Envelope`]. Encoding always
//! passes through a `serde_json::Value` tree, whose object representation is
//! an ordered map: fields come out sorted by name with no insignificant
//! whitespace, independent of struct declaration or insertion order. Decoding
//! is strict: unknown fields are rejected by name, malformed bytes report the
//! offending position.

use serde::{Deserialize, Serialize};

use super::{ProtoError, SimulatorKey};
use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "camelCase")]
pub struct Envelope {
    /// Operation name, e.g. `"sim.deltfcn"`.
    pub service: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<SimulatorKey>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Time>,
    /// Operation-specific payload.
    #[serde(default = "empty_body")]
    pub body: serde_json::Value,
    pub request_id: String,
}

fn empty_body() -> serde_json::Value {
    serde_json::Value::Object(serde_json::Map::new())
}

impl Envelope {
    pub fn new(service: &str, request_id: &str) -> Envelope {
        Envelope {
            service: service.to_string(),
            key: None,
            time: None,
            body: empty_body(),
            request_id: request_id.to_string(),
        }
    }

    pub fn with_key(mut self, key: SimulatorKey) -> Envelope {
        self.key = Some(key);
        self
    }

    pub fn with_time(mut self, time: Time) -> Envelope {
        self.time = Some(time);
        self
    }

    pub fn with_body(mut self, body: serde_json::Value) -> Envelope {
        self.body = body;
        self
    }
}

/// Canonical bytes for any serializable value: sorted object fields, no
/// insignificant whitespace.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<Vec<u8>, ProtoError> {
    let tree = serde_json::to_value(value).map_err(|e| ProtoError::Encode(e.to_string()))?;
    serde_json::to_vec(&tree).map_err(|e| ProtoError::Encode(e.to_string()))
}

pub fn encode_envelope(envelope: &Envelope) -> Result<Vec<u8>, ProtoError> {
    to_canonical_json(envelope)
}

pub fn decode_envelope(bytes: &[u8]) -> Result<Envelope, ProtoError> {
    serde_json::from_slice(bytes).map_err(|e| ProtoError::from_serde(&e))
}
