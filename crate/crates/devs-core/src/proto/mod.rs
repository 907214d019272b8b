//! Wire protocol: simulator keys, canonical JSON envelopes, model package
//! manifests, and component assignment.
//!
//! Everything that crosses a node boundary is canonical JSON: object fields
//! sorted by name, no insignificant whitespace, times as numbers with
//! +infinity spelled `"inf"`. Canonical form makes encodings byte-stable, so
//! equality of encoded artifacts is equality of content.

mod assign;
mod envelope;
mod key;
mod manifest;

pub use assign::{round_robin_assign, AssignmentMap};
pub use envelope::{decode_envelope, encode_envelope, to_canonical_json, Envelope};
pub use key::SimulatorKey;
pub use manifest::{
    emit_manifest, parse_manifest, AtomicDef, ComponentDef, CouplingDef, CoupledDef,
    ModelManifest, FORMAT_VERSION, MANIFEST_EXTENSION,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One node's share of a run log: the lines attributed to a client address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogRecord {
    pub client_address: String,
    #[serde(default)]
    pub endpoint: String,
    pub lines: Vec<String>,
    #[serde(default = "default_true")]
    pub available: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum ProtoError {
    #[error("decode error at line {line}, column {column}: {detail}")]
    Decode {
        line: usize,
        column: usize,
        detail: String,
    },

    #[error("encode error: {0}")]
    Encode(String),

    #[error("schema error at {pointer}: {detail}")]
    Schema { pointer: String, detail: String },

    #[error("unsupported manifest format version {found} (supported: {supported})")]
    UnsupportedVersion { found: i64, supported: u32 },

    #[error("malformed simulator key {key:?}: {reason}")]
    MalformedKey { key: String, reason: String },

    #[error("no servers to assign components to")]
    NoServers,

    #[error("duplicate component name {0:?} in assignment input")]
    DuplicateComponent(String),

    #[error("assignment does not cover component {0:?}")]
    MissingComponent(String),

    #[error("assignment names unknown component {0:?}")]
    UnknownComponent(String),
}

impl ProtoError {
    pub(crate) fn from_serde(err: &serde_json::Error) -> ProtoError {
        ProtoError::Decode {
            line: err.line(),
            column: err.column(),
            detail: err.to_string(),
        }
    }
}
