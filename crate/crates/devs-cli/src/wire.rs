//! HTTP conventions shared by the node and the client.
//!
//! Every call is a `POST` with a JSON body. Every handled request returns
//! HTTP 200 with either `{"ok": <result>}` or
//! `{"error": {"code": <stable code>, "message": <human text>}}`, so
//! application failures survive any transport and proxy behavior unchanged.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum WireError {
    /// The peer handled the request and reported an application error.
    #[error("{code} from {url}: {message}")]
    Remote {
        url: String,
        code: String,
        message: String,
    },
    #[error("transport to {url}: {detail}")]
    Transport { url: String, detail: String },
    #[error("malformed response from {url}: {detail}")]
    Malformed { url: String, detail: String },
}

impl WireError {
    pub fn code(&self) -> Option<&str> {
        match self {
            WireError::Remote { code, .. } => Some(code),
            _ => None,
        }
    }
}

/// An agent with both timeouts set; connections are pooled per host.
pub fn agent(read_timeout: Duration) -> ureq::Agent {
    ureq::AgentBuilder::new()
        .timeout_connect(Duration::from_secs(10))
        .timeout_read(read_timeout)
        // Concurrent real-time loops on one node may deliver to the same
        // peer; keeping several idle connections per host avoids reconnects.
        .max_idle_connections_per_host(8)
        .build()
}

/// Posts `body` to `http://{endpoint}{path}` and unwraps the `ok`/`error`
/// envelope.
pub fn post<B: Serialize>(
    agent: &ureq::Agent,
    endpoint: &str,
    path: &str,
    body: &B,
) -> Result<serde_json::Value, WireError> {
    let url = format!("http://{endpoint}{path}");
    let payload = serde_json::to_string(body).map_err(|e| WireError::Malformed {
        url: url.clone(),
        detail: format!("encoding request: {e}"),
    })?;
    let response = agent
        .post(&url)
        .set("content-type", "application/json")
        .send_string(&payload)
        .map_err(|e| WireError::Transport {
            url: url.clone(),
            detail: e.to_string(),
        })?;
    let text = response.into_string().map_err(|e| WireError::Transport {
        url: url.clone(),
        detail: format!("reading response: {e}"),
    })?;
    let tree: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| WireError::Malformed {
            url: url.clone(),
            detail: format!("{e}; body: {text:.200}"),
        })?;
    if let Some(error) = tree.get("error") {
        return Err(WireError::Remote {
            url,
            code: error
                .get("code")
                .and_then(|c| c.as_str())
                .unwrap_or("unknown")
                .to_string(),
            message: error
                .get("message")
                .and_then(|m| m.as_str())
                .unwrap_or("")
                .to_string(),
        });
    }
    match tree.get("ok") {
        Some(ok) => Ok(ok.clone()),
        None => Err(WireError::Malformed {
            url,
            detail: "response has neither ok nor error".into(),
        }),
    }
}

/// [`post`] plus a typed decode of the `ok` payload.
pub fn post_typed<B: Serialize, T: DeserializeOwned>(
    agent: &ureq::Agent,
    endpoint: &str,
    path: &str,
    body: &B,
) -> Result<T, WireError> {
    let url = format!("http://{endpoint}{path}");
    let ok = post(agent, endpoint, path, body)?;
    serde_json::from_value(ok).map_err(|e| WireError::Malformed {
        url,
        detail: format!("decoding ok payload: {e}"),
    })
}

pub fn request_id() -> String {
    uuid::Uuid::new_v4().to_string()
}
