//! The simulator operations a coordinator needs, behind one trait.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use super::flatten::digraph_to_atomic;
use super::handle::{SimulatorHandle, Transition};
use crate::behavior::Model;
use crate::coupled::ComponentModel;
use crate::error::CoreError;
use crate::message::{MessageBag, Value};
use crate::proto::SimulatorKey;
use crate::registry::{BehaviorRegistry, TranslationRegistry};
use crate::time::Time;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("no simulator {key}")]
    NotFound { key: String },
    #[error("simulator {key} already exists")]
    AlreadyExists { key: String },
    #[error("deltfcn at t={t} outside the clock window of {key} (tN={t_next})")]
    ProtocolViolation { key: String, t: Time, t_next: Time },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid model: {detail}")]
    InvalidModel { detail: String },
    #[error("endpoint {endpoint}: {detail}")]
    Endpoint { endpoint: String, detail: String },
    #[error("simulator creation failed at: {}", endpoints.join(", "))]
    InitFailure { endpoints: Vec<String> },
}

impl SimError {
    /// Stable code used on the wire.
    pub fn code(&self) -> &'static str {
        match self {
            SimError::NotFound { .. } => "notFound",
            SimError::AlreadyExists { .. } => "alreadyExists",
            SimError::ProtocolViolation { .. } => "protocolViolation",
            SimError::Core(_) => "core",
            SimError::InvalidModel { .. } => "invalidModel",
            SimError::Endpoint { .. } => "endpoint",
            SimError::InitFailure { .. } => "initFailure",
        }
    }
}

/// Result of a `deltfcn` call: which transition ran and the phase after it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DeltResult {
    pub transition: Transition,
    pub phase: String,
}

/// Simulator operations on one execution site.
///
/// A coordinator holds one service per site and addresses simulators by key.
/// The in-process [`LocalService`] and the HTTP-backed remote implementation
/// satisfy the same contract, which is what keeps centralized and
/// distributed runs behaviorally identical.
pub trait SimulationService {
    fn new_simulator(
        &mut self,
        key: &SimulatorKey,
        model: &ComponentModel,
    ) -> Result<(), SimError>;

    fn initialize(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError>;

    /// Appends `value` to the simulator's input bag on `to_port`.
    /// `from_port` is the sending port, carried for log attribution.
    fn receive_input(
        &mut self,
        key: &SimulatorKey,
        from_port: &str,
        value: &Value,
        to_port: &str,
    ) -> Result<(), SimError>;

    fn lambda(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError>;

    fn get_output(&mut self, key: &SimulatorKey) -> Result<MessageBag, SimError>;

    fn deltfcn(&mut self, key: &SimulatorKey, t: Time) -> Result<DeltResult, SimError>;

    fn get_tn(&mut self, key: &SimulatorKey) -> Result<Time, SimError>;

    fn exit(&mut self, key: &SimulatorKey) -> Result<(), SimError>;
}

/// In-process service: a table of simulator handles.
pub struct LocalService {
    sims: BTreeMap<SimulatorKey, SimulatorHandle>,
    registry: Arc<BehaviorRegistry>,
    translations: Arc<TranslationRegistry>,
}

impl LocalService {
    pub fn new(registry: Arc<BehaviorRegistry>, translations: Arc<TranslationRegistry>) -> Self {
        LocalService {
            sims: BTreeMap::new(),
            registry,
            translations,
        }
    }

    pub fn keys(&self) -> Vec<SimulatorKey> {
        self.sims.keys().cloned().collect()
    }

    pub fn handle(&self, key: &SimulatorKey) -> Option<&SimulatorHandle> {
        self.sims.get(key)
    }

    /// Builds the model for a component: atomic kinds come from the
    /// behavior registry, coupled components are collapsed into a single
    /// atomic behavior first.
    pub fn build_model(
        registry: &BehaviorRegistry,
        translations: &Arc<TranslationRegistry>,
        model: &ComponentModel,
    ) -> Result<Model, SimError> {
        let built = match model {
            ComponentModel::Atomic { kind, params } => registry.instantiate(kind, params),
            ComponentModel::Coupled(spec) => digraph_to_atomic(spec, registry, translations),
        };
        built.map_err(|e| SimError::InvalidModel {
            detail: e.to_string(),
        })
    }

    fn get_mut(&mut self, key: &SimulatorKey) -> Result<&mut SimulatorHandle, SimError> {
        self.sims.get_mut(key).ok_or_else(|| SimError::NotFound {
            key: key.to_string(),
        })
    }
}

impl SimulationService for LocalService {
    fn new_simulator(
        &mut self,
        key: &SimulatorKey,
        model: &ComponentModel,
    ) -> Result<(), SimError> {
        if self.sims.contains_key(key) {
            return Err(SimError::AlreadyExists {
                key: key.to_string(),
            });
        }
        let model = Self::build_model(&self.registry, &self.translations, model)?;
        self.sims
            .insert(key.clone(), SimulatorHandle::new(key.clone(), model));
        Ok(())
    }

    fn initialize(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError> {
        self.get_mut(key)?.initialize(t);
        Ok(())
    }

    fn receive_input(
        &mut self,
        key: &SimulatorKey,
        _from_port: &str,
        value: &Value,
        to_port: &str,
    ) -> Result<(), SimError> {
        self.get_mut(key)?.receive_input(value, to_port)
    }

    fn lambda(&mut self, key: &SimulatorKey, t: Time) -> Result<(), SimError> {
        self.get_mut(key)?.lambda(t);
        Ok(())
    }

    fn get_output(&mut self, key: &SimulatorKey) -> Result<MessageBag, SimError> {
        Ok(self.get_mut(key)?.output().clone())
    }

    fn deltfcn(&mut self, key: &SimulatorKey, t: Time) -> Result<DeltResult, SimError> {
        let handle = self.get_mut(key)?;
        let transition = handle.deltfcn(t)?;
        Ok(DeltResult {
            transition,
            phase: handle.phase(),
        })
    }

    fn get_tn(&mut self, key: &SimulatorKey) -> Result<Time, SimError> {
        Ok(self.get_mut(key)?.t_next())
    }

    fn exit(&mut self, key: &SimulatorKey) -> Result<(), SimError> {
        if self.sims.remove(key).is_some() {
            Ok(())
        } else {
            Err(SimError::NotFound {
                key: key.to_string(),
            })
        }
    }
}
