//! Behavior and translation registries.
//!
//! A [`BehaviorRegistry`] maps kind identifiers (for example
//! `"ef.processor"`) to factories. Instantiation always yields a fresh
//! instance: registries hold no shared state between simulators.
//!
//! A [`TranslationRegistry`] resolves named coupling translations; an absent
//! translation means identity, which is the only behavior shipped by
//! default.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::behavior::{AtomicBehavior, Model};
use crate::error::CoreError;
use crate::message::Value;

pub type Params = BTreeMap<String, Value>;

type BehaviorFactory = Arc<dyn Fn(&Params) -> Result<Box<dyn AtomicBehavior>, CoreError> + Send + Sync>;

#[derive(Clone, Default)]
pub struct BehaviorRegistry {
    factories: BTreeMap<String, BehaviorFactory>,
}

impl BehaviorRegistry {
    pub fn new() -> BehaviorRegistry {
        BehaviorRegistry::default()
    }

    /// Registers a factory under `kind`. Re-registering replaces the previous
    /// factory; the replacement is logged since it usually means two model
    /// libraries collide.
    pub fn register<F>(&mut self, kind: &str, factory: F)
    where
        F: Fn(&Params) -> Result<Box<dyn AtomicBehavior>, CoreError> + Send + Sync + 'static,
    {
        if self.factories.insert(kind.to_string(), Arc::new(factory)).is_some() {
            log::warn!("behavior kind {kind:?} re-registered; previous factory replaced");
        }
    }

    pub fn contains(&self, kind: &str) -> bool {
        self.factories.contains_key(kind)
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    /// Builds a fresh instance of `kind` with `params`.
    pub fn instantiate(&self, kind: &str, params: &Params) -> Result<Model, CoreError> {
        let factory = self.factories.get(kind).ok_or_else(|| CoreError::UnknownKind {
            kind: kind.to_string(),
        })?;
        Ok(Model::new(kind, factory(params)?))
    }
}

type Translation = Arc<dyn Fn(&Value) -> Value + Send + Sync>;

#[derive(Clone, Default)]
pub struct TranslationRegistry {
    entries: BTreeMap<String, Translation>,
}

impl TranslationRegistry {
    pub fn new() -> TranslationRegistry {
        TranslationRegistry::default()
    }

    pub fn register<F>(&mut self, id: &str, translate: F)
    where
        F: Fn(&Value) -> Value + Send + Sync + 'static,
    {
        if self.entries.insert(id.to_string(), Arc::new(translate)).is_some() {
            log::warn!("translation {id:?} re-registered; previous entry replaced");
        }
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entries.contains_key(id)
    }

    /// Applies the named translation, or identity when `id` is `None`.
    pub fn apply(&self, id: Option<&str>, value: &Value) -> Result<Value, CoreError> {
        match id {
            None => Ok(value.clone()),
            Some(id) => {
                let t = self.entries.get(id).ok_or_else(|| CoreError::UnknownTranslation {
                    id: id.to_string(),
                })?;
                Ok(t(value))
            }
        }
    }
}

/// Parameter accessors shared by the built-in behaviors.
pub fn real_param(kind: &str, params: &Params, name: &str) -> Result<f64, CoreError> {
    let value = params.get(name).ok_or_else(|| CoreError::InvalidParameter {
        kind: kind.to_string(),
        name: name.to_string(),
        reason: "missing".to_string(),
    })?;
    value.as_real().ok_or_else(|| CoreError::InvalidParameter {
        kind: kind.to_string(),
        name: name.to_string(),
        reason: "expected a number".to_string(),
    })
}

pub fn positive_real_param(kind: &str, params: &Params, name: &str) -> Result<f64, CoreError> {
    let v = real_param(kind, params, name)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CoreError::InvalidParameter {
            kind: kind.to_string(),
            name: name.to_string(),
            reason: format!("expected a positive finite number, got {v}"),
        })
    }
}

pub fn int_param(kind: &str, params: &Params, name: &str, default: i64) -> Result<i64, CoreError> {
    match params.get(name) {
        None => Ok(default),
        Some(v) => v.as_int().ok_or_else(|| CoreError::InvalidParameter {
            kind: kind.to_string(),
            name: name.to_string(),
            reason: "expected an integer".to_string(),
        }),
    }
}
