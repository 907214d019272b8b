//! Built-in model libraries.

pub mod ef;
pub mod jcas;
pub mod random;

pub use ef::register_ef;
pub use jcas::register_jcas;
pub use random::random_two_level_spec;

use crate::registry::BehaviorRegistry;

/// Registers every bundled behavior kind.
pub fn register_builtins(registry: &mut BehaviorRegistry) {
    register_ef(registry);
    register_jcas(registry);
}
