//! Component-to-server assignment.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::ProtoError;

/// Maps component names to server endpoints. Serialized transparently as a
/// JSON object, which keeps assignment files easy to write by hand.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AssignmentMap(pub BTreeMap<String, String>);

impl AssignmentMap {
    pub fn get(&self, component: &str) -> Option<&str> {
        self.0.get(component).map(String::as_str)
    }

    pub fn endpoints(&self) -> BTreeSet<&str> {
        self.0.values().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(c, s)| (c.as_str(), s.as_str()))
    }

    /// Checks the map covers exactly the given components: every component
    /// assigned, no extraneous entries.
    pub fn ensure_total(&self, components: &[String]) -> Result<(), ProtoError> {
        for component in components {
            if !self.0.contains_key(component) {
                return Err(ProtoError::MissingComponent(component.clone()));
            }
        }
        let known: BTreeSet<&str> = components.iter().map(String::as_str).collect();
        for assigned in self.0.keys() {
            if !known.contains(assigned.as_str()) {
                return Err(ProtoError::UnknownComponent(assigned.clone()));
            }
        }
        Ok(())
    }
}

/// Deals components to servers round-robin: component names are sorted, then
/// handed out cyclically in the servers' given order. Deterministic for a
/// given pair of inputs, so every party computes the same placement.
pub fn round_robin_assign(
    components: &[String],
    servers: &[String],
) -> Result<AssignmentMap, ProtoError> {
    if servers.is_empty() {
        return Err(ProtoError::NoServers);
    }
    let mut sorted: Vec<&String> = components.iter().collect();
    sorted.sort();
    for pair in sorted.windows(2) {
        if pair[0] == pair[1] {
            return Err(ProtoError::DuplicateComponent(pair[0].clone()));
        }
    }
    let mut map = BTreeMap::new();
    for (i, component) in sorted.into_iter().enumerate() {
        map.insert(component.clone(), servers[i % servers.len()].clone());
    }
    Ok(AssignmentMap(map))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn deals_sorted_components_cyclically() {
        let map = round_robin_assign(&names(&["B", "A", "C"]), &names(&["s1", "s2"])).unwrap();
        assert_eq!(map.get("A"), Some("s1"));
        assert_eq!(map.get("B"), Some("s2"));
        assert_eq!(map.get("C"), Some("s1"));
    }

    #[test]
    fn ten_components_over_five_servers_balance_exactly() {
        let components: Vec<String> = (0..10).map(|i| format!("C{i:02}")).collect();
        let servers: Vec<String> = (1..=5).map(|i| format!("s{i}")).collect();
        let map = round_robin_assign(&components, &servers).unwrap();
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, server) in map.iter() {
            *counts.entry(server).or_default() += 1;
        }
        assert_eq!(counts.len(), 5);
        assert!(counts.values().all(|&n| n == 2));
    }

    #[test]
    fn assignment_ignores_input_order() {
        let servers = names(&["s1", "s2", "s3"]);
        let a = round_robin_assign(&names(&["X", "Y", "Z", "W"]), &servers).unwrap();
        let b = round_robin_assign(&names(&["W", "Z", "X", "Y"]), &servers).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_servers_is_an_error() {
        let err = round_robin_assign(&names(&["A"]), &[]).unwrap_err();
        assert!(matches!(err, ProtoError::NoServers));
    }

    #[test]
    fn duplicate_components_are_rejected() {
        let err = round_robin_assign(&names(&["A", "A"]), &names(&["s1"])).unwrap_err();
        assert!(matches!(err, ProtoError::DuplicateComponent(component) if component == "A"));
    }

    #[test]
    fn ensure_total_flags_missing_and_unknown() {
        let map: AssignmentMap =
            serde_json::from_str(r#"{"A":"s1","B":"s2"}"#).expect("valid map");
        map.ensure_total(&names(&["A", "B"])).unwrap();
        assert!(matches!(
            map.ensure_total(&names(&["A", "B", "C"])),
            Err(ProtoError::MissingComponent(component)) if component == "C"
        ));
        assert!(matches!(
            map.ensure_total(&names(&["A"])),
            Err(ProtoError::UnknownComponent(component)) if component == "B"
        ));
    }
}
