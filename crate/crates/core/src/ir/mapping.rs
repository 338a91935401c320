//! Stage-to-hardware mapping.
//!
//! The mapping is the third, independent leg of a design: reassigning
//! stages to units (or moving the output link) explores a new system
//! without touching the algorithm or hardware sections.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Maps algorithm stages to hardware units, plus which link (if any)
/// carries each stage's output across a chip or layer boundary.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MappingTable {
    entries: BTreeMap<String, String>,
    link_assignments: BTreeMap<String, String>,
}

impl MappingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, stage: impl Into<String>, unit: impl Into<String>) {
        self.entries.insert(stage.into(), unit.into());
    }

    pub fn assign_link(&mut self, stage: impl Into<String>, link: impl Into<String>) {
        self.link_assignments.insert(stage.into(), link.into());
    }

    pub fn unit_for(&self, stage: &str) -> Option<&str> {
        self.entries.get(stage).map(String::as_str)
    }

    pub fn link_for(&self, stage: &str) -> Option<&str> {
        self.link_assignments.get(stage).map(String::as_str)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(s, u)| (s.as_str(), u.as_str()))
    }

    pub fn link_assignments(&self) -> impl Iterator<Item = (&str, &str)> {
        self.link_assignments
            .iter()
            .map(|(s, l)| (s.as_str(), l.as_str()))
    }

    /// Stages mapped to the given unit, in lexicographic stage order.
    pub fn stages_on(&self, unit: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(_, u)| u.as_str() == unit)
            .map(|(s, _)| s.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardware_reuse_maps_many_stages_to_one_unit() {
        let mut m = MappingTable::new();
        m.assign("input", "pixel_array");
        m.assign("bin", "pixel_array");
        m.assign("edge", "edge_unit");
        assert_eq!(m.stages_on("pixel_array"), vec!["bin", "input"]);
        assert_eq!(m.unit_for("edge"), Some("edge_unit"));
        assert_eq!(m.unit_for("ghost"), None);
    }

    #[test]
    fn link_assignment_is_per_stage() {
        let mut m = MappingTable::new();
        m.assign_link("edge", "mipi_out");
        assert_eq!(m.link_for("edge"), Some("mipi_out"));
        assert_eq!(m.link_for("bin"), None);
    }
}
