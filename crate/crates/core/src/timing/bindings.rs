//! Structural binding of digital stages to units, memories, and sources.
//!
//! Both the cycle simulation and the brute-force oracle interpret the
//! design through these bindings; only the counting and scheduling on
//! top of them is implemented twice.

use std::collections::BTreeMap;

use crate::ir::{
    AlgorithmGraph, DigitalUnitSpec, HardwareDescription, MappingTable, MemorySpec, Stage,
    UnitRef,
};

use super::TimingError;

/// Where a stage's primary input elements come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    /// Whole input resident before cycle 1 (unit reads no memory).
    Preloaded,
    /// Analog front end streaming one element per consumer cycle.
    AnalogFeed { elements: u64 },
    /// Output of an upstream digital stage (index into the binding list).
    Upstream(usize),
}

pub(crate) struct StageBinding<'a> {
    pub stage: &'a Stage,
    pub unit: &'a DigitalUnitSpec,
    /// One source per predecessor (or a single `Preloaded` for roots).
    pub sources: Vec<Source>,
    pub primary_mem: Option<&'a MemorySpec>,
    /// Memories read as retained operands (previous-frame data).
    pub secondary_mems: Vec<&'a MemorySpec>,
    /// Secondary memories that also receive this stage's output.
    pub retention_mems: Vec<&'a MemorySpec>,
    pub out_mem: Option<&'a MemorySpec>,
}

/// Resolve every digitally-mapped stage, in topological order.
pub(crate) fn digital_bindings<'a>(
    graph: &'a AlgorithmGraph,
    hw: &'a HardwareDescription,
    mapping: &MappingTable,
) -> Result<Vec<StageBinding<'a>>, TimingError> {
    let order = graph
        .topological_order()
        .map_err(|e| TimingError::Graph(e.to_string()))?;

    let mut bindings: Vec<StageBinding<'a>> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for name in &order {
        let stage = graph.stage(name).expect("stage from topological order");
        let unit_name = mapping
            .unit_for(name)
            .ok_or_else(|| TimingError::UnmappedStage(name.to_string()))?;
        let unit = match hw.unit(unit_name) {
            None => {
                return Err(TimingError::UnknownUnit {
                    stage: name.to_string(),
                    unit: unit_name.to_string(),
                })
            }
            Some(UnitRef::Analog(_)) => {
                // Analog stages belong to the analog front end; analog
                // downstream of digital is a structural bug.
                let digital_pred = stage.predecessors.iter().any(|p| {
                    mapping
                        .unit_for(p)
                        .and_then(|u| hw.unit(u))
                        .map(|u| matches!(u, UnitRef::Digital(_)))
                        .unwrap_or(false)
                });
                if digital_pred {
                    return Err(TimingError::NonDigitalUnit {
                        stage: name.to_string(),
                        unit: unit_name.to_string(),
                    });
                }
                continue;
            }
            Some(UnitRef::Digital(u)) => u,
        };

        let primary_mem = unit.reads_from.first().and_then(|m| hw.memory(m));
        let mut sources = Vec::new();
        for pred in &stage.predecessors {
            if let Some(&idx) = index.get(pred.as_str()) {
                sources.push(Source::Upstream(idx));
            } else {
                let elements = graph
                    .stage(pred)
                    .map(|p| p.shape.output.volume())
                    .unwrap_or(0);
                if primary_mem.is_some() {
                    sources.push(Source::AnalogFeed { elements });
                } else {
                    sources.push(Source::Preloaded);
                }
            }
        }
        if sources.is_empty() {
            sources.push(Source::Preloaded);
        }

        let bound_primary = sources
            .iter()
            .any(|s| matches!(s, Source::AnalogFeed { .. } | Source::Upstream(_)));
        let secondary_mems: Vec<&MemorySpec> = unit
            .reads_from
            .iter()
            .skip(if bound_primary && primary_mem.is_some() { 1 } else { 0 })
            .filter_map(|m| hw.memory(m))
            .collect();
        let retention_mems: Vec<&MemorySpec> = secondary_mems
            .iter()
            .copied()
            .filter(|m| unit.writes_to.iter().any(|w| w == &m.name))
            .collect();
        let out_mem = unit
            .writes_to
            .iter()
            .find(|w| !retention_mems.iter().any(|m| &m.name == *w))
            .and_then(|m| hw.memory(m));

        index.insert(name, bindings.len());
        bindings.push(StageBinding {
            stage,
            unit,
            sources,
            primary_mem,
            secondary_mems,
            retention_mems,
            out_mem,
        });
    }
    Ok(bindings)
}
