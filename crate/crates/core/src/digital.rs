//! Digital-domain energy: compute units, memory dynamic accesses, memory
//! leakage, and process-node rescaling of user-supplied energies.
//!
//! Per-cycle and per-access energies are user inputs: they come from a
//! synthesis flow or a memory compiler for the actual component designs.
//! This module only multiplies them with the counts the cycle simulation
//! produced.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{HardwareDescription, MemorySpec};
use crate::timing::TimingResult;
use crate::units::{Hertz, Joule};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DigitalError {
    #[error("process node {0} nm is not in the scaling table")]
    UnknownNode(u32),
}

/// Energy of one compute unit over a frame: E_cycle * cycles.
pub fn compute_unit_energy(energy_per_cycle: Joule, cycles: u64) -> Joule {
    Joule(energy_per_cycle.value() * cycles as f64)
}

/// Energy of one memory over a frame: dynamic accesses plus leakage over
/// the powered fraction of the frame time.
pub fn memory_energy(
    spec: &MemorySpec,
    reads: u64,
    writes: u64,
    frame_rate: Hertz,
    active_fraction: f64,
) -> Joule {
    let dynamic =
        reads as f64 * spec.read_energy.value() + writes as f64 * spec.write_energy.value();
    let leakage = spec.leakage_power.value() * (1.0 / frame_rate.value()) * active_fraction;
    Joule(dynamic + leakage)
}

/// Rescale an energy characterized at one process node to another using a
/// user-supplied node -> relative-energy table.
pub fn scale_energy_across_nodes(
    energy: Joule,
    from_node: u32,
    to_node: u32,
    scaling_table: &BTreeMap<u32, f64>,
) -> Result<Joule, DigitalError> {
    if from_node == to_node {
        return Ok(energy);
    }
    let from = scaling_table
        .get(&from_node)
        .ok_or(DigitalError::UnknownNode(from_node))?;
    let to = scaling_table
        .get(&to_node)
        .ok_or(DigitalError::UnknownNode(to_node))?;
    Ok(Joule(energy.value() * to / from))
}

/// Per-unit and per-memory digital energy over one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalEnergyBreakdown {
    pub units: Vec<UnitEnergy>,
    pub memories: Vec<MemoryEnergy>,
    pub total: Joule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitEnergy {
    pub unit: String,
    pub cycles: u64,
    pub energy_per_cycle: Joule,
    pub energy: Joule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryEnergy {
    pub memory: String,
    pub reads: u64,
    pub writes: u64,
    pub dynamic_energy: Joule,
    pub active_fraction: f64,
    pub leakage_energy: Joule,
    pub energy: Joule,
}

impl DigitalEnergyBreakdown {
    pub fn unit(&self, name: &str) -> Option<&UnitEnergy> {
        self.units.iter().find(|u| u.unit == name)
    }

    pub fn memory(&self, name: &str) -> Option<&MemoryEnergy> {
        self.memories.iter().find(|m| m.memory == name)
    }
}

/// Effective energy after process-node rescaling against the layer node.
fn scaled_energy(
    energy: Joule,
    reference_node: Option<u32>,
    layer: Option<&str>,
    hw: &HardwareDescription,
    scaling_table: &BTreeMap<u32, f64>,
) -> Result<Joule, DigitalError> {
    let Some(reference) = reference_node else {
        return Ok(energy);
    };
    let Some(layer_node) = layer.and_then(|l| hw.layer(l)).map(|l| l.process_node_nm) else {
        return Ok(energy);
    };
    scale_energy_across_nodes(energy, reference, layer_node, scaling_table)
}

/// Assemble the digital breakdown from the timing result.
///
/// The default active fraction of a memory is its simulated busy window
/// over the frame time; memories with zero accesses are treated as
/// power-gated. An explicit `active_fraction` in the spec overrides the
/// default (a retained frame buffer that can never be gated sets 1.0).
pub fn digital_frame_energy(
    hw: &HardwareDescription,
    timing: &TimingResult,
    frame_rate: Hertz,
    scaling_table: &BTreeMap<u32, f64>,
) -> Result<DigitalEnergyBreakdown, DigitalError> {
    let mut units = Vec::new();
    let mut total = 0.0;
    for (name, cycles) in &timing.unit_cycles {
        let spec = hw.digital_unit(name).expect("unit from timing exists");
        let per_cycle = scaled_energy(
            spec.energy_per_cycle,
            spec.energy_reference_node,
            spec.layer.as_deref(),
            hw,
            scaling_table,
        )?;
        let energy = compute_unit_energy(per_cycle, *cycles);
        total += energy.value();
        units.push(UnitEnergy {
            unit: name.clone(),
            cycles: *cycles,
            energy_per_cycle: per_cycle,
            energy,
        });
    }

    let frame_time = 1.0 / frame_rate.value();
    let mut memories = Vec::new();
    for traffic in &timing.memory_traffic {
        let spec = hw
            .memory(&traffic.memory)
            .expect("memory from timing exists");
        let accessed = traffic.reads > 0 || traffic.writes > 0;
        let active_fraction = if !accessed {
            0.0
        } else {
            spec.active_fraction.unwrap_or_else(|| {
                traffic
                    .busy_seconds
                    .map(|(start, end)| ((end - start) / frame_time).clamp(0.0, 1.0))
                    .unwrap_or(0.0)
            })
        };
        let scale = |e: Joule| {
            scaled_energy(
                e,
                spec.energy_reference_node,
                spec.layer.as_deref(),
                hw,
                scaling_table,
            )
        };
        let read_energy = scale(spec.read_energy)?;
        let write_energy = scale(spec.write_energy)?;
        let leak_power = scale(Joule(spec.leakage_power.value()))?.value();
        let dynamic = Joule(
            traffic.reads as f64 * read_energy.value()
                + traffic.writes as f64 * write_energy.value(),
        );
        let leakage = Joule(leak_power * frame_time * active_fraction);
        let energy = Joule(dynamic.value() + leakage.value());
        total += energy.value();
        memories.push(MemoryEnergy {
            memory: traffic.memory.clone(),
            reads: traffic.reads,
            writes: traffic.writes,
            dynamic_energy: dynamic,
            active_fraction,
            leakage_energy: leakage,
            energy,
        });
    }

    Ok(DigitalEnergyBreakdown {
        units,
        memories,
        total: Joule(total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::MemoryKind;
    use crate::units::Watt;

    fn mem(leak: f64, alpha: Option<f64>) -> MemorySpec {
        MemorySpec {
            name: "m".into(),
            kind: MemoryKind::Fifo,
            capacity_bytes: 1024,
            read_energy: Joule(1e-12),
            write_energy: Joule(1.2e-12),
            leakage_power: Watt(leak),
            ports: 2,
            active_fraction: alpha,
            layer: None,
            energy_reference_node: None,
        }
    }

    #[test]
    fn compute_energy_is_product() {
        assert_eq!(compute_unit_energy(Joule(2e-12), 1_000_000), Joule(2e-6));
        assert_eq!(compute_unit_energy(Joule(2e-12), 0), Joule(0.0));
        // Golden edge accelerator: 260 cycles at 5 pJ.
        let e = compute_unit_energy(Joule(5e-12), 260);
        assert!((e.value() - 1.30e-9).abs() < 1e-21);
    }

    #[test]
    fn memory_energy_sums_dynamic_and_leakage() {
        // 1e6 reads * 1 pJ + 5e5 writes * 1.2 pJ + 1 mW * 33.33 ms * 0.5.
        let spec = mem(1e-3, Some(0.5));
        let e = memory_energy(&spec, 1_000_000, 500_000, Hertz(30.0), 0.5);
        let expected = 1e-6 + 0.6e-6 + 1e-3 / 30.0 * 0.5;
        assert!((e.value() - expected).abs() < 1e-18);
        assert!((e.value() - 18.2667e-6).abs() < 1e-9);
    }

    #[test]
    fn alpha_zero_is_dynamic_only() {
        let spec = mem(1e-3, Some(0.0));
        let e = memory_energy(&spec, 1000, 1000, Hertz(30.0), 0.0);
        assert!((e.value() - (1000.0 * 1e-12 + 1000.0 * 1.2e-12)).abs() < 1e-24);
    }

    #[test]
    fn alpha_one_leaks_for_the_whole_frame() {
        let spec = mem(1e-3, Some(1.0));
        let e = memory_energy(&spec, 0, 0, Hertz(30.0), 1.0);
        assert!((e.value() - 1e-3 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn leakage_invariant_to_access_counts_dynamic_invariant_to_alpha() {
        let spec = mem(2e-3, None);
        let leak = |reads, writes| {
            memory_energy(&spec, reads, writes, Hertz(30.0), 0.7).value()
                - memory_energy(&spec, reads, writes, Hertz(30.0), 0.0).value()
        };
        assert!((leak(0, 0) - leak(123_456, 654_321)).abs() < 1e-18);
        let dynamic = |alpha| {
            memory_energy(&spec, 1000, 500, Hertz(30.0), alpha).value()
                - memory_energy(&spec, 0, 0, Hertz(30.0), alpha).value()
        };
        assert!((dynamic(0.0) - dynamic(1.0)).abs() < 1e-24);
    }

    #[test]
    fn node_scaling_ratio_rule() {
        let table: BTreeMap<u32, f64> = [(65, 1.0), (22, 0.25)].into_iter().collect();
        let e = scale_energy_across_nodes(Joule(100e-12), 65, 22, &table).unwrap();
        assert!((e.value() - 25e-12).abs() < 1e-24);
        let same = scale_energy_across_nodes(Joule(100e-12), 65, 65, &BTreeMap::new()).unwrap();
        assert_eq!(same, Joule(100e-12));
        assert_eq!(
            scale_energy_across_nodes(Joule(1.0), 65, 14, &table),
            Err(DigitalError::UnknownNode(14))
        );
    }

    #[test]
    fn node_scaling_composes() {
        let table: BTreeMap<u32, f64> = [(130, 4.0), (65, 2.0), (22, 0.5)].into_iter().collect();
        let direct = scale_energy_across_nodes(Joule(1e-9), 130, 22, &table).unwrap();
        let via = scale_energy_across_nodes(
            scale_energy_across_nodes(Joule(1e-9), 130, 65, &table).unwrap(),
            65,
            22,
            &table,
        )
        .unwrap();
        assert!((direct.value() - via.value()).abs() < 1e-24);
    }
}
