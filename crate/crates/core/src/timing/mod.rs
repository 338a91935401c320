//! Delay estimation: cycle-level digital simulation, stall detection, and
//! frame-rate-driven delay allocation for the analog front end.
//!
//! The pipeline is designed never to stall, because pixels are produced
//! at a constant exposure rate. Under that constraint every pipeline
//! stage gets roughly the same delay, so once the digital latency is
//! known the per-frame budget fixes the delay of each analog stage, and
//! in turn of each analog cell.

pub(crate) mod bindings;
mod sim;

pub use sim::DigitalSim;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{
    ACellSpec, AComponentSpec, AlgorithmGraph, HardwareDescription, MappingTable,
};
use crate::units::{Hertz, Second};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimingError {
    #[error("stage `{0}` is not mapped to any hardware unit")]
    UnmappedStage(String),
    #[error("stage `{stage}` is mapped to unknown unit `{unit}`")]
    UnknownUnit { stage: String, unit: String },
    #[error("stage `{stage}` follows a digital stage but is mapped to analog unit `{unit}`")]
    NonDigitalUnit { stage: String, unit: String },
    #[error("digital latency {digital_latency} exceeds the frame budget {frame_time}; the digital side alone misses the FPS target")]
    DigitalTooSlow {
        digital_latency: Second,
        frame_time: Second,
    },
    #[error("pinned cell delays on `{component}` total {pinned}, exceeding the component budget {available}")]
    OverCommitted {
        component: String,
        pinned: Second,
        available: Second,
    },
    #[error("algorithm graph error: {0}")]
    Graph(String),
}

/// Why the pipeline would stall, and where.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StallKind {
    /// A required pixel is not present in the upstream buffer when needed
    /// (never produced, or already overwritten).
    ProducerNotReady,
    /// The memory between two stages overflows.
    MemoryFull,
    /// More simultaneous accessors than the memory has ports.
    InsufficientPorts,
}

impl std::fmt::Display for StallKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StallKind::ProducerNotReady => "producer_not_ready",
            StallKind::MemoryFull => "memory_full",
            StallKind::InsufficientPorts => "insufficient_ports",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StallCause {
    pub kind: StallKind,
    pub unit: String,
    pub memory: Option<String>,
    pub cycle: u64,
}

/// Read/write counts and busy window of one memory over a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryTraffic {
    pub memory: String,
    pub reads: u64,
    pub writes: u64,
    /// (start, end) of the access window in seconds, if accessed at all.
    pub busy_seconds: Option<(f64, f64)>,
}

/// Complete timing picture of a design at a target frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingResult {
    pub frame_time: Second,
    pub digital_latency: Second,
    /// Busy-span cycles per digital unit, in that unit's clock domain.
    pub unit_cycles: Vec<(String, u64)>,
    /// Balanced delay of every analog pipeline stage.
    pub analog_stage_delay: Second,
    /// Number of analog pipeline slots the frame budget is split across.
    pub analog_slots: usize,
    pub memory_traffic: Vec<MemoryTraffic>,
    pub stalls: Vec<StallCause>,
}

impl TimingResult {
    pub fn stall_free(&self) -> bool {
        self.stalls.is_empty()
    }

    pub fn traffic_for(&self, memory: &str) -> Option<&MemoryTraffic> {
        self.memory_traffic.iter().find(|t| t.memory == memory)
    }
}

/// Simulate the digital pipeline: per-unit cycle counts, total digital
/// latency, exact memory access counts, and stall causes.
pub fn simulate_digital(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
    bits_per_pixel: u32,
) -> Result<DigitalSim, TimingError> {
    sim::simulate(graph, hw, mapping, bits_per_pixel)
}

/// Extract the stall report from a completed simulation. Empty means the
/// pipeline meets the stall-free design constraint.
pub fn detect_stalls(sim: &DigitalSim) -> Vec<StallCause> {
    sim.stalls.clone()
}

/// Split the per-frame budget left over by the digital domain evenly
/// across the analog pipeline slots: T_A = (T_FR - T_D) / N.
pub fn allocate_analog_delay(
    frame_time: Second,
    digital_latency: Second,
    analog_slots: usize,
) -> Result<Second, TimingError> {
    if digital_latency.value() >= frame_time.value() {
        return Err(TimingError::DigitalTooSlow {
            digital_latency,
            frame_time,
        });
    }
    assert!(analog_slots >= 1, "analog delay requires at least one slot");
    Ok(Second(
        (frame_time.value() - digital_latency.value()) / analog_slots as f64,
    ))
}

/// Number of pipeline slots the analog budget is divided across: one per
/// analog array on the signal path, plus one when the first digital
/// consumer only starts after a multi-row prologue (it then occupies a
/// slot of its own before reaching steady state).
pub fn analog_slot_count(hw: &HardwareDescription, sim: &DigitalSim) -> usize {
    hw.analog_arrays.len() + usize::from(sim.line_buffer_prologue)
}

/// Evenly allocate a component's delay budget to its cells. Cells with a
/// user-pinned delay keep it; the rest split the residual evenly.
pub fn allocate_cell_delays(
    component_delay: Second,
    component: &AComponentSpec,
) -> Result<Vec<Second>, TimingError> {
    let cells: &[ACellSpec] = &component.cells;
    let pinned: f64 = cells.iter().filter_map(|c| c.delay.map(|d| d.value())).sum();
    let free = cells.iter().filter(|c| c.delay.is_none()).count();
    if pinned > component_delay.value() {
        return Err(TimingError::OverCommitted {
            component: component.name.clone(),
            pinned: Second(pinned),
            available: component_delay,
        });
    }
    let residual = if free == 0 {
        0.0
    } else {
        (component_delay.value() - pinned) / free as f64
    };
    Ok(cells
        .iter()
        .map(|c| c.delay.unwrap_or(Second(residual)))
        .collect())
}

/// Full timing analysis of a design at a target frame rate.
pub fn compute_timing(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
    fps: Hertz,
    bits_per_pixel: u32,
) -> Result<TimingResult, TimingError> {
    let frame_time = Second(1.0 / fps.value());
    let sim = simulate_digital(graph, hw, mapping, bits_per_pixel)?;
    let slots = analog_slot_count(hw, &sim);
    let analog_stage_delay = if slots == 0 {
        Second::ZERO
    } else {
        allocate_analog_delay(frame_time, Second(sim.digital_latency), slots)?
    };
    Ok(TimingResult {
        frame_time,
        digital_latency: Second(sim.digital_latency),
        unit_cycles: sim.unit_cycles,
        analog_stage_delay,
        analog_slots: slots,
        memory_traffic: sim.memory_traffic,
        stalls: sim.stalls,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{ACellSpec, AComponentKind, AnalogCellClass, CapNode, SignalDomain};
    use crate::units::{Farad, Volt};

    fn component(cells: Vec<ACellSpec>) -> AComponentSpec {
        AComponentSpec {
            name: "comp".into(),
            kind: AComponentKind::Mac,
            cells,
            input_domain: SignalDomain::Voltage,
            output_domain: SignalDomain::Voltage,
        }
    }

    fn cap_cell(name: &str) -> ACellSpec {
        ACellSpec::new(
            name,
            AnalogCellClass::Dynamic {
                nodes: vec![CapNode {
                    capacitance: Farad(100e-15),
                    voltage_swing: Volt(1.0),
                }],
            },
        )
    }

    #[test]
    fn analog_delay_follows_frame_budget_split() {
        // 30 FPS with a tenth of the frame spent in digital, three slots.
        let t_fr = Second(1.0 / 30.0);
        let t_d = Second(1.0 / 300.0);
        let t_a = allocate_analog_delay(t_fr, t_d, 3).unwrap();
        assert!((t_a.value() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn digital_too_slow_at_boundary() {
        let t = Second(1.0 / 30.0);
        assert!(matches!(
            allocate_analog_delay(t, t, 3),
            Err(TimingError::DigitalTooSlow { .. })
        ));
    }

    #[test]
    fn even_split_across_cells() {
        let comp = component(vec![cap_cell("a"), cap_cell("b")]);
        let delays = allocate_cell_delays(Second(10e-3), &comp).unwrap();
        assert_eq!(delays, vec![Second(5e-3), Second(5e-3)]);
    }

    #[test]
    fn pinned_cell_keeps_delay_and_rest_split_residual() {
        let mut pinned = cap_cell("a");
        pinned.delay = Some(Second(4e-3));
        let comp = component(vec![pinned, cap_cell("b"), cap_cell("c")]);
        let delays = allocate_cell_delays(Second(10e-3), &comp).unwrap();
        assert_eq!(delays[0], Second(4e-3));
        assert!((delays[1].value() - 3e-3).abs() < 1e-18);
        assert!((delays[2].value() - 3e-3).abs() < 1e-18);
    }

    #[test]
    fn overcommitted_cell_delays_rejected() {
        let mut a = cap_cell("a");
        a.delay = Some(Second(7e-3));
        let mut b = cap_cell("b");
        b.delay = Some(Second(5e-3));
        let comp = component(vec![a, b]);
        assert!(matches!(
            allocate_cell_delays(Second(10e-3), &comp),
            Err(TimingError::OverCommitted { .. })
        ));
    }

    #[test]
    fn cell_delays_sum_to_component_delay() {
        let mut a = cap_cell("a");
        a.delay = Some(Second(4e-3));
        let comp = component(vec![a, cap_cell("b"), cap_cell("c")]);
        let budget = Second(10e-3);
        let total: f64 = allocate_cell_delays(budget, &comp)
            .unwrap()
            .iter()
            .map(|d| d.value())
            .sum();
        assert!((total - budget.value()).abs() < 1e-15);
    }
}
