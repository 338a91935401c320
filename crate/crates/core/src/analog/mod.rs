//! Analog-domain energy model: per-cell energy by circuit class, cell and
//! component access counting, and aggregation over analog arrays.
//!
//! The per-frame analog energy is the sum over components of their
//! per-access energy times their access count. Access counts follow from
//! the regularity of stencil workloads: every component in an array does
//! an equal share of the operations mapped onto that array.

mod cells;
pub mod defaults;

pub use cells::{
    bias_current_gm_id, capacitance_from_noise, cell_access_count, component_access_count,
    energy_dynamic_cell, energy_nonlinear_cell, energy_static_biased, energy_static_direct,
    fom_at_rate, noise_sigma_max,
};
pub use defaults::{default_cells, default_domains, DefaultCellContext};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::{
    stage_op_count, ACellSpec, AComponentSpec, AlgorithmGraph, AnalogCellClass,
    HardwareDescription, MappingTable, StageKind,
};
use crate::timing::{allocate_cell_delays, TimingError, TimingResult};
use crate::units::{Hertz, Joule, Second};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalogError {
    #[error("non-linear cell has an empty FoM table")]
    EmptyFomTable,
    #[error(transparent)]
    Timing(#[from] TimingError),
}

/// Energy contribution of one cell within a component access.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEnergy {
    pub cell: String,
    pub energy_per_use: Joule,
    /// spatial * temporal uses per component access.
    pub uses_per_access: u64,
}

/// Energy of one component bank of an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentEnergy {
    pub component: String,
    pub energy_per_access: Joule,
    /// Accesses of each component instance per frame.
    pub accesses_per_component: u64,
    pub num_components: u64,
    /// energy_per_access * accesses_per_component * num_components.
    pub energy: Joule,
    pub cells: Vec<CellEnergy>,
}

/// Energy of one analog array per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEnergy {
    pub array: String,
    /// Operations mapped onto (or streamed through) the array per frame.
    pub ops: u64,
    pub energy: Joule,
    pub components: Vec<ComponentEnergy>,
}

/// Full analog-domain breakdown per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogEnergyBreakdown {
    pub arrays: Vec<ArrayEnergy>,
    pub total: Joule,
}

impl AnalogEnergyBreakdown {
    pub fn array(&self, name: &str) -> Option<&ArrayEnergy> {
        self.arrays.iter().find(|a| a.array == name)
    }
}

/// How many operations land on each analog array per frame.
///
/// Arrays are declared in signal-flow order. An array with mapped
/// compute stages performs their op counts; the raw readout of a mapped
/// pixel-input stage counts once per produced pixel unless an in-array
/// compute stage already consumes those pixels (binned readout reads
/// each pixel exactly once). Arrays with no mapped stage pass the
/// current tensor through (an ADC bank converting whatever flows by).
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayWorkload {
    pub array: String,
    pub ops: u64,
    /// True when the ops are pass-through traffic, not mapped stages.
    pub passthrough: bool,
}

pub fn array_workloads(
    graph: &AlgorithmGraph,
    hw: &HardwareDescription,
    mapping: &MappingTable,
) -> Vec<ArrayWorkload> {
    let topo = graph.topological_order().unwrap_or_default();
    let stage_rank = |name: &str| topo.iter().position(|s| *s == name).unwrap_or(usize::MAX);

    let mut current_volume: u64 = 0;
    let mut workloads = Vec::new();
    for array in &hw.analog_arrays {
        let mut mapped: Vec<&str> = mapping.stages_on(&array.name);
        mapped.sort_by_key(|s| stage_rank(s));
        let mapped_stages: Vec<_> = mapped
            .iter()
            .filter_map(|name| graph.stage(name))
            .collect();

        if mapped_stages.is_empty() {
            workloads.push(ArrayWorkload {
                array: array.name.clone(),
                ops: current_volume,
                passthrough: true,
            });
            continue;
        }

        let mut ops = 0u64;
        for stage in &mapped_stages {
            match stage.kind {
                StageKind::PixelInput => {
                    let consumed_in_array = mapped_stages.iter().any(|s| {
                        !matches!(s.kind, StageKind::PixelInput)
                            && s.predecessors.iter().any(|p| p == &stage.name)
                    });
                    if !consumed_in_array {
                        ops += stage.shape.output.volume();
                    }
                }
                _ => ops += stage_op_count(stage),
            }
        }
        if let Some(last) = mapped_stages.last() {
            current_volume = last.shape.output.volume();
        }
        workloads.push(ArrayWorkload {
            array: array.name.clone(),
            ops,
            passthrough: false,
        });
    }
    workloads
}

/// Per-use energy of a cell given its allocated delay slot.
///
/// Static-biased gm/Id cells derive their bandwidth from the reciprocal
/// of the slot, so their energy is invariant to how the component delay
/// is split. Non-linear cells sample at the reciprocal of the slot.
pub fn cell_energy_per_use(cell: &ACellSpec, slot: Second) -> Result<Joule, AnalogError> {
    match &cell.class {
        AnalogCellClass::Dynamic { nodes } => Ok(energy_dynamic_cell(nodes)),
        AnalogCellClass::StaticBiasedDirect {
            load,
            voltage_swing,
            supply,
        } => Ok(energy_static_direct(*load, *voltage_swing, *supply)),
        AnalogCellClass::StaticBiasedGmId {
            load,
            gain,
            gm_over_id,
            supply,
        } => {
            let bandwidth = 1.0 / slot.value();
            let gbw = Hertz(gain * bandwidth);
            let bias = bias_current_gm_id(*load, gbw, *gm_over_id);
            Ok(energy_static_biased(*supply, bias, slot))
        }
        AnalogCellClass::NonLinear { fom_table } => {
            let rate = Hertz(1.0 / slot.value());
            energy_nonlinear_cell(fom_table, rate, 1)
        }
    }
}

/// Per-access energy of a component: the weighted sum of its cells.
pub fn component_energy(
    component: &AComponentSpec,
    cell_delays: &[Second],
) -> Result<(Joule, Vec<CellEnergy>), AnalogError> {
    let mut cells = Vec::with_capacity(component.cells.len());
    let mut total = 0.0;
    for (cell, slot) in component.cells.iter().zip(cell_delays) {
        let per_use = cell_energy_per_use(cell, *slot)?;
        let uses = cell_access_count(cell.spatial_count, cell.temporal_count);
        total += per_use.value() * uses as f64;
        cells.push(CellEnergy {
            cell: cell.name.clone(),
            energy_per_use: per_use,
            uses_per_access: uses,
        });
    }
    Ok((Joule(total), cells))
}

/// Full analog energy breakdown for one frame.
pub fn analog_frame_energy(
    hw: &HardwareDescription,
    mapping: &MappingTable,
    graph: &AlgorithmGraph,
    timing: &TimingResult,
) -> Result<AnalogEnergyBreakdown, AnalogError> {
    let workloads = array_workloads(graph, hw, mapping);
    let mut arrays = Vec::with_capacity(workloads.len());
    let mut total = 0.0;
    for wl in &workloads {
        let array = hw.analog_array(&wl.array).expect("workload names an array");
        let mut comps = Vec::with_capacity(array.components.len());
        let mut array_total = 0.0;
        for bank in &array.components {
            let delays = allocate_cell_delays(timing.analog_stage_delay, &bank.spec)?;
            let (per_access, cell_detail) = component_energy(&bank.spec, &delays)?;
            let accesses = component_access_count(wl.ops, bank.count);
            let energy = per_access.value() * accesses as f64 * bank.count as f64;
            array_total += energy;
            comps.push(ComponentEnergy {
                component: bank.spec.name.clone(),
                energy_per_access: per_access,
                accesses_per_component: accesses,
                num_components: bank.count,
                energy: Joule(energy),
                cells: cell_detail,
            });
        }
        total += array_total;
        arrays.push(ArrayEnergy {
            array: wl.array.clone(),
            ops: wl.ops,
            energy: Joule(array_total),
            components: comps,
        });
    }
    Ok(AnalogEnergyBreakdown {
        arrays,
        total: Joule(total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{
        build_graph, AComponentKind, ComponentBank, Dims, SignalDomain, Stage, StageShape,
    };
    use crate::units::{Farad, Volt};

    fn graph_fig3() -> AlgorithmGraph {
        build_graph(vec![
            Stage::pixel_input("input", Dims::new(32, 32, 1)),
            Stage::stencil(
                "bin",
                StageShape::stencil(Dims::new(32, 32, 1), Dims::new(16, 16, 1), (2, 2), (2, 2)),
                4,
                vec!["input".into()],
            ),
            Stage::stencil(
                "edge",
                StageShape::stencil(Dims::new(16, 16, 1), Dims::new(14, 14, 1), (3, 3), (1, 1)),
                9,
                vec!["bin".into()],
            ),
        ])
        .unwrap()
    }

    fn hw_fig3() -> HardwareDescription {
        let ctx = DefaultCellContext::default();
        let pixel = AComponentSpec {
            name: "pixel".into(),
            kind: AComponentKind::ActivePixelSensor,
            cells: default_cells(AComponentKind::ActivePixelSensor, &ctx),
            input_domain: SignalDomain::Charge,
            output_domain: SignalDomain::Voltage,
        };
        let adc = AComponentSpec {
            name: "adc".into(),
            kind: AComponentKind::Adc,
            cells: default_cells(AComponentKind::Adc, &ctx),
            input_domain: SignalDomain::Voltage,
            output_domain: SignalDomain::Digital,
        };
        HardwareDescription {
            analog_arrays: vec![
                crate::ir::AnalogArraySpec {
                    name: "pixel_array".into(),
                    components: vec![ComponentBank {
                        spec: pixel,
                        count: 1024,
                    }],
                    num_input: Dims::new(32, 32, 1),
                    num_output: Dims::new(16, 16, 1),
                    input_domain: SignalDomain::Charge,
                    output_domain: SignalDomain::Voltage,
                    layer: None,
                },
                crate::ir::AnalogArraySpec {
                    name: "adc_array".into(),
                    components: vec![ComponentBank { spec: adc, count: 16 }],
                    num_input: Dims::new(16, 16, 1),
                    num_output: Dims::new(16, 16, 1),
                    input_domain: SignalDomain::Voltage,
                    output_domain: SignalDomain::Digital,
                    layer: None,
                },
            ],
            ..Default::default()
        }
    }

    fn mapping_fig3() -> MappingTable {
        let mut m = MappingTable::new();
        m.assign("input", "pixel_array");
        m.assign("bin", "pixel_array");
        m.assign("edge", "edge_unit");
        m
    }

    #[test]
    fn fig3_workloads_subsume_readout_and_pass_through_adc() {
        let graph = graph_fig3();
        let hw = hw_fig3();
        let wl = array_workloads(&graph, &hw, &mapping_fig3());
        assert_eq!(wl.len(), 2);
        // Binned readout: 256 windows x 4 consumed pixels = 1024 ops,
        // the raw readout is subsumed by the in-array binning.
        assert_eq!(wl[0].ops, 1024);
        assert!(!wl[0].passthrough);
        // The ADC bank converts the binned 16x16 tensor: 256 conversions.
        assert_eq!(wl[1].ops, 256);
        assert!(wl[1].passthrough);
    }

    #[test]
    fn readout_only_design_counts_each_pixel_once() {
        let graph = build_graph(vec![Stage::pixel_input("input", Dims::new(32, 32, 1))]).unwrap();
        let hw = hw_fig3();
        let mut mapping = MappingTable::new();
        mapping.assign("input", "pixel_array");
        let wl = array_workloads(&graph, &hw, &mapping);
        assert_eq!(wl[0].ops, 1024);
        assert_eq!(wl[1].ops, 1024);
    }

    #[test]
    fn single_dynamic_cell_component_energy() {
        let comp = AComponentSpec {
            name: "c".into(),
            kind: AComponentKind::PassiveMemory,
            cells: vec![ACellSpec::new(
                "cap",
                AnalogCellClass::Dynamic {
                    nodes: vec![crate::ir::CapNode {
                        capacitance: Farad(100e-15),
                        voltage_swing: Volt(1.0),
                    }],
                },
            )],
            input_domain: SignalDomain::Voltage,
            output_domain: SignalDomain::Voltage,
        };
        let (e, cells) = component_energy(&comp, &[Second(1e-6)]).unwrap();
        assert_eq!(e, Joule(100e-15));
        assert_eq!(cells.len(), 1);
    }

    #[test]
    fn aps_component_counts_source_follower_twice() {
        let ctx = DefaultCellContext::default();
        let comp = AComponentSpec {
            name: "aps".into(),
            kind: AComponentKind::ActivePixelSensor,
            cells: default_cells(AComponentKind::ActivePixelSensor, &ctx),
            input_domain: SignalDomain::Charge,
            output_domain: SignalDomain::Voltage,
        };
        let delays = vec![Second(1e-6); 3];
        let (total, cells) = component_energy(&comp, &delays).unwrap();
        // The CDS readout doubles the source-follower term.
        let sf = &cells[2];
        assert_eq!(sf.uses_per_access, 2);
        let expected: f64 = cells
            .iter()
            .map(|c| c.energy_per_use.value() * c.uses_per_access as f64)
            .sum();
        assert!((total.value() - expected).abs() < 1e-30);
    }

    #[test]
    fn mac_component_mixes_dynamic_and_gm_id_terms() {
        let ctx = DefaultCellContext::default();
        let comp = AComponentSpec {
            name: "mac".into(),
            kind: AComponentKind::Mac,
            cells: default_cells(AComponentKind::Mac, &ctx),
            input_domain: SignalDomain::Voltage,
            output_domain: SignalDomain::Voltage,
        };
        let (total, cells) = component_energy(&comp, &[Second(1e-6), Second(1e-6)]).unwrap();
        assert_eq!(cells.len(), 2);
        assert!(total.value() > 0.0);
    }

    #[test]
    fn repartitioning_components_preserves_array_energy_when_exact() {
        let graph = graph_fig3();
        let mapping = mapping_fig3();
        let timing = TimingResult {
            frame_time: Second(1.0 / 30.0),
            digital_latency: Second(1e-3),
            unit_cycles: vec![],
            analog_stage_delay: Second(1e-2),
            analog_slots: 3,
            memory_traffic: vec![],
            stalls: vec![],
        };
        let hw = hw_fig3();
        let base = analog_frame_energy(&hw, &mapping, &graph, &timing).unwrap();

        let mut hw2 = hw.clone();
        hw2.analog_arrays[1].components[0].count = 32; // 256/32 divides evenly
        let repart = analog_frame_energy(&hw2, &mapping, &graph, &timing).unwrap();
        let a = base.array("adc_array").unwrap().energy.value();
        let b = repart.array("adc_array").unwrap().energy.value();
        assert!((a - b).abs() < 1e-24);
    }
}
