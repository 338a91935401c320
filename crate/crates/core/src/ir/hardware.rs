//! Hardware description: analog arrays, digital units, memories, links,
//! and stacking layers.
//!
//! Analog hardware is hierarchical: an analog functional array is a bank
//! of identical components, each built from a chain of analog cells. The
//! cell is where circuit-level energy behavior lives; everything above it
//! is structure and counting.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::algorithm::Dims;
use crate::units::{Farad, Hertz, Joule, Second, Volt, Watt};

/// Signal representation at a unit boundary.
///
/// `TimeCurrent` covers PWM-style designs that encode a value in both
/// pulse width and current level; it matches either member domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalDomain {
    Charge,
    Voltage,
    Current,
    Time,
    Digital,
    TimeCurrent,
}

impl SignalDomain {
    /// Whether a producer in `self` can directly feed a consumer in `other`.
    pub fn feeds(self, other: SignalDomain) -> bool {
        use SignalDomain::*;
        self == other
            || matches!(
                (self, other),
                (TimeCurrent, Time) | (TimeCurrent, Current) | (Time, TimeCurrent) | (Current, TimeCurrent)
            )
    }

    /// True when the pair-domain waiver applies (informational in reports).
    pub fn pair_waiver(self, other: SignalDomain) -> bool {
        self != other && self.feeds(other)
    }
}

impl std::fmt::Display for SignalDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SignalDomain::Charge => "charge",
            SignalDomain::Voltage => "voltage",
            SignalDomain::Current => "current",
            SignalDomain::Time => "time",
            SignalDomain::Digital => "digital",
            SignalDomain::TimeCurrent => "time_current",
        };
        f.write_str(s)
    }
}

/// One capacitance node of a dynamic cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapNode {
    pub capacitance: Farad,
    pub voltage_swing: Volt,
}

/// Sample point of a conversion-energy figure-of-merit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FomPoint {
    pub sample_rate: Hertz,
    pub energy_per_conversion: Joule,
}

/// Circuit class of an analog cell. The class decides which closed-form
/// energy model applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AnalogCellClass {
    /// Charging/discharging of capacitance nodes.
    Dynamic { nodes: Vec<CapNode> },
    /// Bias current drives the load directly (e.g. a source follower).
    StaticBiasedDirect {
        load: Farad,
        voltage_swing: Volt,
        supply: Volt,
    },
    /// Bias current sized by the gm/Id method (e.g. an OpAmp).
    StaticBiasedGmId {
        load: Farad,
        gain: f64,
        gm_over_id: f64,
        supply: Volt,
    },
    /// Non-linear transfer (ADC, comparator): energy from a FoM table.
    NonLinear { fom_table: Vec<FomPoint> },
}

/// Valid gm/Id range for transistors between weak and strong inversion.
pub const GM_ID_RANGE: (f64, f64) = (10.0, 20.0);

/// A basic analog circuit block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ACellSpec {
    pub name: String,
    pub class: AnalogCellClass,
    /// Copies of the cell used per component access.
    pub spatial_count: u64,
    /// Uses of the cell per component access (2 for correlated double
    /// sampling on readout cells).
    pub temporal_count: u64,
    /// User-pinned delay; unset cells split the residual component delay.
    pub delay: Option<Second>,
    /// Permit gm/Id outside [10, 20].
    #[serde(default)]
    pub gm_id_override: bool,
}

impl ACellSpec {
    pub fn new(name: impl Into<String>, class: AnalogCellClass) -> Self {
        Self {
            name: name.into(),
            class,
            spatial_count: 1,
            temporal_count: 1,
            delay: None,
            gm_id_override: false,
        }
    }

    pub fn with_counts(mut self, spatial: u64, temporal: u64) -> Self {
        self.spatial_count = spatial;
        self.temporal_count = temporal;
        self
    }

    pub fn validate(&self) -> Result<(), HardwareError> {
        let err = |detail: String| HardwareError::InvalidCell {
            cell: self.name.clone(),
            detail,
        };
        if self.spatial_count == 0 || self.temporal_count == 0 {
            return Err(err("spatial/temporal counts must be >= 1".into()));
        }
        match &self.class {
            AnalogCellClass::Dynamic { nodes } => {
                for n in nodes {
                    if n.capacitance.value() <= 0.0 || n.voltage_swing.value() <= 0.0 {
                        return Err(err("capacitance and voltage swing must be > 0".into()));
                    }
                }
            }
            AnalogCellClass::StaticBiasedDirect {
                load,
                voltage_swing,
                supply,
            } => {
                if load.value() <= 0.0 || voltage_swing.value() <= 0.0 || supply.value() <= 0.0 {
                    return Err(err("load, swing, and supply must be > 0".into()));
                }
            }
            AnalogCellClass::StaticBiasedGmId {
                load,
                gain,
                gm_over_id,
                supply,
            } => {
                if load.value() <= 0.0 || *gain <= 0.0 || supply.value() <= 0.0 {
                    return Err(err("load, gain, and supply must be > 0".into()));
                }
                let (lo, hi) = GM_ID_RANGE;
                if !self.gm_id_override && !(*gm_over_id >= lo && *gm_over_id <= hi) {
                    return Err(err(format!(
                        "gm/Id {gm_over_id} outside [{lo}, {hi}]; set gm_id_override to allow"
                    )));
                }
                if *gm_over_id <= 0.0 {
                    return Err(err("gm/Id must be > 0".into()));
                }
            }
            AnalogCellClass::NonLinear { fom_table } => {
                if fom_table.is_empty() {
                    return Err(err("FoM table must not be empty".into()));
                }
                for p in fom_table {
                    if p.sample_rate.value() <= 0.0 || p.energy_per_conversion.value() <= 0.0 {
                        return Err(err("FoM entries must be > 0".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Operation an analog component performs (the supported unit palette).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AComponentKind {
    ActivePixelSensor,
    DigitalPixelSensor,
    PwmPixel,
    Adc,
    Mac,
    Max,
    Scaling,
    Add,
    Log,
    Abs,
    Comparator,
    PassiveMemory,
    ActiveMemory,
    SampleAndHold,
}

impl AComponentKind {
    pub fn is_pixel(self) -> bool {
        matches!(
            self,
            AComponentKind::ActivePixelSensor
                | AComponentKind::DigitalPixelSensor
                | AComponentKind::PwmPixel
        )
    }

    /// Analog storage elements that can absorb dimension mismatches.
    pub fn is_analog_memory(self) -> bool {
        matches!(
            self,
            AComponentKind::PassiveMemory
                | AComponentKind::ActiveMemory
                | AComponentKind::SampleAndHold
        )
    }

    /// Components whose output is already digital.
    pub fn converts_to_digital(self) -> bool {
        matches!(self, AComponentKind::Adc | AComponentKind::Comparator)
    }
}

/// An analog component: a chain of cells the signal flows through.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AComponentSpec {
    pub name: String,
    pub kind: AComponentKind,
    pub cells: Vec<ACellSpec>,
    pub input_domain: SignalDomain,
    pub output_domain: SignalDomain,
}

impl AComponentSpec {
    pub fn validate(&self) -> Result<(), HardwareError> {
        if self.cells.is_empty() {
            return Err(HardwareError::EmptyComponent(self.name.clone()));
        }
        for cell in &self.cells {
            cell.validate()?;
        }
        Ok(())
    }
}

/// A bank of `count` identical components inside an array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentBank {
    pub spec: AComponentSpec,
    pub count: u64,
}

/// An analog functional array: the pixel array, a column-ADC bank, a
/// column-parallel PE array, an analog frame buffer, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogArraySpec {
    pub name: String,
    pub components: Vec<ComponentBank>,
    pub num_input: Dims,
    pub num_output: Dims,
    pub input_domain: SignalDomain,
    pub output_domain: SignalDomain,
    pub layer: Option<String>,
}

impl AnalogArraySpec {
    pub fn validate(&self) -> Result<(), HardwareError> {
        if self.components.is_empty() {
            return Err(HardwareError::EmptyArray(self.name.clone()));
        }
        for bank in &self.components {
            if bank.count == 0 {
                return Err(HardwareError::InvalidArray {
                    array: self.name.clone(),
                    detail: format!("component `{}` has count 0", bank.spec.name),
                });
            }
            bank.spec.validate()?;
        }
        // Chained components must hand the signal over in compatible domains.
        for pair in self.components.windows(2) {
            let (a, b) = (&pair[0].spec, &pair[1].spec);
            if !a.output_domain.feeds(b.input_domain) {
                return Err(HardwareError::InvalidArray {
                    array: self.name.clone(),
                    detail: format!(
                        "component `{}` outputs {} but `{}` expects {}",
                        a.name, a.output_domain, b.name, b.input_domain
                    ),
                });
            }
        }
        Ok(())
    }

    /// Whether any component in the array is an analog memory.
    pub fn has_analog_memory(&self) -> bool {
        self.components.iter().any(|b| b.spec.kind.is_analog_memory())
    }

    pub fn is_pixel_array(&self) -> bool {
        self.components
            .first()
            .map(|b| b.spec.kind.is_pixel())
            .unwrap_or(false)
    }
}

/// Digital compute style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigitalUnitKind {
    PipelinedAccelerator,
    SystolicArray { rows: u32, cols: u32 },
}

/// A pipelined digital accelerator (or systolic array).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigitalUnitSpec {
    pub name: String,
    pub kind: DigitalUnitKind,
    /// New input elements ingested per cycle.
    pub input_pixels_per_cycle: Dims,
    /// Output elements produced per cycle at full throughput.
    pub output_pixels_per_cycle: Dims,
    /// Pipeline depth in cycles.
    pub num_stages: u32,
    pub energy_per_cycle: Joule,
    pub clock: Hertz,
    /// Memories this unit reads; the first is the primary input path,
    /// later entries are secondary operands (e.g. a retained frame).
    pub reads_from: Vec<String>,
    /// Memories this unit writes; the first is the primary output path.
    pub writes_to: Vec<String>,
    pub layer: Option<String>,
    /// Process node (nm) at which `energy_per_cycle` was characterized;
    /// when it differs from the layer's node, the energy is rescaled.
    pub energy_reference_node: Option<u32>,
}

impl DigitalUnitSpec {
    pub fn validate(&self) -> Result<(), HardwareError> {
        let err = |detail: String| HardwareError::InvalidUnit {
            unit: self.name.clone(),
            detail,
        };
        if self.input_pixels_per_cycle.volume() == 0 || self.output_pixels_per_cycle.volume() == 0 {
            return Err(err("pixels per cycle must be >= 1".into()));
        }
        if self.num_stages == 0 {
            return Err(err("num_stages must be >= 1".into()));
        }
        if self.energy_per_cycle.value() < 0.0 {
            return Err(err("energy_per_cycle must be >= 0".into()));
        }
        if self.clock.value() <= 0.0 {
            return Err(err("clock must be > 0".into()));
        }
        if let DigitalUnitKind::SystolicArray { rows, cols } = self.kind {
            if rows == 0 || cols == 0 {
                return Err(err("systolic array dimensions must be >= 1".into()));
            }
        }
        Ok(())
    }

    /// Peak arithmetic throughput used for DNN stages (ops per cycle).
    pub fn macs_per_cycle(&self) -> u64 {
        match self.kind {
            DigitalUnitKind::SystolicArray { rows, cols } => rows as u64 * cols as u64,
            DigitalUnitKind::PipelinedAccelerator => self.output_pixels_per_cycle.volume(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    Fifo,
    LineBuffer { rows: u32, row_width: u32 },
    DoubleBuffer,
}

/// A digital memory structure between compute units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorySpec {
    pub name: String,
    pub kind: MemoryKind,
    pub capacity_bytes: u64,
    pub read_energy: Joule,
    pub write_energy: Joule,
    pub leakage_power: Watt,
    pub ports: u32,
    /// Fraction of the frame time the memory is powered. Unset means
    /// "derive from the simulated busy window".
    pub active_fraction: Option<f64>,
    pub layer: Option<String>,
    pub energy_reference_node: Option<u32>,
}

impl MemorySpec {
    pub fn validate(&self) -> Result<(), HardwareError> {
        let err = |detail: String| HardwareError::InvalidMemory {
            memory: self.name.clone(),
            detail,
        };
        if self.capacity_bytes == 0 {
            return Err(err("capacity must be > 0".into()));
        }
        if self.ports == 0 {
            return Err(err("ports must be >= 1".into()));
        }
        if let Some(a) = self.active_fraction {
            if !(0.0..=1.0).contains(&a) {
                return Err(err(format!("active_fraction {a} outside [0, 1]")));
            }
        }
        if self.read_energy.value() < 0.0
            || self.write_energy.value() < 0.0
            || self.leakage_power.value() < 0.0
        {
            return Err(err("energies and leakage power must be >= 0".into()));
        }
        if let MemoryKind::LineBuffer { rows, row_width } = self.kind {
            if rows == 0 || row_width == 0 {
                return Err(err("line buffer rows and row width must be >= 1".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Mipi,
    Utsv,
}

/// An off-sensor or inter-layer data link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    pub kind: LinkKind,
    pub energy_per_byte: Joule,
    pub layer: Option<String>,
}

impl LinkSpec {
    pub fn validate(&self) -> Result<(), HardwareError> {
        if self.energy_per_byte.value() <= 0.0 {
            return Err(HardwareError::InvalidLink {
                link: self.name.clone(),
                detail: "energy_per_byte must be > 0".into(),
            });
        }
        Ok(())
    }
}

/// A die layer; 2D designs declare one, stacked designs several.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub process_node_nm: u32,
    /// Declared area; power density is reported only when present.
    pub area_mm2: Option<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HardwareError {
    #[error("analog cell `{cell}` is invalid: {detail}")]
    InvalidCell { cell: String, detail: String },
    #[error("analog component `{0}` has no cells")]
    EmptyComponent(String),
    #[error("analog array `{0}` has no components")]
    EmptyArray(String),
    #[error("analog array `{array}` is invalid: {detail}")]
    InvalidArray { array: String, detail: String },
    #[error("digital unit `{unit}` is invalid: {detail}")]
    InvalidUnit { unit: String, detail: String },
    #[error("memory `{memory}` is invalid: {detail}")]
    InvalidMemory { memory: String, detail: String },
    #[error("link `{link}` is invalid: {detail}")]
    InvalidLink { link: String, detail: String },
    #[error("duplicate hardware unit name `{0}`")]
    DuplicateUnitName(String),
}

/// A hardware unit, by role.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitRef<'a> {
    Analog(&'a AnalogArraySpec),
    Digital(&'a DigitalUnitSpec),
}

/// The full hardware description of one design.
///
/// Analog arrays are declared in signal-flow order: the pixel array first,
/// then each array the signal passes through on its way to the digital
/// domain.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HardwareDescription {
    pub analog_arrays: Vec<AnalogArraySpec>,
    pub digital_units: Vec<DigitalUnitSpec>,
    pub memories: Vec<MemorySpec>,
    pub links: Vec<LinkSpec>,
    pub layers: Vec<LayerSpec>,
}

impl HardwareDescription {
    pub fn validate(&self) -> Result<(), HardwareError> {
        let mut names = std::collections::BTreeSet::new();
        for a in &self.analog_arrays {
            a.validate()?;
            if !names.insert(a.name.clone()) {
                return Err(HardwareError::DuplicateUnitName(a.name.clone()));
            }
        }
        for d in &self.digital_units {
            d.validate()?;
            if !names.insert(d.name.clone()) {
                return Err(HardwareError::DuplicateUnitName(d.name.clone()));
            }
        }
        for m in &self.memories {
            m.validate()?;
            if !names.insert(m.name.clone()) {
                return Err(HardwareError::DuplicateUnitName(m.name.clone()));
            }
        }
        for l in &self.links {
            l.validate()?;
            if !names.insert(l.name.clone()) {
                return Err(HardwareError::DuplicateUnitName(l.name.clone()));
            }
        }
        Ok(())
    }

    pub fn analog_array(&self, name: &str) -> Option<&AnalogArraySpec> {
        self.analog_arrays.iter().find(|a| a.name == name)
    }

    pub fn digital_unit(&self, name: &str) -> Option<&DigitalUnitSpec> {
        self.digital_units.iter().find(|d| d.name == name)
    }

    pub fn memory(&self, name: &str) -> Option<&MemorySpec> {
        self.memories.iter().find(|m| m.name == name)
    }

    pub fn link(&self, name: &str) -> Option<&LinkSpec> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn layer(&self, name: &str) -> Option<&LayerSpec> {
        self.layers.iter().find(|l| l.name == name)
    }

    /// Resolve a mapped unit name to an analog array or digital unit.
    pub fn unit(&self, name: &str) -> Option<UnitRef<'_>> {
        if let Some(a) = self.analog_array(name) {
            return Some(UnitRef::Analog(a));
        }
        self.digital_unit(name).map(UnitRef::Digital)
    }

    /// Index of an analog array within the declared signal-flow chain.
    pub fn analog_chain_index(&self, name: &str) -> Option<usize> {
        self.analog_arrays.iter().position(|a| a.name == name)
    }
}
