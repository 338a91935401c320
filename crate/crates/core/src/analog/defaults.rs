//! Default cell-level implementations for each analog component kind.
//!
//! The defaults are a starting template, not silicon survey data: every
//! capacitance comes from the thermal-noise sizing rule at the design's
//! resolution, the FoM table is a flat placeholder, and expert users are
//! expected to calibrate cells against their own circuits.

use crate::ir::{
    ACellSpec, AComponentKind, AnalogCellClass, CapNode, FomPoint, SignalDomain,
};
use crate::units::{Farad, Hertz, Joule, Kelvin, Volt};

use super::cells::capacitance_from_noise;

/// Global knobs the default cells derive their parameters from.
#[derive(Debug, Clone, PartialEq)]
pub struct DefaultCellContext {
    /// Analog supply V_DDA.
    pub supply: Volt,
    /// Computation resolution driving the noise-sized capacitances.
    pub resolution_bits: u32,
    pub temperature: Kelvin,
    /// Transistors stacked between supply and ground; each one costs
    /// 0.3 V of headroom off the voltage swing.
    pub transistors_stacked: u32,
    /// Conversion-energy table for ADCs and comparators.
    pub fom_table: Vec<FomPoint>,
}

impl Default for DefaultCellContext {
    fn default() -> Self {
        Self {
            supply: Volt(2.5),
            resolution_bits: 8,
            temperature: Kelvin(crate::units::DEFAULT_TEMPERATURE_K),
            transistors_stacked: 1,
            fom_table: placeholder_fom_table(),
        }
    }
}

impl DefaultCellContext {
    /// Voltage swing left after transistor headroom: V_DDA - 0.3 V per
    /// stacked device.
    pub fn voltage_swing(&self) -> Volt {
        let v = self.supply.value() - 0.3 * self.transistors_stacked as f64;
        Volt(v.max(0.1))
    }

    fn noise_cap(&self) -> Farad {
        capacitance_from_noise(self.voltage_swing(), self.resolution_bits, self.temperature)
    }
}

/// PLACEHOLDER table: a flat 1 pJ/conversion across all rates. Real
/// designs must supply a surveyed FoM table in the design document.
pub fn placeholder_fom_table() -> Vec<FomPoint> {
    vec![
        FomPoint {
            sample_rate: Hertz(1e3),
            energy_per_conversion: Joule(1e-12),
        },
        FomPoint {
            sample_rate: Hertz(1e9),
            energy_per_conversion: Joule(1e-12),
        },
    ]
}

/// Default gm/Id midway through the moderate inversion range.
pub const DEFAULT_GM_OVER_ID: f64 = 15.0;

fn dynamic(name: &str, c: Farad, vs: Volt) -> ACellSpec {
    ACellSpec::new(
        name,
        AnalogCellClass::Dynamic {
            nodes: vec![CapNode {
                capacitance: c,
                voltage_swing: vs,
            }],
        },
    )
}

fn source_follower(name: &str, ctx: &DefaultCellContext) -> ACellSpec {
    ACellSpec::new(
        name,
        AnalogCellClass::StaticBiasedDirect {
            load: ctx.noise_cap(),
            voltage_swing: ctx.voltage_swing(),
            supply: ctx.supply,
        },
    )
}

fn opamp(name: &str, ctx: &DefaultCellContext) -> ACellSpec {
    ACellSpec::new(
        name,
        AnalogCellClass::StaticBiasedGmId {
            load: ctx.noise_cap(),
            gain: 1.0,
            gm_over_id: DEFAULT_GM_OVER_ID,
            supply: ctx.supply,
        },
    )
}

fn nonlinear(name: &str, ctx: &DefaultCellContext) -> ACellSpec {
    ACellSpec::new(
        name,
        AnalogCellClass::NonLinear {
            fom_table: ctx.fom_table.clone(),
        },
    )
}

/// Default cell chain for a component kind. Correlated double sampling is
/// assumed on pixel readout (source follower used twice per access).
pub fn default_cells(kind: AComponentKind, ctx: &DefaultCellContext) -> Vec<ACellSpec> {
    let c = ctx.noise_cap();
    let vs = ctx.voltage_swing();
    match kind {
        AComponentKind::ActivePixelSensor => vec![
            dynamic("photodiode", c, vs),
            dynamic("floating_diffusion", c, vs),
            source_follower("source_follower", ctx).with_counts(1, 2),
        ],
        AComponentKind::DigitalPixelSensor => vec![
            dynamic("photodiode", c, vs),
            nonlinear("pixel_adc", ctx),
        ],
        AComponentKind::PwmPixel => vec![
            dynamic("photodiode", c, vs),
            dynamic("ramp", c, vs),
            nonlinear("comparator", ctx),
        ],
        AComponentKind::Adc => vec![nonlinear("adc_core", ctx)],
        AComponentKind::Comparator => vec![nonlinear("comparator_core", ctx)],
        AComponentKind::Mac
        | AComponentKind::Add
        | AComponentKind::Max
        | AComponentKind::Scaling
        | AComponentKind::Abs => vec![dynamic("cap_array", c, vs), opamp("opamp", ctx)],
        AComponentKind::Log => vec![dynamic("input_cap", c, vs), source_follower("log_stage", ctx)],
        AComponentKind::PassiveMemory => vec![dynamic("hold_cap", c, vs)],
        AComponentKind::ActiveMemory => vec![dynamic("hold_cap", c, vs), opamp("buffer", ctx)],
        AComponentKind::SampleAndHold => {
            vec![dynamic("sample_cap", c, vs), source_follower("buffer", ctx)]
        }
    }
}

/// Default signal domains per component kind.
pub fn default_domains(kind: AComponentKind) -> (SignalDomain, SignalDomain) {
    use SignalDomain::*;
    match kind {
        AComponentKind::ActivePixelSensor => (Charge, Voltage),
        AComponentKind::DigitalPixelSensor => (Charge, Digital),
        AComponentKind::PwmPixel => (Charge, TimeCurrent),
        AComponentKind::Adc | AComponentKind::Comparator => (Voltage, Digital),
        AComponentKind::Log => (Current, Voltage),
        AComponentKind::Mac
        | AComponentKind::Add
        | AComponentKind::Max
        | AComponentKind::Scaling
        | AComponentKind::Abs
        | AComponentKind::PassiveMemory
        | AComponentKind::ActiveMemory
        | AComponentKind::SampleAndHold => (Voltage, Voltage),
    }
}
