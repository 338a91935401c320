//! Closed-form energy models for the three analog cell classes, plus
//! thermal-noise-driven capacitor sizing and gm/Id bias sizing.

use crate::ir::{CapNode, FomPoint};
use crate::units::{Ampere, Farad, Hertz, Joule, Kelvin, Second, Volt, BOLTZMANN};

use super::AnalogError;

/// Energy of one dynamic-cell access: the charge/discharge of every
/// capacitance node, sum of C[i] * Vvs[i]^2.
pub fn energy_dynamic_cell(nodes: &[CapNode]) -> Joule {
    Joule(
        nodes
            .iter()
            .map(|n| n.capacitance.value() * n.voltage_swing.value() * n.voltage_swing.value())
            .sum(),
    )
}

/// Maximum tolerable thermal-noise sigma: 3 sigma must stay below half an
/// LSB of the computation resolution.
pub fn noise_sigma_max(voltage_swing: Volt, resolution_bits: u32) -> Volt {
    let lsb = voltage_swing.value() / 2f64.powi(resolution_bits as i32);
    Volt(lsb / (3.0 * 2.0))
}

/// Minimum nodal capacitance keeping kT/C noise within the resolution
/// budget: C = kT / sigma_max^2.
pub fn capacitance_from_noise(
    voltage_swing: Volt,
    resolution_bits: u32,
    temperature: Kelvin,
) -> Farad {
    let sigma = noise_sigma_max(voltage_swing, resolution_bits).value();
    Farad(BOLTZMANN * temperature.value() / (sigma * sigma))
}

/// Energy of a static-biased cell whose bias current drives the load
/// directly: C_load * Vvs * Vdda. The bias time cancels out.
pub fn energy_static_direct(load: Farad, voltage_swing: Volt, supply: Volt) -> Joule {
    Joule(load.value() * voltage_swing.value() * supply.value())
}

/// Bias current by the gm/Id method: 2*pi * C_load * GBW / (gm/Id).
pub fn bias_current_gm_id(load: Farad, gbw: Hertz, gm_over_id: f64) -> Ampere {
    Ampere(2.0 * std::f64::consts::PI * load.value() * gbw.value() / gm_over_id)
}

/// Energy of a static-biased cell over its bias window: Vdda * I * t.
pub fn energy_static_biased(supply: Volt, bias: Ampere, t_static: Second) -> Joule {
    Joule(supply.value() * bias.value() * t_static.value())
}

/// Energy-per-conversion at a sampling rate, interpolated in log-log
/// space over the FoM table; rates outside the table clamp to the
/// nearest endpoint.
pub fn fom_at_rate(fom_table: &[FomPoint], rate: Hertz) -> Result<Joule, AnalogError> {
    if fom_table.is_empty() {
        return Err(AnalogError::EmptyFomTable);
    }
    let first = fom_table[0];
    let last = fom_table[fom_table.len() - 1];
    if rate.value() <= first.sample_rate.value() {
        return Ok(first.energy_per_conversion);
    }
    if rate.value() >= last.sample_rate.value() {
        return Ok(last.energy_per_conversion);
    }
    for pair in fom_table.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if rate.value() <= b.sample_rate.value() {
            let x0 = a.sample_rate.value().ln();
            let x1 = b.sample_rate.value().ln();
            let y0 = a.energy_per_conversion.value().ln();
            let y1 = b.energy_per_conversion.value().ln();
            let t = (rate.value().ln() - x0) / (x1 - x0);
            return Ok(Joule((y0 + t * (y1 - y0)).exp()));
        }
    }
    Ok(last.energy_per_conversion)
}

/// Total energy of a non-linear cell: FoM(rate) * conversions.
pub fn energy_nonlinear_cell(
    fom_table: &[FomPoint],
    rate: Hertz,
    conversions: u64,
) -> Result<Joule, AnalogError> {
    Ok(Joule(fom_at_rate(fom_table, rate)?.value() * conversions as f64))
}

/// A cell is used spatially (copies per component) and temporally (uses
/// per output, e.g. 2 with correlated double sampling).
pub fn cell_access_count(spatial: u64, temporal: u64) -> u64 {
    spatial * temporal
}

/// Accesses of one component in an array: ops mapped to the array divided
/// evenly over its components, rounded up (activations are integral).
pub fn component_access_count(ops: u64, num_component: u64) -> u64 {
    ops.div_ceil(num_component)
}

#[cfg(test)]
mod tests {
    use super::*;

    const KB: f64 = BOLTZMANN;

    #[test]
    fn dynamic_cell_single_node() {
        let nodes = [CapNode {
            capacitance: Farad(100e-15),
            voltage_swing: Volt(1.0),
        }];
        assert_eq!(energy_dynamic_cell(&nodes), Joule(100e-15));
    }

    #[test]
    fn dynamic_cell_sums_nodes() {
        // 100 fF at 1 V plus 50 fF at 0.5 V: 100 fJ + 12.5 fJ.
        let nodes = [
            CapNode {
                capacitance: Farad(100e-15),
                voltage_swing: Volt(1.0),
            },
            CapNode {
                capacitance: Farad(50e-15),
                voltage_swing: Volt(0.5),
            },
        ];
        assert!((energy_dynamic_cell(&nodes).value() - 112.5e-15).abs() < 1e-30);
    }

    #[test]
    fn dynamic_cell_empty_is_zero() {
        assert_eq!(energy_dynamic_cell(&[]), Joule(0.0));
    }

    #[test]
    fn noise_sizing_eight_bit() {
        // 1 V swing, 8 bits: sigma_max = 1/(6*256) = 0.651 mV,
        // C = kT/sigma^2 = 9.77 fF at 300 K.
        let sigma = noise_sigma_max(Volt(1.0), 8);
        assert!((sigma.value() - 6.5104166667e-4).abs() < 1e-12);
        let c = capacitance_from_noise(Volt(1.0), 8, Kelvin(300.0));
        assert!((c.value() - 9.772e-15).abs() < 5e-18, "got {}", c.value());
        // Identity: C * sigma^2 = kT to machine precision.
        let back = c.value() * sigma.value() * sigma.value();
        assert!((back - KB * 300.0).abs() / (KB * 300.0) < 1e-12);
    }

    #[test]
    fn noise_sizing_one_bit() {
        let sigma = noise_sigma_max(Volt(1.0), 1);
        assert!((sigma.value() - 1.0 / 12.0).abs() < 1e-15);
        let c = capacitance_from_noise(Volt(1.0), 1, Kelvin(300.0));
        assert!((c.value() - 0.596e-18).abs() < 2e-21, "got {}", c.value());
    }

    #[test]
    fn doubling_swing_quarters_capacitance() {
        let c1 = capacitance_from_noise(Volt(1.0), 8, Kelvin(300.0));
        let c2 = capacitance_from_noise(Volt(2.0), 8, Kelvin(300.0));
        assert!((c1.value() / c2.value() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn capacitance_monotone_in_resolution() {
        let mut prev = 0.0;
        for bits in 1..=16 {
            let c = capacitance_from_noise(Volt(1.0), bits, Kelvin(300.0)).value();
            assert!(c > prev);
            prev = c;
        }
    }

    #[test]
    fn static_direct_closed_form() {
        let e = energy_static_direct(Farad(100e-15), Volt(1.0), Volt(2.5));
        assert_eq!(e, Joule(250e-15));
        let e2 = energy_static_direct(Farad(1e-12), Volt(0.5), Volt(1.8));
        assert!((e2.value() - 900e-15).abs() < 1e-27);
    }

    #[test]
    fn gm_id_bias_current() {
        // 1 pF load, 10 MHz GBW, gm/Id 15: 4.19 uA.
        let i = bias_current_gm_id(Farad(1e-12), Hertz(10e6), 15.0);
        assert!((i.value() - 4.18879e-6).abs() < 1e-10);
        // Inverse proportionality in gm/Id.
        let i10 = bias_current_gm_id(Farad(1e-12), Hertz(10e6), 10.0);
        let i20 = bias_current_gm_id(Farad(1e-12), Hertz(10e6), 20.0);
        assert!((i20.value() * 2.0 - i10.value()).abs() < 1e-18);
        // Zero load, zero current.
        assert_eq!(bias_current_gm_id(Farad(0.0), Hertz(10e6), 15.0).value(), 0.0);
    }

    #[test]
    fn static_biased_energy() {
        let e = energy_static_biased(Volt(2.5), Ampere(4.18879e-6), Second(1e-6));
        assert!((e.value() - 10.47e-12).abs() < 1e-14);
        assert_eq!(
            energy_static_biased(Volt(2.5), Ampere(1e-6), Second(0.0)),
            Joule(0.0)
        );
    }

    #[test]
    fn gm_id_energy_invariant_to_bias_window() {
        // With BW = 1/t, E = Vdda * 2*pi*C*G/(gm/Id): independent of t.
        let reference = {
            let i = bias_current_gm_id(Farad(1e-12), Hertz(1.0 / 1e-6), 15.0);
            energy_static_biased(Volt(2.5), i, Second(1e-6)).value()
        };
        for &t in &[1e-9, 1e-7, 3.3e-5, 1e-3] {
            let i = bias_current_gm_id(Farad(1e-12), Hertz(1.0 / t), 15.0);
            let e = energy_static_biased(Volt(2.5), i, Second(t)).value();
            assert!((e - reference).abs() / reference < 1e-12);
        }
    }

    fn table(points: &[(f64, f64)]) -> Vec<FomPoint> {
        points
            .iter()
            .map(|&(r, e)| FomPoint {
                sample_rate: Hertz(r),
                energy_per_conversion: Joule(e),
            })
            .collect()
    }

    #[test]
    fn fom_single_point_table() {
        let t = table(&[(1e6, 1e-12)]);
        let e = energy_nonlinear_cell(&t, Hertz(42e6), 1000).unwrap();
        assert!((e.value() - 1e-9).abs() < 1e-24);
    }

    #[test]
    fn fom_log_log_midpoint() {
        let t = table(&[(1e6, 1e-12), (100e6, 10e-12)]);
        // 10 MS/s is the log-log midpoint: sqrt(1 pJ * 10 pJ) = 3.16 pJ.
        let e = fom_at_rate(&t, Hertz(10e6)).unwrap();
        assert!((e.value() - 3.16227766e-12).abs() < 1e-18);
    }

    #[test]
    fn fom_clamps_outside_table() {
        let t = table(&[(1e6, 1e-12), (100e6, 10e-12)]);
        assert_eq!(fom_at_rate(&t, Hertz(1e3)).unwrap(), Joule(1e-12));
        assert_eq!(fom_at_rate(&t, Hertz(1e12)).unwrap(), Joule(10e-12));
    }

    #[test]
    fn empty_fom_table_is_an_error() {
        assert!(matches!(
            fom_at_rate(&[], Hertz(1e6)),
            Err(AnalogError::EmptyFomTable)
        ));
    }

    #[test]
    fn component_access_counts() {
        assert_eq!(component_access_count(1024, 16), 64);
        assert_eq!(component_access_count(1024, 1), 1024);
        // 100 over 16 components: ceil(6.25) = 7.
        assert_eq!(component_access_count(100, 16), 7);
        assert_eq!(component_access_count(0, 16), 0);
    }

    #[test]
    fn cell_access_counts() {
        assert_eq!(cell_access_count(1, 2), 2); // CDS readout
        assert_eq!(cell_access_count(4, 1), 4);
        assert_eq!(cell_access_count(3, 5), 15);
    }
}
