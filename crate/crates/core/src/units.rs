//! Physical quantities with SI-prefixed parsing and display.
//!
//! Design documents annotate every physical value with its unit
//! (`"100pJ"`, `"33.3ms"`, `"2.5V"`); bare numbers are rejected at the
//! schema level. Internally quantities are thin `f64` newtypes so the
//! energy formulas stay readable.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant in J/K (CODATA 2018 exact value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Default ambient temperature in kelvin for thermal-noise sizing.
pub const DEFAULT_TEMPERATURE_K: f64 = 300.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("empty quantity string")]
    Empty,
    #[error("cannot parse number in `{0}`")]
    BadNumber(String),
    #[error("`{got}` does not carry the expected unit `{expected}`")]
    WrongUnit { got: String, expected: &'static str },
    #[error("unknown SI prefix in `{0}`")]
    UnknownPrefix(String),
}

const PREFIXES: &[(&str, f64)] = &[
    ("y", 1e-24),
    ("z", 1e-21),
    ("a", 1e-18),
    ("f", 1e-15),
    ("p", 1e-12),
    ("n", 1e-9),
    ("u", 1e-6),
    ("µ", 1e-6),
    ("m", 1e-3),
    ("", 1.0),
    ("k", 1e3),
    ("K", 1e3),
    ("M", 1e6),
    ("G", 1e9),
    ("T", 1e12),
];

/// Parse a unit-annotated quantity such as `"100pJ"` or `"33.3ms"` into a
/// value in the base unit (`J`, `s`, ...). Whitespace between the number
/// and the unit is tolerated.
pub fn parse_quantity(text: &str, base_unit: &'static str) -> Result<f64, UnitError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(UnitError::Empty);
    }
    let split = text
        .char_indices()
        .take_while(|(_, c)| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
        .last()
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    let (num, rest) = text.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| UnitError::BadNumber(text.to_string()))?;
    let rest = rest.trim();
    if rest.is_empty() {
        return Err(UnitError::WrongUnit {
            got: text.to_string(),
            expected: base_unit,
        });
    }
    let prefix = rest.strip_suffix(base_unit).ok_or(UnitError::WrongUnit {
        got: text.to_string(),
        expected: base_unit,
    })?;
    // "m" strips to an empty prefix for metre-like units; prefer the longest
    // suffix match so "mJ" is milli-joule, not metre-joule.
    let scale = PREFIXES
        .iter()
        .find(|(p, _)| *p == prefix)
        .map(|(_, s)| *s)
        .ok_or_else(|| UnitError::UnknownPrefix(text.to_string()))?;
    Ok(value * scale)
}

/// Render `value` (in base units) with an auto-selected SI prefix,
/// e.g. `6e-4` joule becomes `"0.60 mJ"`.
pub fn format_si(value: f64, base_unit: &str) -> String {
    if value == 0.0 {
        return format!("0.00 {base_unit}");
    }
    if !value.is_finite() {
        return format!("{value} {base_unit}");
    }
    let scales = [
        (1e-24, "y"),
        (1e-21, "z"),
        (1e-18, "a"),
        (1e-15, "f"),
        (1e-12, "p"),
        (1e-9, "n"),
        (1e-6, "µ"),
        (1e-3, "m"),
        (1.0, ""),
        (1e3, "k"),
        (1e6, "M"),
        (1e9, "G"),
        (1e12, "T"),
    ];
    let mag = value.abs();
    // Largest prefix keeping the mantissa >= 0.1, so 6e-4 J prints as
    // "0.60 mJ" rather than "600.00 µJ".
    let (scale, prefix) = scales
        .iter()
        .rev()
        .find(|(s, _)| mag / s >= 0.1)
        .copied()
        .unwrap_or(scales[0]);
    format!("{:.2} {}{}", value / scale, prefix, base_unit)
}

macro_rules! quantity {
    ($(#[$meta:meta])* $name:ident, $unit:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub f64);

        impl $name {
            pub const ZERO: $name = $name(0.0);

            pub fn new(value: f64) -> Self {
                Self(value)
            }

            /// Value in the base SI unit.
            pub fn value(self) -> f64 {
                self.0
            }

            pub const UNIT: &'static str = $unit;
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&format_si(self.0, $unit))
            }
        }

        impl FromStr for $name {
            type Err = UnitError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_quantity(s, $unit).map(Self)
            }
        }
    };
}

quantity!(
    /// Energy in joules.
    Joule, "J"
);
quantity!(
    /// Capacitance in farads.
    Farad, "F"
);
quantity!(
    /// Electric potential in volts.
    Volt, "V"
);
quantity!(
    /// Current in amperes.
    Ampere, "A"
);
quantity!(
    /// Time in seconds.
    Second, "s"
);
quantity!(
    /// Frequency in hertz.
    Hertz, "Hz"
);
quantity!(
    /// Power in watts.
    Watt, "W"
);
quantity!(
    /// Temperature in kelvin.
    Kelvin, "K"
);

impl std::ops::Add for Joule {
    type Output = Joule;
    fn add(self, rhs: Joule) -> Joule {
        Joule(self.0 + rhs.0)
    }
}

impl std::iter::Sum for Joule {
    fn sum<I: Iterator<Item = Joule>>(iter: I) -> Joule {
        Joule(iter.map(|j| j.0).sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_prefixed_quantities() {
        assert_eq!(parse_quantity("100pJ", "J").unwrap(), 100e-12);
        assert_eq!(parse_quantity("33.3ms", "s").unwrap(), 33.3 * 1e-3);
        assert_eq!(parse_quantity("2.5V", "V").unwrap(), 2.5);
        assert_eq!(parse_quantity("100 fF", "F").unwrap(), 100e-15);
        assert_eq!(parse_quantity("1uA", "A").unwrap(), 1e-6);
        assert_eq!(parse_quantity("1µA", "A").unwrap(), 1e-6);
        assert_eq!(parse_quantity("100MHz", "Hz").unwrap(), 100e6);
        assert_eq!(parse_quantity("300K", "K").unwrap(), 300.0);
    }

    #[test]
    fn rejects_bare_numbers_and_wrong_units() {
        assert!(matches!(
            parse_quantity("100", "J"),
            Err(UnitError::WrongUnit { .. })
        ));
        assert!(matches!(
            parse_quantity("100pF", "J"),
            Err(UnitError::WrongUnit { .. })
        ));
        assert!(parse_quantity("", "J").is_err());
        assert!(matches!(
            parse_quantity("1qJ", "J"),
            Err(UnitError::UnknownPrefix(_))
        ));
    }

    #[test]
    fn metre_suffix_is_not_milli() {
        // "5ms" must be milliseconds even though "m" alone is a prefix.
        assert_eq!(parse_quantity("5ms", "s").unwrap(), 5e-3);
        // A plain second has no prefix.
        assert_eq!(parse_quantity("5s", "s").unwrap(), 5.0);
    }

    #[test]
    fn formats_with_auto_scaling() {
        assert_eq!(format_si(0.6e-3, "J"), "0.60 mJ");
        assert_eq!(format_si(100e-15, "J"), "0.10 pJ");
        assert_eq!(format_si(2.6e-6, "s"), "2.60 µs");
        assert_eq!(format_si(0.0, "J"), "0.00 J");
        assert_eq!(format_si(18.27e-6, "J"), "18.27 µJ");
    }

    #[test]
    fn display_round_trip_magnitudes() {
        let j = Joule(1.3e-9);
        assert_eq!(j.to_string(), "1.30 nJ");
        let parsed: Joule = "1.30nJ".parse().unwrap();
        assert!((parsed.value() - 1.3e-9).abs() < 1e-24);
    }
}
