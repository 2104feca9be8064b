//! Quantity parsing with engineering unit suffixes.
//!
//! All values are converted to SI base units (V, A, F, Ω, s, m-based
//! densities are kept per cm² / Ω·cm as the membrane constants expect).

use std::fmt;

/// Physical dimension a configuration value is expected to carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Voltage,
    Current,
    Capacitance,
    Resistance,
    Time,
    /// Length, returned in centimetres.
    Length,
    /// F/cm²
    CapacitancePerArea,
    /// S/cm²
    ConductancePerArea,
    /// Ω·cm
    Resistivity,
    /// A/cm²
    CurrentDensity,
}

impl Dimension {
    /// Canonical unit written by the normalized config dump. Its scale is 1.
    pub fn canonical_unit(self) -> &'static str {
        match self {
            Dimension::Voltage => "V",
            Dimension::Current => "A",
            Dimension::Capacitance => "F",
            Dimension::Resistance => "Ohm",
            Dimension::Time => "s",
            Dimension::Length => "cm",
            Dimension::CapacitancePerArea => "F/cm2",
            Dimension::ConductancePerArea => "S/cm2",
            Dimension::Resistivity => "Ohm-cm",
            Dimension::CurrentDensity => "A/cm2",
        }
    }

    fn suffixes(self) -> &'static [(&'static str, f64)] {
        match self {
            Dimension::Voltage => &[("V", 1.0), ("mV", 1e-3), ("uV", 1e-6), ("µV", 1e-6)],
            Dimension::Current => &[
                ("A", 1.0),
                ("mA", 1e-3),
                ("uA", 1e-6),
                ("µA", 1e-6),
                ("nA", 1e-9),
                ("pA", 1e-12),
            ],
            Dimension::Capacitance => &[
                ("F", 1.0),
                ("uF", 1e-6),
                ("µF", 1e-6),
                ("nF", 1e-9),
                ("pF", 1e-12),
            ],
            Dimension::Resistance => &[
                ("Ohm", 1.0),
                ("ohm", 1.0),
                ("Ω", 1.0),
                ("kOhm", 1e3),
                ("kΩ", 1e3),
                ("k", 1e3),
                ("MOhm", 1e6),
                ("Mohm", 1e6),
                ("MΩ", 1e6),
                ("M", 1e6),
                ("GOhm", 1e9),
                ("GΩ", 1e9),
            ],
            Dimension::Time => &[
                ("s", 1.0),
                ("ms", 1e-3),
                ("us", 1e-6),
                ("µs", 1e-6),
                ("ns", 1e-9),
            ],
            Dimension::Length => &[
                ("cm", 1.0),
                ("m", 100.0),
                ("mm", 0.1),
                ("um", 1e-4),
                ("µm", 1e-4),
            ],
            Dimension::CapacitancePerArea => &[
                ("F/cm2", 1.0),
                ("F/cm²", 1.0),
                ("uF/cm2", 1e-6),
                ("uF/cm²", 1e-6),
                ("µF/cm2", 1e-6),
                ("µF/cm²", 1e-6),
            ],
            Dimension::ConductancePerArea => &[
                ("S/cm2", 1.0),
                ("S/cm²", 1.0),
                ("mS/cm2", 1e-3),
                ("mS/cm²", 1e-3),
                ("uS/cm2", 1e-6),
                ("µS/cm²", 1e-6),
            ],
            Dimension::Resistivity => &[
                ("Ohm-cm", 1.0),
                ("ohm-cm", 1.0),
                ("Ohm*cm", 1.0),
                ("Ω·cm", 1.0),
                ("Ω-cm", 1.0),
            ],
            Dimension::CurrentDensity => &[
                ("A/cm2", 1.0),
                ("A/cm²", 1.0),
                ("mA/cm2", 1e-3),
                ("uA/cm2", 1e-6),
                ("uA/cm²", 1e-6),
                ("µA/cm2", 1e-6),
                ("µA/cm²", 1e-6),
            ],
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Dimension::Voltage => "voltage",
            Dimension::Current => "current",
            Dimension::Capacitance => "capacitance",
            Dimension::Resistance => "resistance",
            Dimension::Time => "time",
            Dimension::Length => "length",
            Dimension::CapacitancePerArea => "capacitance per area",
            Dimension::ConductancePerArea => "conductance per area",
            Dimension::Resistivity => "resistivity",
            Dimension::CurrentDensity => "current density",
        };
        f.write_str(name)
    }
}

/// Why a quantity string could not be read. `offset` is the byte offset
/// inside the value text where the problem starts.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityError {
    pub offset: usize,
    pub message: String,
}

/// Parses `"<number> [unit]"` into SI. A bare number is taken to be in the
/// canonical unit.
pub fn parse_quantity(text: &str, dim: Dimension) -> Result<f64, QuantityError> {
    let trimmed_start = text.len() - text.trim_start().len();
    let body = text.trim();
    let split = body
        .char_indices()
        .find(|&(i, c)| {
            !(c.is_ascii_digit()
                || c == '.'
                || c == '+'
                || c == '-'
                || ((c == 'e' || c == 'E') && i > 0 && looks_like_exponent(&body[i..])))
        })
        .map(|(i, _)| i)
        .unwrap_or(body.len());
    let (num, rest) = body.split_at(split);
    let value: f64 = num.parse().map_err(|_| QuantityError {
        offset: trimmed_start,
        message: format!("expected a number, found `{body}`"),
    })?;
    if !value.is_finite() {
        return Err(QuantityError {
            offset: trimmed_start,
            message: "value must be finite".into(),
        });
    }
    let unit = rest.trim();
    if unit.is_empty() {
        return Ok(value);
    }
    match dim.suffixes().iter().find(|(s, _)| *s == unit) {
        Some(&(_, scale)) => Ok(value * scale),
        None => Err(QuantityError {
            offset: trimmed_start + split + (rest.len() - rest.trim_start().len()),
            message: format!("unknown {dim} unit `{unit}`"),
        }),
    }
}

fn looks_like_exponent(s: &str) -> bool {
    let mut chars = s.chars().skip(1);
    match chars.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('+') | Some('-') => chars.next().is_some_and(|c| c.is_ascii_digit()),
        _ => false,
    }
}

/// Writes a value in its canonical unit with a round-trip exact mantissa.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    format!("{value:e} {}", dim.canonical_unit())
}
