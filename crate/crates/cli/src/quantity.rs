//! Unit-tagged scalar quantities such as `"7 nm"` or `"1e-9 V^2 m^-2 s"`.
//!
//! Every physical value in a scenario carries a unit. The tag `reduced` means
//! the number is already in the scenario's reduced units.

use std::f64::consts::PI;

use neqdeco::units::{Dimension, UnitSystem, AMU, ELEMENTARY_CHARGE};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Time,
    Length,
    Mass,
    /// Angular frequency. Hz-family units are cycles and pick up 2π.
    Rate,
    Temperature,
    Friction,
    ForceNoise,
    /// Field noise intensity, V²m⁻²s. No reduced form.
    FieldIntensity,
    /// Electric charge. No reduced form.
    Charge,
    /// Spectral density J(ω), kg²/s².
    Spectral,
}

impl Kind {
    fn dimension(self) -> Option<Dimension> {
        Some(match self {
            Kind::Time => Dimension::Time,
            Kind::Length => Dimension::Length,
            Kind::Mass => Dimension::Mass,
            Kind::Rate => Dimension::Rate,
            Kind::Temperature => Dimension::Temperature,
            Kind::Friction => Dimension::Friction,
            Kind::ForceNoise => Dimension::ForceNoise,
            Kind::FieldIntensity | Kind::Charge | Kind::Spectral => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Kind::Time => "time",
            Kind::Length => "length",
            Kind::Mass => "mass",
            Kind::Rate => "angular frequency",
            Kind::Temperature => "temperature",
            Kind::Friction => "friction",
            Kind::ForceNoise => "force noise",
            Kind::FieldIntensity => "field intensity",
            Kind::Charge => "charge",
            Kind::Spectral => "spectral density",
        }
    }
}

/// SI factor of a unit token for the given kind.
fn unit_factor(kind: Kind, unit: &str) -> Option<f64> {
    let f = match (kind, unit) {
        (Kind::Time, "s") => 1.0,
        (Kind::Time, "ms") => 1e-3,
        (Kind::Time, "us" | "µs" | "μs") => 1e-6,
        (Kind::Time, "ns") => 1e-9,
        (Kind::Time, "ps") => 1e-12,
        (Kind::Length, "m") => 1.0,
        (Kind::Length, "mm") => 1e-3,
        (Kind::Length, "um" | "µm" | "μm") => 1e-6,
        (Kind::Length, "nm") => 1e-9,
        (Kind::Length, "pm") => 1e-12,
        (Kind::Mass, "kg") => 1.0,
        (Kind::Mass, "g") => 1e-3,
        (Kind::Mass, "amu" | "u" | "Da") => AMU,
        (Kind::Rate, "rad/s") => 1.0,
        (Kind::Rate, "Hz") => 2.0 * PI,
        (Kind::Rate, "kHz") => 2.0 * PI * 1e3,
        (Kind::Rate, "MHz") => 2.0 * PI * 1e6,
        (Kind::Rate, "GHz") => 2.0 * PI * 1e9,
        (Kind::Temperature, "K") => 1.0,
        (Kind::Temperature, "mK") => 1e-3,
        (Kind::Temperature, "uK" | "µK" | "μK") => 1e-6,
        (Kind::Friction, "kg/s") => 1.0,
        (Kind::ForceNoise, "N^2 s") => 1.0,
        (Kind::FieldIntensity, "V^2 m^-2 s") => 1.0,
        (Kind::Charge, "C") => 1.0,
        (Kind::Charge, "e") => ELEMENTARY_CHARGE,
        (Kind::Spectral, "kg^2 s^-2") => 1.0,
        _ => return None,
    };
    Some(f)
}

/// Splits `"<number> <unit>"`.
fn split(text: &str) -> Option<(f64, String)> {
    let text = text.trim();
    let cut = text.find(char::is_whitespace)?;
    let value: f64 = text[..cut].parse().ok()?;
    let unit = text[cut..].split_whitespace().collect::<Vec<_>>().join(" ");
    value.is_finite().then_some((value, unit))
}

/// Value of `text` in reduced units of `units`.
pub fn reduced(text: &str, kind: Kind, units: &UnitSystem, path: &str) -> Result<f64, CliError> {
    let (value, unit) = split(text).ok_or_else(|| {
        CliError::config(path, format!("expected `<number> <unit>` for a {}, got `{text}`", kind.name()))
    })?;
    if unit == "reduced" {
        return match kind.dimension() {
            Some(_) => Ok(value),
            None => Err(CliError::config(path, format!("a {} has no reduced form; give an SI unit", kind.name()))),
        };
    }
    let factor = unit_factor(kind, &unit)
        .ok_or_else(|| CliError::config(path, format!("unknown unit `{unit}` for a {}", kind.name())))?;
    match kind.dimension() {
        Some(dim) => Ok(units.to_reduced(value * factor, dim)),
        None => Ok(value * factor),
    }
}

/// SI value of `text`; `reduced` tags are converted with `units`.
pub fn si(text: &str, kind: Kind, units: &UnitSystem, path: &str) -> Result<f64, CliError> {
    let v = reduced(text, kind, units, path)?;
    Ok(match kind.dimension() {
        Some(dim) => units.to_si(v, dim),
        None => v,
    })
}

/// Reduced value of a spectral density J, kg²/s² = mass · friction / time.
pub fn spectral_scale(units: &UnitSystem) -> f64 {
    units.scale(Dimension::Mass) * units.scale(Dimension::Friction) / units.scale(Dimension::Time)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tagged_values() {
        let u = UnitSystem::default();
        assert!((reduced("7 nm", Kind::Length, &u, "cat.separation").unwrap() - 7.0).abs() < 1e-12);
        assert!((reduced("5 us", Kind::Time, &u, "x").unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(reduced("2.5 reduced", Kind::Mass, &u, "x").unwrap(), 2.5);
        let w = si("1 MHz", Kind::Rate, &u, "x").unwrap();
        assert!((w / (2.0 * PI * 1e6) - 1.0).abs() < 1e-15);
        assert!((si("1 e", Kind::Charge, &u, "x").unwrap() - ELEMENTARY_CHARGE).abs() < 1e-30);
        assert!((si("3 V^2  m^-2 s", Kind::FieldIntensity, &u, "x").unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_missing_or_wrong_units() {
        let u = UnitSystem::default();
        for (text, kind) in [("7", Kind::Length), ("7 kg", Kind::Length), ("x nm", Kind::Length), ("1 reduced", Kind::Charge)] {
            let err = reduced(text, kind, &u, "cat.separation").unwrap_err();
            assert!(err.to_string().contains("cat.separation"), "{err}");
        }
    }
}
