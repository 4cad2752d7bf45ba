//! Reduced units with ħ = k_B = 1.
//!
//! A [`UnitSystem`] fixes a time unit and a length unit; every other scale
//! follows from ħ and k_B. All numerics in this crate run in reduced units and
//! SI values are converted once at the boundary.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Physical dimensions that cross the SI / reduced boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Time,
    Length,
    Mass,
    /// Angular frequency or Laplace variable, 1/s.
    Rate,
    Energy,
    Temperature,
    Momentum,
    Force,
    /// Friction coefficient, kg/s.
    Friction,
    /// Force-noise weight and force power spectral density, N²·s.
    ForceNoise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    pub time_s: f64,
    pub length_m: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        // microsecond / nanometre: natural for trapped-ion decoherence
        UnitSystem { time_s: 1e-6, length_m: 1e-9 }
    }
}

impl UnitSystem {
    pub fn new(time_s: f64, length_m: f64) -> Self {
        UnitSystem { time_s, length_m }
    }

    /// SI value of one reduced unit of `dim`.
    pub fn scale(&self, dim: Dimension) -> f64 {
        let t = self.time_s;
        let l = self.length_m;
        match dim {
            Dimension::Time => t,
            Dimension::Length => l,
            Dimension::Mass => HBAR * t / (l * l),
            Dimension::Rate => 1.0 / t,
            Dimension::Energy => HBAR / t,
            Dimension::Temperature => HBAR / (K_B * t),
            Dimension::Momentum => HBAR / l,
            Dimension::Force => HBAR / (t * l),
            Dimension::Friction => HBAR / (l * l),
            Dimension::ForceNoise => HBAR * HBAR / (t * l * l),
        }
    }

    pub fn to_reduced(&self, si: f64, dim: Dimension) -> f64 {
        si / self.scale(dim)
    }

    pub fn to_si(&self, reduced: f64, dim: Dimension) -> f64 {
        reduced * self.scale(dim)
    }
}

/// Force-noise weight e²·I of a field with noise intensity `intensity` (V²m⁻²s).
pub fn field_force_weight(charge_c: f64, intensity_v2_m2_s: f64) -> f64 {
    charge_c * charge_c * intensity_v2_m2_s
}
