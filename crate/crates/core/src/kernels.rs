//! Reservoir friction kernels, force correlators, and their composition into
//! a single nonequilibrium noise model.
//!
//! Conventions: a delta kernel `η_f δ(t)` carries its full weight on the
//! one-sided axis (`η_f[s] = η_f`), so the even force correlator of a delta
//! reservoir is `2 η_f T_f δ(t)` on the whole line. An exponential reservoir
//! has `η(t) = (η/τ) e^{−t/τ}`; in the high-temperature regime its correlator
//! is `C(t) = T η(t)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{check_time, ensure, Error, Result};
use crate::laplace::{poly_add, poly_mul, LaplaceRational};
use crate::quad::Quadrature;

/// Sampled spectral density `J(ω)` on a strictly increasing frequency grid,
/// linearly interpolated between samples and zero outside the grid.
///
/// The kernel normalization `η(t) = (2/πm) ∫ J(ω)/ω cos ωt dω` carries the
/// oscillator mass, so the table records the mass it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    omega: Vec<f64>,
    values: Vec<f64>,
    mass: f64,
}

impl SpectralDensity {
    pub fn new(omega: Vec<f64>, values: Vec<f64>, mass: f64) -> Result<Self> {
        ensure(omega.len() >= 2 && omega.len() == values.len(), || {
            "spectral table needs at least two (omega, J) samples of equal length".into()
        })?;
        ensure(omega[0] >= 0.0 && omega.windows(2).all(|w| w[1] > w[0]), || {
            "spectral frequency grid must be nonnegative and strictly increasing".into()
        })?;
        ensure(values.iter().all(|j| *j >= 0.0 && j.is_finite()), || "spectral density must be >= 0".into())?;
        ensure(mass > 0.0, || "spectral table mass must be > 0".into())?;
        ensure(omega[0] > 0.0 || values[0] == 0.0, || "J(0) must vanish when the grid starts at zero".into())?;
        Ok(SpectralDensity { omega, values, mass })
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn max_frequency(&self) -> f64 {
        *self.omega.last().unwrap()
    }

    pub fn value(&self, w: f64) -> f64 {
        let n = self.omega.len();
        if w < self.omega[0] || w > self.omega[n - 1] {
            return 0.0;
        }
        let k = self.omega.partition_point(|x| *x <= w).clamp(1, n - 1);
        let (w0, w1) = (self.omega[k - 1], self.omega[k]);
        let (j0, j1) = (self.values[k - 1], self.values[k]);
        j0 + (j1 - j0) * (w - w0) / (w1 - w0)
    }

    /// `J(ω)/ω`, continued to ω = 0 by the slope of the first segment.
    pub fn value_over_omega(&self, w: f64) -> f64 {
        if w == 0.0 {
            return (self.values[1] - self.values[0]) / (self.omega[1] - self.omega[0]);
        }
        self.value(w) / w
    }

    fn scaled(&self, c: f64) -> SpectralDensity {
        SpectralDensity { omega: self.omega.clone(), values: self.values.iter().map(|j| j * c).collect(), mass: self.mass }
    }
}

/// Cosine transform `η(t) = 2 ∫₀^∞ J(ω)/(π m ω) cos(ωt) dω` of a sampled
/// spectral density, by adaptive panel quadrature at relative tolerance 1e-8.
pub fn spectral_to_kernel(table: &SpectralDensity, mass: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    ensure(mass > 0.0, || "mass must be > 0".into())?;
    if table.values.iter().all(|j| *j == 0.0) {
        return Ok(0.0);
    }
    let mut breaks = table.omega.clone();
    // split long segments so every panel spans at most about one oscillation
    if t > 0.0 {
        let period = 2.0 * PI / t;
        let mut refined = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            let pieces = ((w[1] - w[0]) / period).ceil().max(1.0) as usize;
            for k in 0..pieces {
                refined.push(w[0] + (w[1] - w[0]) * k as f64 / pieces as f64);
            }
        }
        refined.push(*breaks.last().unwrap());
        breaks = refined;
    }
    // near zeros of η(t) a purely relative target is unreachable; floor it at
    // a tiny fraction of the integrand's L1 scale
    let scale: f64 = table.omega.windows(2).map(|w| (w[1] - w[0]) * table.value_over_omega(0.5 * (w[0] + w[1]))).sum();
    let q = Quadrature { rel_tol: 1e-8, abs_tol: 1e-12 * scale, max_panels: 200_000 };
    let integral = q.integrate_breaks(|w| table.value_over_omega(w) * (w * t).cos(), &breaks)?;
    Ok(2.0 * integral / (PI * mass))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReservoirKind {
    Delta,
    Exponential { corr_time: f64 },
    Tabulated(SpectralDensity),
}

/// One equilibrium reservoir. For tabulated reservoirs `coupling` scales the
/// sampled spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirSpec {
    pub kind: ReservoirKind,
    pub coupling: f64,
    pub temperature: f64,
}

/// Value of a force correlator at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelatorValue {
    Pointwise(f64),
    /// Weight of a delta component, `T η_f`.
    DeltaWeight(f64),
}

impl ReservoirSpec {
    pub fn delta(coupling: f64, temperature: f64) -> Self {
        ReservoirSpec { kind: ReservoirKind::Delta, coupling, temperature }
    }

    pub fn exponential(coupling: f64, corr_time: f64, temperature: f64) -> Self {
        ReservoirSpec { kind: ReservoirKind::Exponential { corr_time }, coupling, temperature }
    }

    pub fn tabulated(density: SpectralDensity, temperature: f64) -> Self {
        ReservoirSpec { kind: ReservoirKind::Tabulated(density), coupling: 1.0, temperature }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.coupling >= 0.0 && self.coupling.is_finite(), || format!("coupling {} must be >= 0", self.coupling))?;
        ensure(self.temperature >= 0.0 && self.temperature.is_finite(), || {
            format!("temperature {} must be >= 0", self.temperature)
        })?;
        if let ReservoirKind::Exponential { corr_time } = self.kind {
            ensure(corr_time > 0.0 && corr_time.is_finite(), || format!("correlation time {corr_time} must be > 0"))?;
        }
        Ok(())
    }

    /// Pointwise friction kernel η(t) for t ≥ 0.
    pub fn friction_kernel_time(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        match &self.kind {
            ReservoirKind::Delta => Err(Error::DeltaKernelNotPointwise),
            ReservoirKind::Exponential { corr_time } => Ok(self.coupling / corr_time * (-t / corr_time).exp()),
            ReservoirKind::Tabulated(table) => Ok(self.coupling * spectral_to_kernel(table, table.mass, t)?),
        }
    }

    pub fn friction_kernel_laplace(&self) -> Result<LaplaceRational> {
        match &self.kind {
            ReservoirKind::Delta => Ok(LaplaceRational::constant(self.coupling)),
            ReservoirKind::Exponential { corr_time } => Ok(LaplaceRational::first_order(self.coupling, *corr_time)),
            ReservoirKind::Tabulated(_) => Err(Error::TabulatedNotRational),
        }
    }

    /// High-temperature force correlator `C(t) = T η(t)`.
    pub fn correlator_time(&self, t: f64) -> Result<CorrelatorValue> {
        check_time(t)?;
        match self.kind {
            ReservoirKind::Delta => Ok(CorrelatorValue::DeltaWeight(self.temperature * self.coupling)),
            _ => Ok(CorrelatorValue::Pointwise(self.temperature * self.friction_kernel_time(t)?)),
        }
    }
}

/// Externally applied random force without back-action on the friction, e.g.
/// a noisy electric field acting on a charged particle. `weight` is the force
/// noise weight (e² times the field noise intensity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpec {
    pub corr_time: Option<f64>,
    pub weight: f64,
}

impl FieldSpec {
    /// Delta-correlated field: `C(t) = weight · δ(t)`.
    pub fn white(weight: f64) -> Self {
        FieldSpec { corr_time: None, weight }
    }

    /// Exponentially correlated field: `C(t) = (weight/τ) e^{−t/τ}`.
    pub fn colored(weight: f64, corr_time: f64) -> Self {
        FieldSpec { corr_time: Some(corr_time), weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct System {
    pub mass: f64,
    pub frequency: f64,
}

impl System {
    pub fn new(mass: f64, frequency: f64) -> Result<Self> {
        ensure(mass > 0.0 && mass.is_finite(), || format!("mass {mass} must be > 0"))?;
        ensure(frequency >= 0.0 && frequency.is_finite(), || format!("frequency {frequency} must be >= 0"))?;
        Ok(System { mass, frequency })
    }
}

/// Exponential memory component: friction weight, force-noise weight, and
/// correlation time. For an equilibrium reservoir `noise = T · friction`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpMode {
    pub friction: f64,
    pub noise: f64,
    pub corr_time: f64,
}

impl ExpMode {
    pub fn temperature(&self) -> Option<f64> {
        (self.friction > 0.0).then(|| self.noise / self.friction)
    }
}

/// Tabulated friction and correlator sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPart {
    pub dt: f64,
    pub friction: Vec<f64>,
    pub correlator: Vec<f64>,
    /// Source tables with their temperatures, scaled by coupling.
    pub sources: Vec<(SpectralDensity, f64)>,
}

impl TabulatedPart {
    fn interp(values: &[f64], dt: f64, t: f64) -> f64 {
        let x = t / dt;
        let k = x.floor() as usize;
        if k + 1 >= values.len() {
            return if k + 1 == values.len() && x == k as f64 { values[k] } else { 0.0 };
        }
        let f = x - k as f64;
        values[k] * (1.0 - f) + values[k + 1] * f
    }

    pub fn friction_at(&self, t: f64) -> f64 {
        Self::interp(&self.friction, self.dt, t)
    }

    pub fn correlator_at(&self, t: f64) -> f64 {
        Self::interp(&self.correlator, self.dt, t)
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.friction.len() - 1) as f64
    }
}

/// Uniform time grid on which tabulated kernels are stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabulationGrid {
    pub dt: f64,
    pub len: usize,
}

impl TabulationGrid {
    fn for_tables<'a>(tables: impl Iterator<Item = &'a SpectralDensity>) -> Self {
        let w_max = tables.map(|t| t.max_frequency()).fold(0.0, f64::max);
        TabulationGrid { dt: PI / (8.0 * w_max), len: 4097 }
    }
}

/// `Σ amplitude·e^{−rate·t}` plus a delta weight at t = 0.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeExpansion {
    pub delta: f64,
    pub terms: Vec<ExpTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub amplitude: Complex64,
    pub rate: Complex64,
}

impl ExpTerm {
    pub fn real(amplitude: f64, rate: f64) -> Self {
        ExpTerm { amplitude: Complex64::new(amplitude, 0.0), rate: Complex64::new(rate, 0.0) }
    }
}

impl ModeExpansion {
    /// Smooth part at time t.
    pub fn smooth(&self, t: f64) -> f64 {
        self.terms.iter().map(|m| (m.amplitude * (-m.rate * t).exp()).re).sum()
    }

    /// Delta weight plus the integral of the smooth part over [0, t].
    pub fn cumulative(&self, t: f64) -> f64 {
        let smooth: f64 = self
            .terms
            .iter()
            .map(|m| {
                let z = -m.rate * t;
                // (1 - e^{-rate t}) / rate  =  t · φ1(−rate·t)
                (m.amplitude * t * crate::special::phi1(z)).re
            })
            .sum();
        self.delta + smooth
    }
}

/// Composite environment: summed friction kernel and force correlator.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub delta_friction: f64,
    pub delta_noise: f64,
    pub modes: Vec<ExpMode>,
    pub tabulated: Option<TabulatedPart>,
    pub system: System,
}

impl NoiseModel {
    pub fn compose(specs: &[ReservoirSpec], system: System) -> Result<Self> {
        let tables = specs.iter().filter_map(|s| match &s.kind {
            ReservoirKind::Tabulated(t) => Some(t),
            _ => None,
        });
        let grid = TabulationGrid::for_tables(tables);
        Self::compose_on_grid(specs, system, grid)
    }

    pub fn compose_on_grid(specs: &[ReservoirSpec], system: System, grid: TabulationGrid) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyEnvironment);
        }
        let mut model = NoiseModel { delta_friction: 0.0, delta_noise: 0.0, modes: vec![], tabulated: None, system };
        let mut sources = vec![];
        for spec in specs {
            spec.validate()?;
            match &spec.kind {
                ReservoirKind::Delta => {
                    model.delta_friction += spec.coupling;
                    model.delta_noise += spec.coupling * spec.temperature;
                }
                ReservoirKind::Exponential { corr_time } => model.push_mode(ExpMode {
                    friction: spec.coupling,
                    noise: spec.coupling * spec.temperature,
                    corr_time: *corr_time,
                }),
                ReservoirKind::Tabulated(table) => {
                    ensure((table.mass - system.mass).abs() <= 1e-12 * system.mass, || {
                        "spectral table mass differs from the system mass".into()
                    })?;
                    sources.push((table.scaled(spec.coupling), spec.temperature));
                }
            }
        }
        if !sources.is_empty() {
            ensure(grid.dt > 0.0 && grid.len >= 2, || "tabulation grid needs dt > 0 and two points".into())?;
            let mut friction = vec![0.0; grid.len];
            let mut correlator = vec![0.0; grid.len];
            for (table, temp) in &sources {
                for (k, (f, c)) in friction.iter_mut().zip(correlator.iter_mut()).enumerate() {
                    let eta = spectral_to_kernel(table, system.mass, k as f64 * grid.dt)?;
                    *f += eta;
                    *c += temp * eta;
                }
            }
            model.tabulated = Some(TabulatedPart { dt: grid.dt, friction, correlator, sources });
        }
        Ok(model)
    }

    fn push_mode(&mut self, mode: ExpMode) {
        if let Some(m) = self.modes.iter_mut().find(|m| m.corr_time == mode.corr_time) {
            m.friction += mode.friction;
            m.noise += mode.noise;
        } else {
            self.modes.push(mode);
        }
    }

    /// Adds external random fields; they contribute to the correlator only.
    pub fn with_fields(mut self, fields: &[FieldSpec]) -> Result<Self> {
        for f in fields {
            ensure(f.weight >= 0.0 && f.weight.is_finite(), || "field weight must be >= 0".into())?;
            match f.corr_time {
                None => self.delta_noise += f.weight,
                Some(tau) => {
                    ensure(tau > 0.0, || "field correlation time must be > 0".into())?;
                    self.push_mode(ExpMode { friction: 0.0, noise: f.weight, corr_time: tau });
                }
            }
        }
        Ok(self)
    }

    pub fn is_rational(&self) -> bool {
        self.tabulated.is_none()
    }

    /// Smooth (non-delta) part of η(t).
    pub fn friction_time(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let modes: f64 = self.modes.iter().map(|m| m.friction / m.corr_time * (-t / m.corr_time).exp()).sum();
        Ok(modes + self.tabulated.as_ref().map_or(0.0, |tab| tab.friction_at(t)))
    }

    /// Smooth (non-delta) part of C(t), t ≥ 0.
    pub fn correlator_time(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let modes: f64 = self.modes.iter().map(|m| m.noise / m.corr_time * (-t / m.corr_time).exp()).sum();
        Ok(modes + self.tabulated.as_ref().map_or(0.0, |tab| tab.correlator_at(t)))
    }

    fn sum_numerator(&self, direct: f64, weight: impl Fn(&ExpMode) -> f64) -> Vec<f64> {
        let mut num = vec![direct];
        for m in &self.modes {
            num = poly_mul(&num, &[1.0, m.corr_time]);
        }
        for (k, m) in self.modes.iter().enumerate() {
            let mut term = vec![weight(m)];
            for (j, o) in self.modes.iter().enumerate() {
                if j != k {
                    term = poly_mul(&term, &[1.0, o.corr_time]);
                }
            }
            num = poly_add(&num, &term);
        }
        num
    }

    fn common_denominator(&self) -> Vec<f64> {
        self.modes.iter().fold(vec![1.0], |acc, m| poly_mul(&acc, &[1.0, m.corr_time]))
    }

    /// η[s] = η_δ + Σ η_k/(sτ_k + 1).
    pub fn friction_laplace(&self) -> Result<LaplaceRational> {
        if !self.is_rational() {
            return Err(Error::TabulatedNotRational);
        }
        LaplaceRational::new(self.sum_numerator(self.delta_friction, |m| m.friction), self.common_denominator())
    }

    /// C[s] = c_δ + Σ w_k/(sτ_k + 1).
    pub fn correlator_laplace(&self) -> Result<LaplaceRational> {
        if !self.is_rational() {
            return Err(Error::TabulatedNotRational);
        }
        LaplaceRational::new(self.sum_numerator(self.delta_noise, |m| m.noise), self.common_denominator())
    }

    /// Numerator polynomials of C[s] and η[s] over their shared denominator.
    pub(crate) fn laplace_numerators(&self) -> (Vec<f64>, Vec<f64>) {
        (self.sum_numerator(self.delta_noise, |m| m.noise), self.sum_numerator(self.delta_friction, |m| m.friction))
    }

    pub fn friction_expansion(&self) -> Result<ModeExpansion> {
        if !self.is_rational() {
            return Err(Error::TabulatedNotRational);
        }
        Ok(ModeExpansion {
            delta: self.delta_friction,
            terms: self.modes.iter().map(|m| ExpTerm::real(m.friction / m.corr_time, 1.0 / m.corr_time)).collect(),
        })
    }

    pub fn correlator_expansion(&self) -> Result<ModeExpansion> {
        if !self.is_rational() {
            return Err(Error::TabulatedNotRational);
        }
        Ok(ModeExpansion {
            delta: self.delta_noise,
            terms: self.modes.iter().map(|m| ExpTerm::real(m.noise / m.corr_time, 1.0 / m.corr_time)).collect(),
        })
    }

    /// ∫₀^∞ η(t) dt including the delta weight.
    pub fn total_friction(&self) -> f64 {
        // ∫η dt = lim_{ω→0} J(ω)/(m ω)
        let tab = self.tabulated.as_ref().map_or(0.0, |t| {
            t.sources.iter().filter(|(j, _)| j.omega[0] == 0.0).map(|(j, _)| j.value_over_omega(0.0) / j.mass).sum::<f64>()
        });
        self.delta_friction + self.modes.iter().map(|m| m.friction).sum::<f64>() + tab
    }

    /// ∫₀^∞ C(t) dt including the delta weight.
    pub fn total_noise(&self) -> f64 {
        let tab = self.tabulated.as_ref().map_or(0.0, |t| {
            t.sources
                .iter()
                .filter(|(j, _)| j.omega[0] == 0.0)
                .map(|(j, temp)| temp * j.value_over_omega(0.0) / j.mass)
                .sum::<f64>()
        });
        self.delta_noise + self.modes.iter().map(|m| m.noise).sum::<f64>() + tab
    }

    /// Temperatures of the equilibrium reservoirs that make up the model.
    pub fn reservoir_temperatures(&self) -> Vec<f64> {
        let mut out = vec![];
        if self.delta_friction > 0.0 {
            out.push(self.delta_noise / self.delta_friction);
        }
        out.extend(self.modes.iter().filter_map(|m| m.temperature()));
        if let Some(t) = &self.tabulated {
            out.extend(t.sources.iter().map(|(_, temp)| *temp));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sys() -> System {
        System::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn exponential_kernel_values() {
        let r = ReservoirSpec::exponential(1.0, 2.0, 0.0);
        assert_eq!(r.friction_kernel_time(0.0).unwrap(), 0.5);
        let r = ReservoirSpec::exponential(1.0, 1.0, 0.0);
        assert!((r.friction_kernel_time(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-16);
        assert!(matches!(r.friction_kernel_time(-1.0), Err(Error::NegativeTime(_))));
        let d = ReservoirSpec::delta(1.0, 1.0);
        assert_eq!(d.friction_kernel_time(0.5), Err(Error::DeltaKernelNotPointwise));
    }

    #[test]
    fn correlator_values() {
        let r = ReservoirSpec::exponential(1.0, 1.0, 2.0);
        assert_eq!(r.correlator_time(0.0).unwrap(), CorrelatorValue::Pointwise(2.0));
        let r = ReservoirSpec::exponential(4.0, 2.0, 0.5);
        let CorrelatorValue::Pointwise(c) = r.correlator_time(2.0).unwrap() else { panic!() };
        assert!((c - (-1.0f64).exp()).abs() < 1e-15);
        let d = ReservoirSpec::delta(1.0, 3.0);
        assert_eq!(d.correlator_time(0.0).unwrap(), CorrelatorValue::DeltaWeight(3.0));
    }

    #[test]
    fn laplace_forms() {
        let d = ReservoirSpec::delta(3.0, 1.0).friction_kernel_laplace().unwrap();
        assert_eq!(d.numerator(), &[3.0]);
        assert_eq!(d.denominator(), &[1.0]);
        let e = ReservoirSpec::exponential(2.0, 5.0, 1.0).friction_kernel_laplace().unwrap();
        assert_eq!(e.numerator(), &[2.0]);
        assert_eq!(e.denominator(), &[1.0, 5.0]);
        assert!(e.eval_real(1e12).abs() < 1e-11);
        let tab = SpectralDensity::new(vec![0.0, 1.0], vec![0.0, 1.0], 1.0).unwrap();
        assert_eq!(ReservoirSpec::tabulated(tab, 1.0).friction_kernel_laplace(), Err(Error::TabulatedNotRational));
    }

    #[test]
    fn exponential_laplace_matches_numerical_transform() {
        let r = ReservoirSpec::exponential(2.0, 5.0, 1.0);
        let lap = r.friction_kernel_laplace().unwrap();
        let q = Quadrature::with_rel_tol(1e-12);
        for s in [0.1, 1.0, 10.0] {
            let num = q
                .integrate_breaks(|t| r.friction_kernel_time(t).unwrap() * (-s * t).exp(), &[0.0, 5.0, 50.0, 500.0, 5000.0])
                .unwrap();
            assert!((num / lap.eval_real(s) - 1.0).abs() < 1e-9, "s = {s}");
        }
    }

    #[test]
    fn compose_two_reservoirs() {
        let (ef, tf, es, tau, ts) = (0.7, 2.0, 1.3, 3.0, 0.5);
        let m = NoiseModel::compose(&[ReservoirSpec::delta(ef, tf), ReservoirSpec::exponential(es, tau, ts)], sys()).unwrap();
        let eta = m.friction_laplace().unwrap();
        for s in [0.0, 0.3, 7.0] {
            let expected = (ef * (s * tau + 1.0) + es) / (s * tau + 1.0);
            assert!((eta.eval_real(s) - expected).abs() < 1e-14);
        }
        let eq = NoiseModel::compose(&[ReservoirSpec::delta(2.0, 3.0)], sys()).unwrap();
        let c = eq.correlator_laplace().unwrap();
        assert_eq!(c.den_degree(), 0);
        assert_eq!(c.value_at_infinity(), 6.0);
        assert_eq!(NoiseModel::compose(&[], sys()), Err(Error::EmptyEnvironment));
    }

    #[test]
    fn equal_modes_merge() {
        let a = NoiseModel::compose(&[ReservoirSpec::exponential(1.0, 1.0, 2.0), ReservoirSpec::exponential(1.0, 1.0, 2.0)], sys())
            .unwrap();
        let b = NoiseModel::compose(&[ReservoirSpec::exponential(2.0, 1.0, 2.0)], sys()).unwrap();
        for t in [0.0, 0.4, 3.0] {
            assert_eq!(a.friction_time(t).unwrap(), b.friction_time(t).unwrap());
            assert_eq!(a.correlator_time(t).unwrap(), b.correlator_time(t).unwrap());
        }
    }

    #[test]
    fn zero_table_gives_zero_kernel() {
        let tab = SpectralDensity::new(vec![0.0, 1.0, 2.0], vec![0.0; 3], 1.0).unwrap();
        for t in [0.0, 1.0, 10.0] {
            assert_eq!(spectral_to_kernel(&tab, 1.0, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn ohmic_kernel_at_origin() {
        // J = m η ω on [0, ω_c]: η(0) = 2 η ω_c / π
        let (m, eta, wc) = (2.0, 0.3, 5.0);
        let omega: Vec<f64> = (0..=50).map(|k| wc * k as f64 / 50.0).collect();
        let j: Vec<f64> = omega.iter().map(|w| m * eta * w).collect();
        let tab = SpectralDensity::new(omega, j, m).unwrap();
        let v = spectral_to_kernel(&tab, m, 0.0).unwrap();
        assert!((v / (2.0 * eta * wc / PI) - 1.0).abs() < 1e-10);
        for t in [0.3, 2.0, 40.0] {
            let exact = 2.0 * eta * (wc * t).sin() / (PI * t);
            assert!((spectral_to_kernel(&tab, m, t).unwrap() - exact).abs() < 1e-9 * v, "t = {t}");
        }
    }

    #[test]
    fn narrow_peak_gives_cosine() {
        // area (π m / 2) concentrated at ω₀ gives η(t) → cos(ω₀ t)/ω₀
        let (m, w0) = (1.5, 2.0);
        let mut prev = f64::INFINITY;
        for width in [0.2, 0.05, 0.0125] {
            let h = PI * m / 2.0 / width;
            let tab = SpectralDensity::new(
                vec![w0 - width, w0 - width / 2.0, w0 + width / 2.0, w0 + width],
                vec![0.0, h * 2.0 / 3.0, h * 2.0 / 3.0, 0.0],
                m,
            )
            .unwrap();
            let err: f64 = [0.0, 0.7, 1.9]
                .iter()
                .map(|&t| (spectral_to_kernel(&tab, m, t).unwrap() - (w0 * t).cos() / w0).abs())
                .fold(0.0, f64::max);
            assert!(err < prev, "bin-width convergence");
            prev = err;
        }
        assert!(prev < 1e-3);
    }
}
