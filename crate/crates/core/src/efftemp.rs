//! Effective temperature `T[s] = C[s]/η[s]` of a composite environment and
//! its time-domain form `T_eff(t) = ∫_{0⁻}^t T(t') dt'`.

use num_complex::Complex64;

use crate::error::{check_time, ensure, Error, Result};
use crate::kernels::{ExpTerm, ModeExpansion, NoiseModel};
use crate::laplace::LaplaceRational;
use crate::special::phi1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClosedForm,
    PartialFraction,
    Numerical,
}

/// `e^{−γt}(a cos ωt + b sin ωt)`; `frequency = 0` is a plain exponential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureMode {
    pub cos_amplitude: f64,
    pub sin_amplitude: f64,
    pub decay_rate: f64,
    pub frequency: f64,
}

impl TemperatureMode {
    /// Complex exponential terms whose real parts sum to this mode.
    fn complex_terms(&self) -> ExpTerm {
        // a cos ωt + b sin ωt = Re[(a − i b) e^{iωt}]
        ExpTerm {
            amplitude: Complex64::new(self.cos_amplitude, -self.sin_amplitude),
            rate: Complex64::new(self.decay_rate, -self.frequency),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let e = (-self.decay_rate * t).exp();
        e * (self.cos_amplitude * (self.frequency * t).cos() + self.sin_amplitude * (self.frequency * t).sin())
    }

    pub fn integral(&self, t: f64) -> f64 {
        let m = self.complex_terms();
        (m.amplitude * t * phi1(-m.rate * t)).re
    }
}

/// Smooth part of `T(t)` sampled on a uniform grid, with its running integral.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTemperature {
    pub dt: f64,
    pub density: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl SampledTemperature {
    fn lookup(values: &[f64], dt: f64, t: f64) -> f64 {
        let x = t / dt;
        let k = x.floor() as usize;
        if k + 1 >= values.len() {
            return *values.last().unwrap();
        }
        let f = x - k as f64;
        values[k] * (1.0 - f) + values[k + 1] * f
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.density.len() - 1) as f64
    }

    /// Running integral, cubic Hermite interpolated with the density as slope.
    fn integral(&self, t: f64) -> f64 {
        let x = t / self.dt;
        let k = x.floor() as usize;
        if k + 1 >= self.cumulative.len() {
            return *self.cumulative.last().unwrap();
        }
        let f = x - k as f64;
        let (y0, y1) = (self.cumulative[k], self.cumulative[k + 1]);
        let (m0, m1) = (self.density[k] * self.dt, self.density[k + 1] * self.dt);
        let f2 = f * f;
        let f3 = f2 * f;
        (2.0 * f3 - 3.0 * f2 + 1.0) * y0 + (f3 - 2.0 * f2 + f) * m0 + (-2.0 * f3 + 3.0 * f2) * y1 + (f3 - f2) * m1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTemperature {
    pub delta_weight: f64,
    pub modes: Vec<TemperatureMode>,
    /// `T_eff(t → ∞) = T[0]`.
    pub asymptote: f64,
    pub provenance: Provenance,
    pub samples: Option<SampledTemperature>,
}

impl EffectiveTemperature {
    pub fn constant(t: f64) -> Self {
        EffectiveTemperature { delta_weight: t, modes: vec![], asymptote: t, provenance: Provenance::ClosedForm, samples: None }
    }

    /// Smooth part of the temperature kernel `T(t)` for t > 0.
    pub fn smooth(&self, t: f64) -> f64 {
        match &self.samples {
            Some(s) if t <= s.t_max() => SampledTemperature::lookup(&s.density, s.dt, t),
            Some(_) => 0.0,
            None => self.modes.iter().map(|m| m.value(t)).sum(),
        }
    }

    /// `T_eff(t)`; the t = 0 atom is included, so `T_eff(0)` is the delta weight.
    /// Sampled representations hold their last value beyond the grid.
    pub fn t_eff(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let smooth = match &self.samples {
            Some(s) => s.integral(t),
            None => self.modes.iter().map(|m| m.integral(t)).sum(),
        };
        Ok(self.delta_weight + smooth)
    }

    /// Delta weight plus complex exponential terms, when the kernel is analytic.
    pub fn expansion(&self) -> Option<ModeExpansion> {
        if self.samples.is_some() {
            return None;
        }
        Some(ModeExpansion { delta: self.delta_weight, terms: self.modes.iter().map(|m| m.complex_terms()).collect() })
    }
}

/// `T[s] = Σ T_k η_k[s] / Σ η_k[s]`, reduced.
pub fn effective_temperature_laplace(model: &NoiseModel) -> Result<LaplaceRational> {
    if !model.is_rational() {
        return Err(Error::TabulatedNotRational);
    }
    let (c, eta) = model.laplace_numerators();
    if eta.iter().all(|x| *x == 0.0) {
        return Err(Error::ZeroFriction);
    }
    LaplaceRational::new(c, eta)
}

/// Exact partial-fraction inversion of a rational `T[s]`.
pub fn invert_laplace(ts: &LaplaceRational) -> Result<EffectiveTemperature> {
    ensure(ts.num_degree() <= ts.den_degree(), || "T[s] must be proper".into())?;
    let pf = ts.partial_fractions()?;
    let mut modes = vec![];
    for term in &pf.terms {
        let (p, r) = (term.pole, term.residue);
        if p.im.abs() <= 1e-12 * p.norm() {
            modes.push(TemperatureMode { cos_amplitude: r.re, sin_amplitude: 0.0, decay_rate: -p.re, frequency: 0.0 });
        } else if p.im > 0.0 {
            // r e^{pt} + c.c. = 2 Re r cos − 2 Im r sin
            modes.push(TemperatureMode {
                cos_amplitude: 2.0 * r.re,
                sin_amplitude: -2.0 * r.im,
                decay_rate: -p.re,
                frequency: p.im,
            });
        }
    }
    modes.sort_by(|a, b| a.decay_rate.total_cmp(&b.decay_rate));
    let provenance = if modes.is_empty() { Provenance::ClosedForm } else { Provenance::PartialFraction };
    Ok(EffectiveTemperature { delta_weight: pf.direct, modes, asymptote: ts.eval_real(0.0), provenance, samples: None })
}

/// Effective temperature of any model: exact for rational models, by a
/// time-domain Volterra solve otherwise.
pub fn effective_temperature(model: &NoiseModel) -> Result<EffectiveTemperature> {
    if model.is_rational() {
        invert_laplace(&effective_temperature_laplace(model)?)
    } else {
        effective_temperature_numerical(model, None)
    }
}

pub fn t_eff(model: &NoiseModel, t: f64) -> Result<f64> {
    check_time(t)?;
    effective_temperature(model)?.t_eff(t)
}

/// Solves `C = η ∗ T` for `T(t)` on a uniform grid with trapezoidal
/// convolution plus one Richardson step (grids dt and dt/2). `grid` overrides
/// the automatic `(dt, len)` choice.
pub fn effective_temperature_numerical(model: &NoiseModel, grid: Option<(f64, usize)>) -> Result<EffectiveTemperature> {
    let eta_total = model.total_friction();
    let tab_zero = model.tabulated.as_ref().is_none_or(|t| t.friction.iter().all(|x| *x == 0.0));
    if model.delta_friction == 0.0 && model.modes.iter().all(|m| m.friction == 0.0) && tab_zero {
        return Err(Error::ZeroFriction);
    }
    let (dt, len) = grid.unwrap_or_else(|| auto_grid(model));
    ensure(dt > 0.0 && len >= 3, || "numerical grid needs dt > 0 and three points".into())?;
    let (delta_weight, coarse) = volterra(model, dt, len)?;
    let (_, fine) = volterra(model, 0.5 * dt, 2 * len - 1)?;
    let density: Vec<f64> = (0..len).map(|k| (4.0 * fine[2 * k] - coarse[k]) / 3.0).collect();
    let cum_c = cumulate(&coarse, dt);
    let cum_f = cumulate(&fine, 0.5 * dt);
    let cumulative: Vec<f64> = (0..len).map(|k| (4.0 * cum_f[2 * k] - cum_c[k]) / 3.0).collect();
    let asymptote = if eta_total > 0.0 {
        model.total_noise() / eta_total
    } else {
        delta_weight + cumulative.last().copied().unwrap_or(0.0)
    };
    Ok(EffectiveTemperature {
        delta_weight,
        modes: vec![],
        asymptote,
        provenance: Provenance::Numerical,
        samples: Some(SampledTemperature { dt, density, cumulative }),
    })
}

fn cumulate(density: &[f64], dt: f64) -> Vec<f64> {
    let mut cumulative = vec![0.0; density.len()];
    for n in 1..density.len() {
        cumulative[n] = cumulative[n - 1] + 0.5 * dt * (density[n - 1] + density[n]);
    }
    cumulative
}

/// Delta weight and smooth density of `T` on one grid.
fn volterra(model: &NoiseModel, dt: f64, len: usize) -> Result<(f64, Vec<f64>)> {
    let eta: Vec<f64> = (0..len).map(|k| model.friction_time(k as f64 * dt)).collect::<Result<_>>()?;
    let corr: Vec<f64> = (0..len).map(|k| model.correlator_time(k as f64 * dt)).collect::<Result<_>>()?;

    let (delta_weight, lead, kernel, rhs) = if model.delta_friction > 0.0 {
        let td = model.delta_noise / model.delta_friction;
        let rhs: Vec<f64> = corr.iter().zip(&eta).map(|(c, e)| c - td * e).collect();
        (td, model.delta_friction, eta, rhs)
    } else {
        ensure(model.delta_noise == 0.0, || "white noise without white friction has no finite temperature".into())?;
        if eta[0] <= 0.0 {
            return Err(Error::ZeroFriction);
        }
        // differentiate C = T_δ η + η ∗ T_s
        let td = corr[0] / eta[0];
        let deta = derivative(&eta, dt);
        let dcorr = derivative(&corr, dt);
        let rhs: Vec<f64> = dcorr.iter().zip(&deta).map(|(c, e)| c - td * e).collect();
        (td, eta[0], deta, rhs)
    };

    // lead·T(t_n) + ∫₀^{t_n} k(t_n − u) T(u) du = g(t_n)
    let mut density = vec![0.0; len];
    density[0] = rhs[0] / lead;
    for n in 1..len {
        let mut conv = 0.5 * kernel[n] * density[0];
        for j in 1..n {
            conv += kernel[n - j] * density[j];
        }
        density[n] = (rhs[n] - dt * conv) / (lead + 0.5 * dt * kernel[0]);
    }
    Ok((delta_weight, density))
}

fn auto_grid(model: &NoiseModel) -> (f64, usize) {
    let tau_min = model.modes.iter().map(|m| m.corr_time).fold(f64::INFINITY, f64::min);
    let tau_max = model.modes.iter().map(|m| m.corr_time).fold(0.0, f64::max);
    let (tab_dt, tab_end) = model.tabulated.as_ref().map_or((f64::INFINITY, 0.0), |t| (t.dt, t.t_max()));
    let dt = tab_dt.min(tau_min / 40.0);
    let end = tab_end.max(20.0 * tau_max);
    let len = ((end / dt).ceil() as usize + 1).clamp(3, 8_193);
    (dt, len)
}

fn derivative(v: &[f64], dt: f64) -> Vec<f64> {
    let n = v.len();
    let mut d = vec![0.0; n];
    d[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * dt);
    for k in 1..n - 1 {
        d[k] = (v[k + 1] - v[k - 1]) / (2.0 * dt);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * dt);
    d
}

/// Closed form for a white reservoir `(η_f, T_f)` plus an exponentially
/// correlated one `(η_s, τ, T_s)`.
pub fn two_reservoir_t_eff(eta_f: f64, t_f: f64, eta_s: f64, t_s: f64, tau: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    ensure(eta_f > 0.0 && eta_s >= 0.0 && tau > 0.0, || "need eta_f > 0, eta_s >= 0, tau > 0".into())?;
    let eta = eta_f + eta_s;
    Ok((eta_f * t_f + eta_s * t_s) / eta + eta_s / eta * (t_f - t_s) * (-eta / eta_f * t / tau).exp())
}

/// Effective temperature of a white field (intensity `e1sq`) and an
/// exponentially correlated field (intensity `e2sq`, time `tau`) acting on a
/// charge with constant friction `eta`, on top of an ambient temperature.
pub fn engineered_t_eff(e1sq: f64, e2sq: f64, tau: f64, eta: f64, charge: f64, ambient: f64, t: f64) -> Result<f64> {
    check_time(t)?;
    ensure(eta > 0.0 && tau >= 0.0 && e1sq >= 0.0 && e2sq >= 0.0 && ambient >= 0.0, || {
        "need eta > 0, tau >= 0 and nonnegative field intensities".into()
    })?;
    let rise = if tau == 0.0 { if t > 0.0 { 1.0 } else { 0.0 } } else { -(-t / tau).exp_m1() };
    Ok(ambient + charge * charge / eta * (e1sq + e2sq * rise))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{FieldSpec, ReservoirSpec, SpectralDensity, System};
    use crate::laplace::talbot_invert;

    fn sys() -> System {
        System::new(1.0, 1.0).unwrap()
    }

    fn two(ef: f64, tf: f64, es: f64, tau: f64, ts: f64) -> NoiseModel {
        NoiseModel::compose(&[ReservoirSpec::delta(ef, tf), ReservoirSpec::exponential(es, tau, ts)], sys()).unwrap()
    }

    #[test]
    fn single_reservoir_is_constant() {
        for spec in [ReservoirSpec::delta(2.0, 3.5), ReservoirSpec::exponential(2.0, 0.7, 3.5)] {
            let m = NoiseModel::compose(&[spec], sys()).unwrap();
            let ts = effective_temperature_laplace(&m).unwrap();
            assert_eq!(ts.den_degree(), 0);
            assert!((ts.value_at_infinity() - 3.5).abs() < 1e-14);
            let te = invert_laplace(&ts).unwrap();
            assert!(te.modes.is_empty());
            assert!((te.t_eff(4.0).unwrap() - 3.5).abs() < 1e-14);
        }
    }

    #[test]
    fn two_reservoir_laplace_form() {
        let (ef, tf, es, tau, ts) = (0.8, 2.0, 1.7, 3.0, 0.4);
        let tl = effective_temperature_laplace(&two(ef, tf, es, tau, ts)).unwrap();
        for s in [0.0, 0.2, 5.0] {
            let exact = (tf * ef * (s * tau + 1.0) + ts * es) / (ef * (s * tau + 1.0) + es);
            assert!((tl.eval_real(s) - exact).abs() < 1e-14);
        }
        assert!((tl.eval_real(1e6 / tau) - tf).abs() < 1e-5);
        let te = invert_laplace(&tl).unwrap();
        assert_eq!(te.modes.len(), 1);
        let rate = (ef + es) / (ef * tau);
        assert!((te.modes[0].decay_rate / rate - 1.0).abs() < 1e-13);
        assert_eq!(te.delta_weight, tl.value_at_infinity());
    }

    #[test]
    fn inversion_matches_closed_form() {
        let (ef, tf, es, tau, ts) = (0.3, 5.0, 2.2, 1.4, 0.9);
        let te = t_eff_curve(&two(ef, tf, es, tau, ts));
        for t in [0.0, 0.01, 0.5, 3.0, 40.0] {
            let exact = two_reservoir_t_eff(ef, tf, es, ts, tau, t).unwrap();
            assert!((te.t_eff(t).unwrap() / exact - 1.0).abs() < 1e-12, "t = {t}");
        }
        assert!((te.t_eff(0.0).unwrap() - tf).abs() < 1e-12);
        assert!((te.asymptote - (ef * tf + es * ts) / (ef + es)).abs() < 1e-12);
    }

    fn t_eff_curve(m: &NoiseModel) -> EffectiveTemperature {
        effective_temperature(m).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        for t in [0.0, 1.0, 9.0] {
            assert!((two_reservoir_t_eff(1.0, 1.7, 2.0, 1.7, 0.5, t).unwrap() - 1.7).abs() < 1e-15);
        }
        assert_eq!(two_reservoir_t_eff(1.0, 2.0, 1.0, 1.0, 1.0, 0.0).unwrap(), 2.0);
        assert!((two_reservoir_t_eff(1.0, 2.0, 1.0, 1.0, 1.0, 1e3).unwrap() - 1.5).abs() < 1e-15);
        assert!(two_reservoir_t_eff(0.0, 2.0, 1.0, 1.0, 1.0, 1.0).is_err());

        let (e1, e2, tau, eta, q) = (1.0, 0.6, 5.0, 2.0, 1.5);
        assert_eq!(engineered_t_eff(e1, e2, tau, eta, q, 0.0, 0.0).unwrap(), q * q * e1 / eta);
        let late = engineered_t_eff(e1, e2, tau, eta, q, 0.0, 1e4).unwrap();
        assert!((late - q * q * (e1 + e2) / eta).abs() < 1e-14);
        assert_eq!(engineered_t_eff(e1, e2, 0.0, eta, q, 0.0, 1e-9).unwrap(), q * q * (e1 + e2) / eta);
        let mut prev = 0.0;
        for k in 0..50 {
            let v = engineered_t_eff(e1, e2, tau, eta, q, 0.1, k as f64).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn engineered_model_matches_closed_form() {
        let (e1, e2, tau, eta) = (0.4, 0.9, 2.0, 1.3);
        let m = NoiseModel::compose(&[ReservoirSpec::delta(eta, 0.0)], sys())
            .unwrap()
            .with_fields(&[FieldSpec::white(e1), FieldSpec::colored(e2, tau)])
            .unwrap();
        let te = effective_temperature(&m).unwrap();
        for t in [0.0, 0.7, 6.0] {
            let exact = engineered_t_eff(e1, e2, tau, eta, 1.0, 0.0, t).unwrap();
            assert!((te.t_eff(t).unwrap() - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn talbot_cross_check_on_smooth_part() {
        let m = NoiseModel::compose(
            &[
                ReservoirSpec::delta(0.5, 1.0),
                ReservoirSpec::exponential(1.0, 0.5, 3.0),
                ReservoirSpec::exponential(2.0, 4.0, 0.2),
            ],
            sys(),
        )
        .unwrap();
        let tl = effective_temperature_laplace(&m).unwrap();
        let te = invert_laplace(&tl).unwrap();
        let d = te.delta_weight;
        for k in 1..=40 {
            let t = k as f64 * 0.1;
            let num = talbot_invert(|s| tl.eval(s) - d, t, 32);
            assert!((num - te.smooth(t)).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn oscillatory_modes_combine_into_real_terms() {
        // 1/(s² + 2s + 5) = e^{−t} sin(2t)/2
        let tl = LaplaceRational::new(vec![1.0], vec![5.0, 2.0, 1.0]).unwrap();
        let te = invert_laplace(&tl).unwrap();
        assert_eq!(te.modes.len(), 1);
        for t in [0.3f64, 1.0, 2.5] {
            let exact = (-t).exp() * (2.0 * t).sin() / 2.0;
            assert!((te.smooth(t) - exact).abs() < 1e-14);
        }
        // ∫₀^∞ = T[0] = 1/5
        assert!((te.t_eff(60.0).unwrap() - 0.2).abs() < 1e-14);
    }

    #[test]
    fn errors() {
        let tab = SpectralDensity::new(vec![0.0, 1.0], vec![0.0, 1.0], 1.0).unwrap();
        let m = NoiseModel::compose(&[ReservoirSpec::tabulated(tab, 1.0)], sys()).unwrap();
        assert_eq!(effective_temperature_laplace(&m), Err(Error::TabulatedNotRational));
        let z = NoiseModel::compose(&[ReservoirSpec::delta(0.0, 1.0)], sys()).unwrap();
        assert_eq!(effective_temperature_laplace(&z), Err(Error::ZeroFriction));
        let rep = LaplaceRational::new(vec![1.0], vec![1.0, 2.0, 1.0]).unwrap();
        assert!(matches!(invert_laplace(&rep), Err(Error::RepeatedPole(_))));
    }

    #[test]
    fn volterra_route_converges_to_exact() {
        let m = two(0.6, 2.5, 1.4, 1.5, 0.3);
        let exact = effective_temperature(&m).unwrap();
        let mut prev = f64::INFINITY;
        for n in [200usize, 400, 800] {
            let dt = 15.0 / n as f64;
            let num = effective_temperature_numerical(&m, Some((dt, n + 1))).unwrap();
            let err = (0..=30)
                .map(|k| k as f64 * 0.5)
                .map(|t| (num.t_eff(t).unwrap() - exact.t_eff(t).unwrap()).abs())
                .fold(0.0, f64::max);
            assert!(err < prev / 6.0, "extrapolated convergence");
            prev = err;
        }
        assert!(prev < 1e-6);
    }

    #[test]
    fn volterra_without_white_friction() {
        let m = NoiseModel::compose(
            &[ReservoirSpec::exponential(1.0, 0.5, 3.0), ReservoirSpec::exponential(2.0, 2.0, 0.5)],
            sys(),
        )
        .unwrap();
        let exact = effective_temperature(&m).unwrap();
        let num = effective_temperature_numerical(&m, Some((0.005, 4001))).unwrap();
        for t in [0.0, 0.5, 2.0, 10.0] {
            assert!((num.t_eff(t).unwrap() / exact.t_eff(t).unwrap() - 1.0).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn tabulated_drude_reproduces_exponential_reservoir() {
        // J = m η ω/(1 + ω²τ²) is the spectral density of (η/τ)e^{−t/τ}
        let (mass, es, tau, ts) = (1.0, 1.2, 1.0f64, 0.5);
        let wmax = 400.0 / tau;
        let mut omega = vec![0.0];
        omega.extend((0..=800).map(|k| 1e-3 / tau * (wmax * tau / 1e-3).powf(k as f64 / 800.0)));
        let j = omega.iter().map(|w| mass * es * w / (1.0 + w * w * tau * tau)).collect();
        let table = SpectralDensity::new(omega, j, mass).unwrap();
        let specs = [ReservoirSpec::delta(0.8, 2.0), ReservoirSpec::tabulated(table, ts)];
        let grid = crate::kernels::TabulationGrid { dt: 0.01, len: 1501 };
        let m = NoiseModel::compose_on_grid(&specs, sys(), grid).unwrap();
        let te = effective_temperature(&m).unwrap();
        assert_eq!(te.provenance, Provenance::Numerical);
        for t in [0.0, 0.5, 2.0, 8.0] {
            let exact = two_reservoir_t_eff(0.8, 2.0, es, ts, tau, t).unwrap();
            assert!((te.t_eff(t).unwrap() / exact - 1.0).abs() < 5e-3, "t = {t}");
        }
    }

    #[test]
    fn tabulated_single_temperature_is_constant() {
        let omega: Vec<f64> = (0..=100).map(|k| k as f64 * 0.05).collect();
        let j = omega.iter().map(|w| 0.7 * w).collect();
        let table = SpectralDensity::new(omega, j, 1.0).unwrap();
        let grid = crate::kernels::TabulationGrid { dt: 0.05, len: 400 };
        let m = NoiseModel::compose_on_grid(&[ReservoirSpec::tabulated(table, 1.3)], sys(), grid).unwrap();
        let te = effective_temperature(&m).unwrap();
        for t in [0.0, 1.0, 15.0] {
            assert!((te.t_eff(t).unwrap() - 1.3).abs() < 1e-9);
        }
    }
}
