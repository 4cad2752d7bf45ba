//! Momentum variance, attenuation exponent and fringe contrast.
//!
//! The fringe contrast of a cat state with separation `d` is `exp(−A_int)`
//! with `A_int(t) = d² σ²_pp(t)/2` and
//! `σ²_pp(t) = 2 ∫₀ᵗ dt' ∫₀^{t'} dt'' C(t' − t'') = 2 ∫₀ᵗ (t − u) C(u) du`.

use num_complex::Complex64;

use crate::efftemp::EffectiveTemperature;
use crate::error::{check_time, ensure, Error, Result};
use crate::kernels::{ExpTerm, ModeExpansion, NoiseModel};
use crate::quad::Quadrature;
use crate::special::{phi2, phi2_prime, phi2_real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatState {
    pub separation: f64,
    pub width: f64,
    pub mass: f64,
    pub frequency: f64,
    /// Set when `d < 3σ`: the packets overlap noticeably.
    pub overlapping: bool,
}

impl CatState {
    pub fn new(separation: f64, width: f64, mass: f64, frequency: f64) -> Result<Self> {
        ensure(separation > 0.0 && separation.is_finite(), || format!("separation {separation} must be > 0"))?;
        ensure(width > 0.0 && width.is_finite(), || format!("width {width} must be > 0"))?;
        ensure(mass > 0.0, || format!("mass {mass} must be > 0"))?;
        ensure(frequency >= 0.0, || format!("frequency {frequency} must be >= 0"))?;
        Ok(CatState { separation, width, mass, frequency, overlapping: separation < 3.0 * width })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    Quadrature,
    ExactGaussian,
    GridPde,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Quadrature => "quadrature",
            Method::ExactGaussian => "exact",
            Method::GridPde => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastCurve {
    pub times: Vec<f64>,
    pub a_int: Vec<f64>,
    pub contrast: Vec<f64>,
    pub method: Method,
}

impl ContrastCurve {
    pub fn from_exponents(times: Vec<f64>, a_int: Vec<f64>, method: Method) -> Self {
        let contrast = a_int.iter().map(|a| (-a).exp()).collect();
        ContrastCurve { times, a_int, contrast, method }
    }
}

/// `2 ∫₀ᵗ (t − u) (w/τ) e^{−u/τ} du = 2 (w/τ) t² φ₂(−t/τ)`.
fn exp_mode_variance(weight: f64, tau: f64, t: f64) -> f64 {
    2.0 * weight / tau * t * t * phi2_real(-t / tau)
}

/// Momentum variance accumulated from the force noise.
pub fn sigma_pp(model: &NoiseModel, t: f64) -> Result<f64> {
    check_time(t)?;
    let mut v = 2.0 * model.delta_noise * t;
    for m in &model.modes {
        v += exp_mode_variance(m.noise, m.corr_time, t);
    }
    if let Some(tab) = &model.tabulated {
        // exact for the piecewise-linear correlator
        let c = &tab.correlator;
        let end = t.min(tab.t_max());
        let mut acc = 0.0;
        for k in 0..c.len() - 1 {
            let u0 = k as f64 * tab.dt;
            if u0 >= end {
                break;
            }
            let u1 = (u0 + tab.dt).min(end);
            let slope = (c[k + 1] - c[k]) / tab.dt;
            let c0 = c[k];
            let h = u1 - u0;
            // ∫_{u0}^{u1} (t − u)(c0 + slope (u − u0)) du
            acc += c0 * ((t - u0) * h - 0.5 * h * h) + slope * ((t - u0) * h * h / 2.0 - h * h * h / 3.0);
        }
        v += 2.0 * acc;
    }
    Ok(v)
}

/// Same quantity by adaptive quadrature of `2∫₀ᵗ (t − u) C(u) du` for the
/// smooth part; used to validate the closed forms.
pub fn sigma_pp_quadrature(model: &NoiseModel, t: f64) -> Result<f64> {
    check_time(t)?;
    let mut breaks = vec![0.0];
    for m in &model.modes {
        for k in [1.0, 5.0, 20.0] {
            if k * m.corr_time < t {
                breaks.push(k * m.corr_time);
            }
        }
    }
    if let Some(tab) = &model.tabulated {
        let n = ((t.min(tab.t_max()) / tab.dt).floor() as usize).min(tab.correlator.len() - 1);
        breaks.extend((1..=n).map(|k| k as f64 * tab.dt));
    }
    breaks.push(t);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let q = Quadrature { rel_tol: 1e-12, abs_tol: 0.0, max_panels: 100_000 };
    let smooth = if t > 0.0 {
        q.integrate_breaks(|u| (t - u) * model.correlator_time(u).unwrap_or(0.0), &breaks)?
    } else {
        0.0
    };
    Ok(2.0 * model.delta_noise * t + 2.0 * smooth)
}

pub fn a_int(cat: &CatState, model: &NoiseModel, t: f64) -> Result<f64> {
    Ok(0.5 * cat.separation * cat.separation * sigma_pp(model, t)?)
}

pub fn a_int_quadrature(cat: &CatState, model: &NoiseModel, t: f64) -> Result<f64> {
    Ok(0.5 * cat.separation * cat.separation * sigma_pp_quadrature(model, t)?)
}

/// Splits terms with complex data into conjugate halves so that products of
/// two expansions are sums of plain complex exponentials.
fn conjugate_closed(e: &ModeExpansion) -> Vec<ExpTerm> {
    let mut out = vec![];
    for m in &e.terms {
        if m.amplitude.im == 0.0 && m.rate.im == 0.0 {
            out.push(*m);
        } else {
            out.push(ExpTerm { amplitude: 0.5 * m.amplitude, rate: m.rate });
            out.push(ExpTerm { amplitude: 0.5 * m.amplitude.conj(), rate: m.rate.conj() });
        }
    }
    out
}

/// `G(c) = ∫₀ᵗ (t − u) e^{−c u} du = t² φ₂(−c t)`.
fn g(c: Complex64, t: f64) -> Complex64 {
    t * t * phi2(-c * t)
}

/// `∫₀ᵗ (t − u) ∫₀ᵘ e^{−a(u−v)} e^{−b v} dv du`.
fn g_cross(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    if ((a - b) * t).norm() < 1e-4 {
        let c = 0.5 * (a + b);
        t * t * t * phi2_prime(-c * t)
    } else {
        -(g(a, t) - g(b, t)) / (a - b)
    }
}

/// Attenuation exponent from the friction kernel and the temperature kernel,
/// `A = d² ∫₀ᵗ dt' ∫₀^{t'} dt'' η(t' − t'') T(t'') (t − t')`, evaluated in
/// closed form for delta-plus-exponential representations.
pub fn a_int_via_temperature(cat: &CatState, eta: &ModeExpansion, temp: &ModeExpansion, t: f64) -> Result<f64> {
    check_time(t)?;
    let (ea, tb) = (conjugate_closed(eta), conjugate_closed(temp));
    let mut acc = Complex64::new(eta.delta * temp.delta * t, 0.0);
    for m in &tb {
        acc += eta.delta * m.amplitude * g(m.rate, t);
    }
    for m in &ea {
        acc += temp.delta * m.amplitude * g(m.rate, t);
    }
    for a in &ea {
        for b in &tb {
            acc += a.amplitude * b.amplitude * g_cross(a.rate, b.rate, t);
        }
    }
    Ok(cat.separation * cat.separation * acc.re)
}

/// Quadrature evaluation of the same double convolution for models whose
/// kernels are only available pointwise.
pub fn a_int_via_temperature_quadrature(
    cat: &CatState,
    model: &NoiseModel,
    temp: &EffectiveTemperature,
    t: f64,
) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let q = Quadrature { rel_tol: 1e-10, abs_tol: 1e-300, max_panels: 20_000 };
    let (ed, td) = (model.delta_friction, temp.delta_weight);
    let eta = |u: f64| model.friction_time(u).unwrap_or(0.0);
    let conv = |s: f64| -> Result<f64> {
        let inner = if s > 0.0 { q.integrate(|v| eta(s - v) * temp.smooth(v), 0.0, s)? } else { 0.0 };
        Ok(ed * temp.smooth(s) + td * eta(s) + inner)
    };
    let err = std::cell::Cell::new(None);
    let outer = q.integrate(
        |s| match conv(s) {
            Ok(v) => (t - s) * v,
            Err(e) => {
                err.set(Some(e));
                0.0
            }
        },
        0.0,
        t,
    )?;
    if let Some(e) = err.take() {
        return Err(e);
    }
    Ok(cat.separation * cat.separation * (ed * td * t + outer))
}

fn validate_grid(times: &[f64]) -> Result<()> {
    ensure(!times.is_empty() && times[0] == 0.0, || "time grid must start at 0".into())?;
    ensure(times.windows(2).all(|w| w[1] > w[0]), || "time grid must be strictly increasing".into())
}

pub fn contrast_curve(cat: &CatState, model: &NoiseModel, times: &[f64]) -> Result<ContrastCurve> {
    validate_grid(times)?;
    let a = times.iter().map(|&t| a_int(cat, model, t)).collect::<Result<Vec<_>>>()?;
    let method = if model.is_rational() { Method::ClosedForm } else { Method::Quadrature };
    Ok(ContrastCurve::from_exponents(times.to_vec(), a, method))
}

pub fn contrast_curve_quadrature(cat: &CatState, model: &NoiseModel, times: &[f64]) -> Result<ContrastCurve> {
    validate_grid(times)?;
    let a = times.iter().map(|&t| a_int_quadrature(cat, model, t)).collect::<Result<Vec<_>>>()?;
    Ok(ContrastCurve::from_exponents(times.to_vec(), a, Method::Quadrature))
}

/// Time at which `A_int = 1`.
pub fn coherence_time(cat: &CatState, model: &NoiseModel) -> Result<f64> {
    let d2 = cat.separation * cat.separation;
    if model.modes.is_empty() && model.tabulated.is_none() {
        if model.delta_noise <= 0.0 {
            return Err(Error::NoDecoherence);
        }
        return Ok(1.0 / (model.delta_noise * d2));
    }
    let f = |t: f64| a_int(cat, model, t).map(|a| a - 1.0);
    let slope = model.total_noise();
    let mut hi = if slope > 0.0 { 1.0 / (slope * d2) } else { 1.0 };
    let mut lo = 0.0;
    let mut found = false;
    for _ in 0..200 {
        if f(hi)? >= 0.0 {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found {
        return Err(Error::NoDecoherence);
    }
    while hi - lo > 1e-10 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
