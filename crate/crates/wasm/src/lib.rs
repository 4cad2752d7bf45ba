//! wasm-bindgen bindings for the demo page in `www/`.
//!
//! The two-reservoir model is a fast (delta) bath at `t_f` with friction
//! `eta_f` and a slow exponential bath at `t_s`, `eta_s`, memory time `tau`,
//! acting on a unit-mass oscillator with unit frequency. Everything is in
//! reduced units, ħ = k_B = 1.

use neqdeco::decoherence::{contrast_curve, CatState};
use neqdeco::efftemp::effective_temperature;
use neqdeco::kernels::{FieldSpec, NoiseModel, ReservoirSpec, System};
use neqdeco::langevin::{embed, exact_exponents};
use neqdeco::trap::{heating_rate, log_spaced, power_spectrum_si, IonSpec};
use neqdeco::units::{Dimension, UnitSystem, AMU, ELEMENTARY_CHARGE};
use wasm_bindgen::prelude::*;

type Res<T> = Result<T, String>;

fn model(eta_f: f64, t_f: f64, eta_s: f64, t_s: f64, tau: f64) -> Res<NoiseModel> {
    let sys = System::new(1.0, 1.0).map_err(|e| e.to_string())?;
    NoiseModel::compose(&[ReservoirSpec::delta(eta_f, t_f), ReservoirSpec::exponential(eta_s, tau, t_s)], sys)
        .map_err(|e| e.to_string())
}

fn grid(t_max: f64, n: usize) -> Res<Vec<f64>> {
    if t_max.is_nan() || t_max <= 0.0 || !(2..=100_000).contains(&n) {
        return Err("need t_max > 0 and 2 <= n <= 100000".into());
    }
    Ok((0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect())
}

pub fn t_eff_curve_impl(eta_f: f64, t_f: f64, eta_s: f64, t_s: f64, tau: f64, t_max: f64, n: usize) -> Res<Vec<f64>> {
    let temp = effective_temperature(&model(eta_f, t_f, eta_s, t_s, tau)?).map_err(|e| e.to_string())?;
    grid(t_max, n)?.iter().map(|t| temp.t_eff(*t).map_err(|e| e.to_string())).collect()
}

/// Closed-form contrast followed by the exact Gaussian contrast, `2n` values.
#[allow(clippy::too_many_arguments)]
pub fn contrast_impl(
    eta_f: f64,
    t_f: f64,
    eta_s: f64,
    t_s: f64,
    tau: f64,
    separation: f64,
    width: f64,
    t_max: f64,
    n: usize,
) -> Res<Vec<f64>> {
    let m = model(eta_f, t_f, eta_s, t_s, tau)?;
    let cat = CatState::new(separation, width, 1.0, 1.0).map_err(|e| e.to_string())?;
    let times = grid(t_max, n)?;
    let mut out = contrast_curve(&cat, &m, &times).map_err(|e| e.to_string())?.contrast;
    let sys = embed(&m).map_err(|e| e.to_string())?;
    let a = exact_exponents(&cat, &sys, &times).map_err(|e| e.to_string())?;
    out.extend(a.iter().map(|a| (-a).exp()));
    Ok(out)
}

/// Heating rates (quanta/s) of a ⁴⁰Ca⁺ ion over 1–100 MHz for a room-temperature
/// ambient plus white and colored field noise (V²m⁻²s, correlation time in ns).
/// Returns trap frequencies in MHz followed by the rates.
pub fn heating_impl(eta: f64, white: f64, colored: f64, tau_ns: f64, n: usize) -> Res<Vec<f64>> {
    if !(2..=2000).contains(&n) {
        return Err("need 2 <= n <= 2000".into());
    }
    let u = UnitSystem::default();
    let tau = u.to_reduced(tau_ns * 1e-9, Dimension::Time);
    let ion = IonSpec::new(40.0 * AMU, ELEMENTARY_CHARGE, 2e6 * std::f64::consts::PI, 2e8 * std::f64::consts::PI)
        .map_err(|e| e.to_string())?;
    let sys = System::new(u.to_reduced(ion.mass, Dimension::Mass), 1.0).map_err(|e| e.to_string())?;
    let q2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    let force = |w: f64| u.to_reduced(q2 * w, Dimension::ForceNoise);
    let m = NoiseModel::compose(
        &[ReservoirSpec::delta(u.to_reduced(eta, Dimension::Friction), u.to_reduced(300.0, Dimension::Temperature))],
        sys,
    )
    .and_then(|m| m.with_fields(&[FieldSpec::white(force(white)), FieldSpec::colored(force(colored), tau)]))
    .map_err(|e| e.to_string())?;
    let omega = log_spaced(ion.omega_min, ion.omega_max, n);
    let mut out: Vec<f64> = omega.iter().map(|w| w / (2e6 * std::f64::consts::PI)).collect();
    for w in &omega {
        out.push(heating_rate(&ion, power_spectrum_si(&m, &u, *w), *w).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn js<T>(r: Res<T>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn t_eff_curve(eta_f: f64, t_f: f64, eta_s: f64, t_s: f64, tau: f64, t_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(t_eff_curve_impl(eta_f, t_f, eta_s, t_s, tau, t_max, n))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn contrast(
    eta_f: f64,
    t_f: f64,
    eta_s: f64,
    t_s: f64,
    tau: f64,
    separation: f64,
    width: f64,
    t_max: f64,
    n: usize,
) -> Result<Vec<f64>, JsError> {
    js(contrast_impl(eta_f, t_f, eta_s, t_s, tau, separation, width, t_max, n))
}

#[wasm_bindgen]
pub fn heating_spectrum(eta: f64, white: f64, colored: f64, tau_ns: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(heating_impl(eta, white, colored, tau_ns, n))
}
