use std::fs::File;
use std::path::Path;

use neqdeco::decoherence::{coherence_time, contrast_curve, contrast_curve_quadrature, CatState, ContrastCurve, Method};
use neqdeco::efftemp::{effective_temperature, EffectiveTemperature};
use neqdeco::kernels::{FieldSpec, NoiseModel};
use neqdeco::langevin::{embed, exact_exponents};
use neqdeco::trap::{
    calibrate_friction, fit_spectrum, force_spectrum_from_rate, heating_rate, power_spectrum_si, reconstruct_t_eff,
    synthesize_dataset, HeatingDataset,
};
use neqdeco::units::{Dimension, UnitSystem};
use neqdeco::wigner::{cat_wigner, evolve_fpe, peak_ratio, FpeOptions, GridSpec};
use serde::Serialize;

use crate::config::{Scenario, TrapPlan};
use crate::error::CliError;
use crate::output::OutputDir;

/// Contrast values below this are outside the decay window used in reports.
pub const DECAY_FLOOR: f64 = 0.05;

#[derive(Serialize)]
struct UnitsReport {
    time_unit_s: f64,
    length_unit_m: f64,
    mass_unit_kg: f64,
    temperature_unit_k: f64,
    force_noise_unit_n2s: f64,
}

impl UnitsReport {
    fn new(u: &UnitSystem) -> Self {
        UnitsReport {
            time_unit_s: u.time_s,
            length_unit_m: u.length_m,
            mass_unit_kg: u.scale(Dimension::Mass),
            temperature_unit_k: u.scale(Dimension::Temperature),
            force_noise_unit_n2s: u.scale(Dimension::ForceNoise),
        }
    }
}

pub fn curve_for(cat: &CatState, model: &NoiseModel, times: &[f64], method: Method) -> Result<ContrastCurve, CliError> {
    Ok(match method {
        Method::ClosedForm => contrast_curve(cat, model, times)?,
        Method::Quadrature => contrast_curve_quadrature(cat, model, times)?,
        Method::ExactGaussian => {
            let a = exact_exponents(cat, &embed(model)?, times)?;
            ContrastCurve::from_exponents(times.to_vec(), a, Method::ExactGaussian)
        }
        Method::GridPde => {
            neqdeco::wigner::grid_contrast_curve(cat, model, GridSpec::for_cat(cat), times, FpeOptions::default())?
        }
    })
}

fn contrast_columns(curves: &[ContrastCurve]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["t".to_string()];
    let mut cols = vec![curves[0].times.clone()];
    for c in curves {
        header.push(format!("a_int_{}", c.method.label()));
        cols.push(c.a_int.clone());
        header.push(format!("contrast_{}", c.method.label()));
        cols.push(c.contrast.clone());
    }
    (header, cols)
}

#[derive(Serialize)]
struct ContrastReport {
    methods: Vec<&'static str>,
    /// Closed-form coherence time, reduced units; absent if A_int stays below 1.
    coherence_time: Option<f64>,
    units: UnitsReport,
}

pub fn contrast(sc: &Scenario, out: &mut OutputDir, methods: Option<&[Method]>) -> Result<Vec<ContrastCurve>, CliError> {
    let cat = sc.require_cat()?;
    let run = sc.require_run()?;
    let methods = methods.unwrap_or(&run.methods);
    let model = sc.model()?;
    let curves = methods.iter().map(|m| curve_for(&cat, &model, &run.times, *m)).collect::<Result<Vec<_>, _>>()?;
    let (header, cols) = contrast_columns(&curves);
    out.csv("contrast.csv", &header, &cols)?;
    let tc = match coherence_time(&cat, &model) {
        Ok(t) => Some(t),
        Err(neqdeco::Error::NoDecoherence) => None,
        Err(e) => return Err(e.into()),
    };
    out.report(
        "contrast.toml",
        &ContrastReport { methods: methods.iter().map(|m| m.label()).collect(), coherence_time: tc, units: UnitsReport::new(&sc.units) },
    )?;
    Ok(curves)
}

#[derive(Serialize)]
struct ModeReport {
    cos_amplitude: f64,
    sin_amplitude: f64,
    decay_rate: f64,
    frequency: f64,
}

#[derive(Serialize)]
struct EffTempReport {
    provenance: String,
    /// T_eff(0): the delta weight of T(t).
    t_eff_initial: f64,
    t_eff_asymptote: f64,
    modes: Vec<ModeReport>,
    units: UnitsReport,
}

pub fn efftemp(sc: &Scenario, out: &mut OutputDir) -> Result<EffectiveTemperature, CliError> {
    let run = sc.require_run()?;
    let temp = effective_temperature(&sc.model()?)?;
    let values = run.times.iter().map(|t| temp.t_eff(*t)).collect::<Result<Vec<_>, _>>()?;
    out.csv("teff.csv", &["t".into(), "t_eff".into()], &[run.times.clone(), values])?;
    out.report(
        "teff.toml",
        &EffTempReport {
            provenance: format!("{:?}", temp.provenance),
            t_eff_initial: temp.delta_weight,
            t_eff_asymptote: temp.asymptote,
            modes: temp
                .modes
                .iter()
                .map(|m| ModeReport {
                    cos_amplitude: m.cos_amplitude,
                    sin_amplitude: m.sin_amplitude,
                    decay_rate: m.decay_rate,
                    frequency: m.frequency,
                })
                .collect(),
            units: UnitsReport::new(&sc.units),
        },
    )?;
    Ok(temp)
}

/// Grid-solver contrast plus a snapshot of the final Wigner function.
pub fn wigner(sc: &Scenario, out: &mut OutputDir) -> Result<ContrastCurve, CliError> {
    let cat = sc.require_cat()?;
    let run = sc.require_run()?;
    let model = sc.model()?;
    let init = cat_wigner(&cat, GridSpec::for_cat(&cat))?;
    let snaps = evolve_fpe(&init, &model, &run.times[1..], FpeOptions::default())?;
    let mut a = vec![-peak_ratio(&init)?.ln()];
    for s in &snaps {
        a.push(-peak_ratio(s)?.ln());
    }
    let curve = ContrastCurve::from_exponents(run.times.clone(), a, Method::GridPde);
    let (header, cols) = contrast_columns(std::slice::from_ref(&curve));
    out.csv("contrast.csv", &header, &cols)?;
    let last = snaps.last().unwrap_or(&init);
    let file = File::create(out.path("wigner.csv"))?;
    last.write_csv(std::io::BufWriter::new(file))?;
    Ok(curve)
}

#[derive(Serialize)]
struct PairReport {
    a: &'static str,
    b: &'static str,
    max_abs_log_deviation: f64,
    rms_log_deviation: f64,
    max_rel_contrast_deviation: f64,
}

#[derive(Serialize)]
struct CompareReport {
    pairs: Vec<PairReport>,
}

pub fn compare(sc: &Scenario, out: &mut OutputDir) -> Result<(), CliError> {
    let run = sc.require_run()?;
    if run.methods.len() < 2 {
        return Err(CliError::config("run.methods", "compare needs at least two methods"));
    }
    let curves = contrast(sc, out, None)?;
    let mut pairs = vec![];
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let (a, b) = (&curves[i], &curves[j]);
            let dev: Vec<f64> = a.a_int.iter().zip(&b.a_int).map(|(x, y)| (x - y).abs()).collect();
            let rel = a.contrast.iter().zip(&b.contrast).map(|(x, y)| if *y > 0.0 { (x - y).abs() / y } else { 0.0 });
            pairs.push(PairReport {
                a: a.method.label(),
                b: b.method.label(),
                max_abs_log_deviation: dev.iter().cloned().fold(0.0, f64::max),
                rms_log_deviation: (dev.iter().map(|d| d * d).sum::<f64>() / dev.len() as f64).sqrt(),
                max_rel_contrast_deviation: rel.fold(0.0, f64::max),
            });
        }
    }
    out.report("compare.toml", &CompareReport { pairs })
}

fn trap_datasets(sc: &Scenario, trap: &TrapPlan) -> Result<(HeatingDataset, HeatingDataset), CliError> {
    let ambient = synthesize_dataset(&sc.ambient_model()?, &sc.units, &trap.ion, &trap.frequencies, trap.rel_noise, trap.seed)?;
    let full = synthesize_dataset(
        &sc.model()?,
        &sc.units,
        &trap.ion,
        &trap.frequencies,
        trap.rel_noise,
        trap.seed.wrapping_add(1),
    )?;
    Ok((ambient, full))
}

fn write_dataset(out: &mut OutputDir, name: &str, data: &HeatingDataset) -> Result<(), CliError> {
    let mut buf = vec![];
    data.write_csv(&mut buf)?;
    out.raw(name, &buf)
}

/// Synthetic heating-rate measurements: ambient-only and with fields.
pub fn heating(sc: &Scenario, out: &mut OutputDir) -> Result<(), CliError> {
    let trap = sc.require_trap()?;
    let (ambient, full) = trap_datasets(sc, trap)?;
    write_dataset(out, "ambient.csv", &ambient)?;
    write_dataset(out, "heating.csv", &full)?;
    let model = sc.model()?;
    let s: Vec<f64> = trap.frequencies.iter().map(|w| power_spectrum_si(&model, &sc.units, *w)).collect();
    let ndot = trap
        .frequencies
        .iter()
        .zip(&s)
        .map(|(w, s)| heating_rate(&trap.ion, *s, *w))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "spectrum.csv",
        &["omega_rad_s".into(), "s_force_n2s".into(), "ndot_quanta_s".into()],
        &[trap.frequencies.clone(), s, ndot],
    )
}

#[derive(Serialize)]
struct ComponentReport {
    amplitude_n2s: f64,
    corr_time_s: f64,
}

#[derive(Serialize)]
struct FitReport {
    eta_kg_s: f64,
    eta_std_error_kg_s: f64,
    calibration_reduced_chi2: f64,
    ambient_temperature_k: f64,
    constant_n2s: f64,
    components: Vec<ComponentReport>,
    chi2: f64,
    residual_norm: f64,
    dof: usize,
    aicc: f64,
    covariance_order: Vec<String>,
    /// Units follow `covariance_order`: N²s for a and b_j, s for τ_j.
    covariance: Vec<Vec<f64>>,
    t_eff_initial_k: f64,
    t_eff_asymptote_k: f64,
}

/// Calibrate, fit and reconstruct. Datasets come from files when given and
/// are synthesized from the scenario otherwise.
pub fn invert(sc: &Scenario, out: &mut OutputDir, ambient: Option<&Path>, data: Option<&Path>) -> Result<(), CliError> {
    let trap = sc.require_trap()?;
    let read = |p: &Path| -> Result<HeatingDataset, CliError> {
        let f = File::open(p).map_err(|e| CliError::config(&p.display().to_string(), e.to_string()))?;
        HeatingDataset::read_csv(f).map_err(|e| CliError::config(&p.display().to_string(), e.to_string()))
    };
    let (amb, full) = match (ambient, data) {
        (Some(a), Some(d)) => (read(a)?, read(d)?),
        (None, None) => trap_datasets(sc, trap)?,
        _ => return Err(CliError::config("invert", "give both --ambient and --data, or neither")),
    };
    let cal = calibrate_friction(&amb, &trap.ion, trap.ambient_temperature)?;
    let fit = fit_spectrum(&full, &trap.ion, trap.max_components)?;
    let rec = reconstruct_t_eff(&fit, cal.eta, cal.std_error)?;

    let slowest = fit.components.iter().map(|c| c.corr_time).fold(0.0, f64::max);
    let window = trap.window.unwrap_or(if slowest > 0.0 { 5.0 * slowest } else { 1.0 / trap.ion.omega_min });
    let n = 200;
    let times: Vec<f64> = (0..=n).map(|k| window * k as f64 / n as f64).collect();
    let mut header = vec!["t_s".to_string(), "t_eff_k".into(), "uncertainty_k".into()];
    let mut cols = vec![
        times.clone(),
        times.iter().map(|t| rec.t_eff(*t)).collect(),
        times.iter().map(|t| rec.uncertainty(*t)).collect(),
    ];
    // scenario truth, available when the environment has a rational form
    let truth = effective_temperature(&sc.model()?).ok();
    if let Some(temp) = &truth {
        header.push("model_k".into());
        cols.push(
            times
                .iter()
                .map(|t| {
                    let v = temp.t_eff(sc.units.to_reduced(*t, Dimension::Time))?;
                    Ok(sc.units.to_si(v, Dimension::Temperature))
                })
                .collect::<Result<Vec<_>, neqdeco::Error>>()?,
        );
    }
    out.csv("teff.csv", &header, &cols)?;

    let omega: Vec<f64> = full.points().iter().map(|p| p.omega).collect();
    let measured: Vec<f64> = full.points().iter().map(|p| force_spectrum_from_rate(&trap.ion, p.ndot, p.omega)).collect();
    let fitted: Vec<f64> = omega.iter().map(|w| fit.eval(*w)).collect();
    out.csv(
        "spectrum.csv",
        &["omega_rad_s".into(), "s_measured_n2s".into(), "s_fit_n2s".into()],
        &[omega, measured, fitted],
    )?;

    let mut order = vec!["a".to_string()];
    for j in 1..=fit.components.len() {
        order.push(format!("b{j}"));
        order.push(format!("tau{j}"));
    }
    let p = fit.covariance.nrows();
    let report = FitReport {
        eta_kg_s: cal.eta,
        eta_std_error_kg_s: cal.std_error,
        calibration_reduced_chi2: cal.reduced_chi2,
        ambient_temperature_k: trap.ambient_temperature,
        constant_n2s: fit.constant,
        components: fit
            .components
            .iter()
            .map(|c| ComponentReport { amplitude_n2s: c.amplitude, corr_time_s: c.corr_time })
            .collect(),
        chi2: fit.chi2,
        residual_norm: fit.residual_norm,
        dof: fit.dof,
        aicc: fit.aicc,
        covariance_order: order,
        covariance: (0..p).map(|r| (0..p).map(|c| fit.covariance[(r, c)]).collect()).collect(),
        t_eff_initial_k: rec.temperature.delta_weight,
        t_eff_asymptote_k: rec.temperature.asymptote,
    };
    out.report("fit_report.toml", &report)
}

#[derive(Serialize)]
struct VariantReport {
    name: &'static str,
    white_force_weight: f64,
    colored_force_weight: f64,
    coherence_time: f64,
    t_eff_initial: f64,
    t_eff_asymptote: f64,
    /// Max |exact − closed form| / closed form over the decay window.
    max_rel_exact_deviation: f64,
}

#[derive(Serialize)]
struct Fig2Report {
    decay_floor: f64,
    variants: Vec<VariantReport>,
    units: UnitsReport,
}

/// The two-field scenario with its amplitudes as given, swapped, and
/// replaced by their mean.
pub fn fig2_variants(sc: &Scenario) -> Result<Vec<(&'static str, Vec<FieldSpec>)>, CliError> {
    let white = sc.fields.iter().filter(|f| f.corr_time.is_none()).collect::<Vec<_>>();
    let colored = sc.fields.iter().filter(|f| f.corr_time.is_some()).collect::<Vec<_>>();
    if white.len() != 1 || colored.len() != 1 {
        return Err(CliError::config("environment", "fig2 needs exactly one white_field and one colored_field"));
    }
    let (w1, w2, tau) = (white[0].weight, colored[0].weight, colored[0].corr_time.unwrap());
    let mean = 0.5 * (w1 + w2);
    Ok(vec![
        ("fast_hot", vec![FieldSpec::white(w1), FieldSpec::colored(w2, tau)]),
        ("fast_cold", vec![FieldSpec::white(w2), FieldSpec::colored(w1, tau)]),
        ("equal", vec![FieldSpec::white(mean), FieldSpec::colored(mean, tau)]),
    ])
}

pub fn fig2(sc: &Scenario, out: &mut OutputDir) -> Result<(), CliError> {
    let cat = sc.require_cat()?;
    let run = sc.require_run()?;
    let ambient = sc.ambient_model()?;
    let mut c_header = vec!["t".to_string()];
    let mut c_cols = vec![run.times.clone()];
    let mut t_header = vec!["t".to_string()];
    let mut t_cols = vec![run.times.clone()];
    let mut variants = vec![];
    for (name, fields) in fig2_variants(sc)? {
        let model = ambient.clone().with_fields(&fields)?;
        let closed = contrast_curve(&cat, &model, &run.times)?;
        let exact = curve_for(&cat, &model, &run.times, Method::ExactGaussian)?;
        let temp = effective_temperature(&model)?;
        let dev = closed
            .contrast
            .iter()
            .zip(&exact.contrast)
            .filter(|(c, _)| **c >= DECAY_FLOOR)
            .map(|(c, e)| (e - c).abs() / c)
            .fold(0.0, f64::max);
        c_header.push(format!("contrast_closed_form_{name}"));
        c_cols.push(closed.contrast);
        c_header.push(format!("contrast_exact_{name}"));
        c_cols.push(exact.contrast);
        t_header.push(format!("t_eff_{name}"));
        t_cols.push(run.times.iter().map(|t| temp.t_eff(*t)).collect::<Result<Vec<_>, _>>()?);
        variants.push(VariantReport {
            name,
            white_force_weight: fields[0].weight,
            colored_force_weight: fields[1].weight,
            coherence_time: coherence_time(&cat, &model)?,
            t_eff_initial: temp.delta_weight,
            t_eff_asymptote: temp.asymptote,
            max_rel_exact_deviation: dev,
        });
    }
    out.csv("contrast.csv", &c_header, &c_cols)?;
    out.csv("teff.csv", &t_header, &t_cols)?;
    out.report("fig2.toml", &Fig2Report { decay_floor: DECAY_FLOOR, variants, units: UnitsReport::new(&sc.units) })
}

/// Everything the scenario has blocks for.
pub fn run_all(sc: &Scenario, out: &mut OutputDir) -> Result<(), CliError> {
    if sc.cat.is_some() && sc.run.is_some() {
        contrast(sc, out, None)?;
    }
    if sc.run.is_some() {
        efftemp(sc, out)?;
    }
    if sc.trap.is_some() {
        invert(sc, out, None, None)?;
    }
    Ok(())
}
