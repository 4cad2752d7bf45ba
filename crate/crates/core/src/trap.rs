//! Heating-rate spectroscopy of a trapped ion.
//!
//! The force spectrum of a [`NoiseModel`] sets the motional heating rate
//! `ṅ = S_F(ω)/(4mħω)`. Measuring ṅ across trap frequencies first calibrates
//! the ambient friction and then yields the correlator of the engineered
//! fields, from which the effective temperature follows.
//!
//! Everything in this module is SI except [`power_spectrum`], which works on
//! a reduced-unit model like the rest of the crate.

use std::io::{Read, Write};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{DMatrix, DVector, Dyn, Owned};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::efftemp::{EffectiveTemperature, Provenance as TempProvenance, TemperatureMode};
use crate::error::{ensure, Error, Result};
use crate::kernels::NoiseModel;
use crate::units::{Dimension, UnitSystem, HBAR, K_B};

pub const DATASET_HEADER: [&str; 3] = ["omega_rad_s", "ndot_quanta_s", "rel_uncertainty"];

/// Fitted τ closer than this relative gap are reported as degenerate.
const DEGENERATE_GAP: f64 = 0.05;
const TAU_SEEDS: usize = 8;
const MAX_COMPONENTS: usize = 3;
/// Uncertainty recorded for noiseless synthetic data, which must stay positive.
const NOISELESS_UNCERTAINTY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpec {
    pub mass: f64,
    pub charge: f64,
    pub omega_min: f64,
    pub omega_max: f64,
}

impl IonSpec {
    pub fn new(mass: f64, charge: f64, omega_min: f64, omega_max: f64) -> Result<Self> {
        ensure(mass > 0.0 && mass.is_finite(), || format!("ion mass {mass} must be > 0"))?;
        ensure(charge != 0.0 && charge.is_finite(), || "ion charge must be nonzero".into())?;
        ensure(0.0 < omega_min && omega_min < omega_max && omega_max.is_finite(), || {
            format!("trap range [{omega_min}, {omega_max}] must satisfy 0 < min < max")
        })?;
        Ok(IonSpec { mass, charge, omega_min, omega_max })
    }

    fn contains(&self, omega: f64) -> bool {
        let slack = 1e-12 * self.omega_max;
        omega >= self.omega_min - slack && omega <= self.omega_max + slack
    }
}

/// Two-sided force spectrum `S(ω) = ∫ e^{iωt} C(|t|) dt` of a reduced-unit model.
///
/// The delta part contributes `2c_δ`, each exponential mode `2w/(1+ω²τ²)` and
/// a tabulated reservoir at temperature T contributes `2T J(ω)/(mω)`.
pub fn power_spectrum(model: &NoiseModel, omega: f64) -> f64 {
    let w = omega.abs();
    let mut s = 2.0 * model.delta_noise;
    for m in &model.modes {
        s += 2.0 * m.noise / (1.0 + (w * m.corr_time).powi(2));
    }
    if let Some(tab) = &model.tabulated {
        for (table, temp) in &tab.sources {
            s += 2.0 * temp * table.value_over_omega(w) / model.system.mass;
        }
    }
    s
}

/// Force spectrum in N²·s at an SI angular frequency.
pub fn power_spectrum_si(model: &NoiseModel, units: &UnitSystem, omega_si: f64) -> f64 {
    let w = units.to_reduced(omega_si, Dimension::Rate);
    units.to_si(power_spectrum(model, w), Dimension::ForceNoise)
}

/// Force spectrum `e²S_E` produced by a field spectrum `S_E` (V²m⁻²s).
pub fn field_to_force_spectrum(charge: f64, field_spectrum: f64) -> f64 {
    charge * charge * field_spectrum
}

/// Heating rate in quanta/s for a force spectrum value `s_force` (N²·s).
pub fn heating_rate(ion: &IonSpec, s_force: f64, omega: f64) -> Result<f64> {
    if !ion.contains(omega) {
        return Err(Error::FrequencyOutOfRange(omega));
    }
    ensure(s_force >= 0.0, || format!("force spectrum {s_force} must be >= 0"))?;
    Ok(s_force / (4.0 * ion.mass * HBAR * omega))
}

/// Force spectrum recovered from a measured heating rate.
pub fn force_spectrum_from_rate(ion: &IonSpec, ndot: f64, omega: f64) -> f64 {
    4.0 * ion.mass * HBAR * omega * ndot
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetProvenance {
    Synthetic(u64),
    External,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingPoint {
    pub omega: f64,
    pub ndot: f64,
    pub rel_uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatingDataset {
    points: Vec<HeatingPoint>,
    pub provenance: DatasetProvenance,
}

impl HeatingDataset {
    pub fn new(points: Vec<HeatingPoint>, provenance: DatasetProvenance) -> Result<Self> {
        ensure(!points.is_empty(), || "heating dataset is empty".into())?;
        for (i, p) in points.iter().enumerate() {
            ensure(p.omega > 0.0 && p.omega.is_finite(), || format!("row {i}: omega must be > 0"))?;
            ensure(p.ndot > 0.0 && p.ndot.is_finite(), || format!("row {i}: heating rate must be > 0"))?;
            ensure(p.rel_uncertainty > 0.0 && p.rel_uncertainty.is_finite(), || {
                format!("row {i}: relative uncertainty must be > 0")
            })?;
            if i > 0 {
                ensure(p.omega > points[i - 1].omega, || format!("row {i}: omega not strictly increasing"))?;
            }
        }
        Ok(HeatingDataset { points, provenance })
    }

    pub fn points(&self) -> &[HeatingPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Force spectrum samples `S_i = 4mħω_iṅ_i` and their absolute errors.
    pub fn force_spectrum(&self, ion: &IonSpec) -> (Vec<f64>, Vec<f64>) {
        self.points
            .iter()
            .map(|p| {
                let s = force_spectrum_from_rate(ion, p.ndot, p.omega);
                (s, s * p.rel_uncertainty)
            })
            .unzip()
    }

    /// CSV with a `# provenance:` comment line ahead of the header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: std::io::Error| Error::InvalidParameter(format!("writing dataset: {e}"));
        let mut out = out;
        let tag = match self.provenance {
            DatasetProvenance::Synthetic(seed) => format!("synthetic seed={seed}"),
            DatasetProvenance::External => "external".to_string(),
        };
        writeln!(out, "# provenance: {tag}").map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::InvalidParameter(format!("writing dataset: {e}"));
        w.write_record(DATASET_HEADER).map_err(csv_err)?;
        for p in &self.points {
            w.write_record([format!("{:e}", p.omega), format!("{:e}", p.ndot), format!("{:e}", p.rel_uncertainty)])
                .map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input
            .read_to_string(&mut text)
            .map_err(|e| Error::InvalidParameter(format!("reading dataset: {e}")))?;
        let mut provenance = DatasetProvenance::External;
        for line in text.lines().filter(|l| l.trim_start().starts_with('#')) {
            if let Some(seed) = line.split("synthetic seed=").nth(1) {
                if let Ok(seed) = seed.trim().parse() {
                    provenance = DatasetProvenance::Synthetic(seed);
                }
            }
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        let header = r.headers().map_err(|e| Error::InvalidParameter(format!("dataset header: {e}")))?;
        ensure(header.iter().eq(DATASET_HEADER), || {
            format!("dataset header must be `{}`", DATASET_HEADER.join(","))
        })?;
        let mut points = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::InvalidParameter(format!("dataset row {i}: {e}")))?;
            let field = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::InvalidParameter(format!("dataset row {i}: bad column {}", DATASET_HEADER[k])))
            };
            points.push(HeatingPoint { omega: field(0)?, ndot: field(1)?, rel_uncertainty: field(2)? });
        }
        HeatingDataset::new(points, provenance)
    }
}

/// `n` log-spaced angular frequencies spanning `[lo, hi]` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Simulated heating-rate measurement of a reduced-unit model.
///
/// Each rate is multiplied by `1 + rel_noise·g` with g standard normal from a
/// ChaCha8 stream seeded by `seed`; draws above +10 are clipped and draws that
/// would make the rate nonpositive are redrawn.
pub fn synthesize_dataset(
    model: &NoiseModel,
    units: &UnitSystem,
    ion: &IonSpec,
    frequencies: &[f64],
    rel_noise: f64,
    seed: u64,
) -> Result<HeatingDataset> {
    ensure((0.0..=0.5).contains(&rel_noise), || format!("relative noise {rel_noise} must lie in [0, 0.5]"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(frequencies.len());
    for &w in frequencies {
        let exact = heating_rate(ion, power_spectrum_si(model, units, w), w)?;
        let ndot = loop {
            let g: f64 = StandardNormal.sample(&mut rng);
            let factor = 1.0 + rel_noise * g.min(10.0);
            if factor > 0.0 {
                break exact * factor;
            }
        };
        points.push(HeatingPoint { omega: w, ndot, rel_uncertainty: rel_noise.max(NOISELESS_UNCERTAINTY) });
    }
    HeatingDataset::new(points, DatasetProvenance::Synthetic(seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionCalibration {
    /// Friction coefficient, kg/s.
    pub eta: f64,
    pub std_error: f64,
    pub reduced_chi2: f64,
    /// Weighted mean force spectrum, N²·s.
    pub spectrum: f64,
}

/// Ambient friction from a flat heating spectrum `S = 2ηk_BT`.
pub fn calibrate_friction(dataset: &HeatingDataset, ion: &IonSpec, t_ambient: f64) -> Result<FrictionCalibration> {
    ensure(t_ambient > 0.0 && t_ambient.is_finite(), || format!("ambient temperature {t_ambient} must be > 0"))?;
    let (s, err) = dataset.force_spectrum(ion);
    let (mut sw, mut swx) = (0.0, 0.0);
    for (x, e) in s.iter().zip(&err) {
        let w = 1.0 / (e * e);
        sw += w;
        swx += w * x;
    }
    let mean = swx / sw;
    let chi2: f64 = s.iter().zip(&err).map(|(x, e)| ((x - mean) / e).powi(2)).sum();
    let reduced = if s.len() > 1 { chi2 / (s.len() - 1) as f64 } else { 0.0 };
    if reduced > 5.0 {
        return Err(Error::InconsistentFlatness(reduced));
    }
    let scale = 2.0 * K_B * t_ambient;
    Ok(FrictionCalibration { eta: mean / scale, std_error: sw.powf(-0.5) / scale, reduced_chi2: reduced, spectrum: mean })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lorentzian {
    /// Noise weight, N²·s.
    pub amplitude: f64,
    /// Correlation time, s.
    pub corr_time: f64,
}

/// Fitted force spectrum `S(ω) = 2a + Σ_j 2b_j/(1+ω²τ_j²)`, i.e. the
/// correlator `C(t) = a δ(t) + Σ_j (b_j/τ_j) e^{−|t|/τ_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumFit {
    /// Delta weight a, N²·s.
    pub constant: f64,
    /// Sorted by increasing correlation time.
    pub components: Vec<Lorentzian>,
    pub chi2: f64,
    pub residual_norm: f64,
    pub dof: usize,
    pub aicc: f64,
    /// Covariance of (a, b_1, τ_1, b_2, τ_2, ...).
    pub covariance: DMatrix<f64>,
}

impl SpectrumFit {
    pub fn eval(&self, omega: f64) -> f64 {
        2.0 * self.constant
            + self.components.iter().map(|c| 2.0 * c.amplitude / (1.0 + (omega * c.corr_time).powi(2))).sum::<f64>()
    }

    pub fn num_params(&self) -> usize {
        1 + 2 * self.components.len()
    }

    /// Smooth part of the fitted correlator at t ≥ 0.
    pub fn correlator(&self, t: f64) -> f64 {
        self.components.iter().map(|c| c.amplitude / c.corr_time * (-t / c.corr_time).exp()).sum()
    }
}

/// Residuals of the spectrum model in log-parameters on normalized axes.
struct SpectrumProblem<'a> {
    omega: &'a [f64],
    s: &'a [f64],
    sigma: &'a [f64],
    theta: DVector<f64>,
}

impl SpectrumProblem<'_> {
    fn k(&self) -> usize {
        (self.theta.len() - 1) / 2
    }

    fn model(&self, w: f64) -> f64 {
        let mut v = 2.0 * self.theta[0].exp();
        for j in 0..self.k() {
            let (b, tau) = (self.theta[1 + 2 * j].exp(), self.theta[2 + 2 * j].exp());
            v += 2.0 * b / (1.0 + (w * tau).powi(2));
        }
        v
    }

    fn chi2(&self) -> f64 {
        self.residual_vec().norm_squared()
    }

    fn residual_vec(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.omega.len(),
            (0..self.omega.len()).map(|i| (self.model(self.omega[i]) - self.s[i]) / self.sigma[i]),
        )
    }

    fn jacobian_mat(&self) -> DMatrix<f64> {
        let n = self.omega.len();
        let mut jac = DMatrix::zeros(n, self.theta.len());
        for i in 0..n {
            let w = self.omega[i];
            let inv = 1.0 / self.sigma[i];
            jac[(i, 0)] = 2.0 * self.theta[0].exp() * inv;
            for j in 0..self.k() {
                let (b, tau) = (self.theta[1 + 2 * j].exp(), self.theta[2 + 2 * j].exp());
                let x = (w * tau).powi(2);
                let l = 1.0 / (1.0 + x);
                jac[(i, 1 + 2 * j)] = 2.0 * b * l * inv;
                jac[(i, 2 + 2 * j)] = -4.0 * b * x * l * l * inv;
            }
        }
        jac
    }
}

impl LeastSquaresProblem<f64, Dyn, Dyn> for SpectrumProblem<'_> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.theta.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.theta.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let r = self.residual_vec();
        r.iter().all(|v| v.is_finite()).then_some(r)
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        let j = self.jacobian_mat();
        j.iter().all(|v| v.is_finite()).then_some(j)
    }
}

/// Weighted linear least squares for (a, b_j) at fixed τ_j; amplitudes are
/// floored to keep their logarithms finite.
fn linear_amplitudes(omega: &[f64], s: &[f64], sigma: &[f64], taus: &[f64]) -> Option<Vec<f64>> {
    let n = omega.len();
    let p = 1 + taus.len();
    let mut a = DMatrix::zeros(n, p);
    let mut y = DVector::zeros(n);
    for i in 0..n {
        a[(i, 0)] = 2.0 / sigma[i];
        for (j, tau) in taus.iter().enumerate() {
            a[(i, 1 + j)] = 2.0 / (1.0 + (omega[i] * tau).powi(2)) / sigma[i];
        }
        y[i] = s[i] / sigma[i];
    }
    let x = a.svd(true, true).solve(&y, 1e-14).ok()?;
    let floor = 1e-6 * s.iter().cloned().fold(0.0, f64::max);
    Some(x.iter().map(|v| v.max(floor)).collect())
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn aicc(chi2: f64, n: usize, p: usize) -> Option<f64> {
    (n > p + 1).then(|| chi2 + 2.0 * p as f64 + 2.0 * (p * (p + 1)) as f64 / (n - p - 1) as f64)
}

/// Fit with exactly `k` Lorentzian components.
pub fn fit_spectrum_fixed(dataset: &HeatingDataset, ion: &IonSpec, k: usize) -> Result<SpectrumFit> {
    ensure(k <= MAX_COMPONENTS, || format!("at most {MAX_COMPONENTS} Lorentzian components"))?;
    let pts = dataset.points();
    let n = pts.len();
    let p = 1 + 2 * k;
    let (w_lo, w_hi) = (pts[0].omega, pts[n - 1].omega);
    ensure(w_hi / w_lo >= 10.0 * (1.0 - 1e-12), || "dataset must cover at least one decade in frequency".into())?;
    ensure(n > p + 1, || format!("{n} points are too few for {k} components"))?;

    // normalized axes keep the parameters O(1)
    let w_ref = (w_lo * w_hi).sqrt();
    let (s_si, e_si) = dataset.force_spectrum(ion);
    let mut sorted = s_si.clone();
    sorted.sort_by(f64::total_cmp);
    let s_ref = sorted[n / 2];
    let omega: Vec<f64> = pts.iter().map(|q| q.omega / w_ref).collect();
    let s: Vec<f64> = s_si.iter().map(|v| v / s_ref).collect();
    let sigma: Vec<f64> = e_si.iter().map(|v| v / s_ref).collect();

    let seeds = log_spaced(0.3 / (w_hi / w_ref), 3.0 / (w_lo / w_ref), TAU_SEEDS);
    let starts = if k == 0 { vec![vec![]] } else { k_subsets(TAU_SEEDS, k) };

    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut failures = 0;
    for subset in &starts {
        let taus: Vec<f64> = subset.iter().map(|&i| seeds[i]).collect();
        let Some(amps) = linear_amplitudes(&omega, &s, &sigma, &taus) else {
            failures += 1;
            continue;
        };
        let mut theta = DVector::zeros(p);
        theta[0] = amps[0].ln();
        for j in 0..k {
            theta[1 + 2 * j] = amps[1 + j].ln();
            theta[2 + 2 * j] = taus[j].ln();
        }
        let problem = SpectrumProblem { omega: &omega, s: &s, sigma: &sigma, theta };
        let (problem, report) = LevenbergMarquardt::new().with_patience(400).minimize(problem);
        let chi2 = problem.chi2();
        if !report.termination.was_successful() || !chi2.is_finite() {
            failures += 1;
            continue;
        }
        if best.as_ref().is_none_or(|(c, _)| chi2 < *c) {
            best = Some((chi2, problem.theta));
        }
    }
    let Some((chi2, theta)) = best else {
        return Err(Error::FitNonConvergence(format!("all {failures} starts failed for {k} components")));
    };

    let mut comps: Vec<Lorentzian> = (0..k)
        .map(|j| Lorentzian {
            amplitude: theta[1 + 2 * j].exp() * s_ref,
            corr_time: theta[2 + 2 * j].exp() / w_ref,
        })
        .collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| comps[a].corr_time.total_cmp(&comps[b].corr_time));
    comps = order.iter().map(|&j| comps[j]).collect();
    for pair in comps.windows(2) {
        if pair[1].corr_time < pair[0].corr_time * (1.0 + DEGENERATE_GAP) {
            return Err(Error::DegenerateComponents(pair[0].corr_time, pair[1].corr_time));
        }
    }

    // covariance in log-parameters, scaled by the residual variance, then
    // mapped to natural parameters (∂x/∂ln x = x)
    let problem = SpectrumProblem { omega: &omega, s: &s, sigma: &sigma, theta: theta.clone() };
    let jac = problem.jacobian_mat();
    let dof = n - p;
    let scale = if dof > 0 { chi2 / dof as f64 } else { 1.0 };
    let jtj = jac.transpose() * &jac;
    let cov_log = jtj.clone().try_inverse().unwrap_or_else(|| jtj.pseudo_inverse(1e-14).unwrap()) * scale;
    let mut natural = vec![theta[0].exp() * s_ref];
    let mut perm = vec![0];
    for &j in &order {
        natural.push(theta[1 + 2 * j].exp() * s_ref);
        natural.push(theta[2 + 2 * j].exp() / w_ref);
        perm.push(1 + 2 * j);
        perm.push(2 + 2 * j);
    }
    let covariance = DMatrix::from_fn(p, p, |r, c| natural[r] * natural[c] * cov_log[(perm[r], perm[c])]);

    Ok(SpectrumFit {
        constant: theta[0].exp() * s_ref,
        components: comps,
        chi2,
        residual_norm: chi2.sqrt(),
        dof,
        aicc: aicc(chi2, n, p).unwrap_or(f64::INFINITY),
        covariance,
    })
}

/// Fits 0..=`max_components` Lorentzians and keeps the lowest corrected AIC.
///
/// Candidates that fail to converge or collapse onto degenerate correlation
/// times are dropped; the first such error is returned if none survive.
pub fn fit_spectrum(dataset: &HeatingDataset, ion: &IonSpec, max_components: usize) -> Result<SpectrumFit> {
    ensure(max_components <= MAX_COMPONENTS, || format!("at most {MAX_COMPONENTS} Lorentzian components"))?;
    let mut best: Option<SpectrumFit> = None;
    let mut first_err = None;
    for k in 0..=max_components {
        match fit_spectrum_fixed(dataset, ion, k) {
            Ok(fit) => {
                if best.as_ref().is_none_or(|b| fit.aicc < b.aicc) {
                    best = Some(fit);
                }
            }
            Err(e @ Error::InvalidParameter(_)) if k == 0 => return Err(e),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap())
}

/// Effective temperature (kelvin, time in seconds) reconstructed from a
/// spectrum fit and a constant friction η (kg/s).
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub temperature: EffectiveTemperature,
    pub fit: SpectrumFit,
    pub eta: f64,
    pub eta_std_error: f64,
}

impl Reconstruction {
    pub fn t_eff(&self, t: f64) -> f64 {
        let fit = &self.fit;
        let acc: f64 = fit.components.iter().map(|c| c.amplitude * -(-t / c.corr_time).exp_m1()).sum();
        (fit.constant + acc) / (self.eta * K_B)
    }

    /// One-sigma band from the fit covariance and the friction error.
    pub fn uncertainty(&self, t: f64) -> f64 {
        let fit = &self.fit;
        let scale = 1.0 / (self.eta * K_B);
        let mut g = DVector::zeros(fit.num_params());
        g[0] = scale;
        for (j, c) in fit.components.iter().enumerate() {
            let e = (-t / c.corr_time).exp();
            g[1 + 2 * j] = -(-t / c.corr_time).exp_m1() * scale;
            g[2 + 2 * j] = -c.amplitude * t * e / (c.corr_time * c.corr_time) * scale;
        }
        let var_fit = (g.transpose() * &fit.covariance * &g)[0];
        let var_eta = (self.t_eff(t) * self.eta_std_error / self.eta).powi(2);
        (var_fit.max(0.0) + var_eta).sqrt()
    }
}

/// `T_eff(t) = (a + Σ_j b_j(1 − e^{−t/τ_j})) / (η k_B)` from a fit.
pub fn reconstruct_t_eff(fit: &SpectrumFit, eta: f64, eta_std_error: f64) -> Result<Reconstruction> {
    ensure(eta > 0.0 && eta.is_finite(), || format!("friction {eta} must be > 0"))?;
    ensure(eta_std_error >= 0.0, || "friction error must be >= 0".into())?;
    let scale = 1.0 / (eta * K_B);
    let modes: Vec<TemperatureMode> = fit
        .components
        .iter()
        .map(|c| TemperatureMode {
            cos_amplitude: c.amplitude / c.corr_time * scale,
            sin_amplitude: 0.0,
            decay_rate: 1.0 / c.corr_time,
            frequency: 0.0,
        })
        .collect();
    let asymptote = (fit.constant + fit.components.iter().map(|c| c.amplitude).sum::<f64>()) * scale;
    let temperature = EffectiveTemperature {
        delta_weight: fit.constant * scale,
        modes,
        asymptote,
        provenance: TempProvenance::ClosedForm,
        samples: None,
    };
    Ok(Reconstruction { temperature, fit: fit.clone(), eta, eta_std_error })
}
