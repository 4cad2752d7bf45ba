//! Phase-space grid for the cat-state Wigner function and a spectral solver
//! for `∂W/∂t = η(t) x ∂W/∂p + D(t) ∂²W/∂p²` with `D(t) = ∫₀ᵗ C`.
//!
//! The equation has no x-derivatives, so every x-column evolves on its own.
//! Over a step the column's p-spectrum is multiplied by
//! `exp(−k² ΔV/2 + i k x ΔΓ)` where `ΔV` is the increment of `σ²_pp` and `ΔΓ`
//! the increment of `∫η`. Both factors are exact and leave the k = 0 mode, and
//! hence the mass, unchanged.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::decoherence::{sigma_pp, CatState, ContrastCurve, Method};
use crate::error::{ensure, Error, Result};
use crate::kernels::NoiseModel;
use crate::quad::Quadrature;

/// Uniform grid: `x_i = (i − (nx−1)/2) dx`, `p_j = (j − np/2) dp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub dx: f64,
    pub np: usize,
    pub dp: f64,
}

impl GridSpec {
    /// Grid with `x = 0, ±d/2` on nodes, `dx = σ/2`, and at least 16 p-samples
    /// per fringe over the momentum window the cat needs.
    pub fn for_cat(cat: &CatState) -> Self {
        let half = cat.separation / 2.0;
        // dx divides d/2 and is at most σ/2
        let per_half = (half / (cat.width / 2.0)).ceil().max(1.0);
        let dx = half / per_half;
        let x_max = half + 6.0 * cat.width;
        let nx = 2 * (x_max / dx).ceil() as usize + 1;
        let dp = (2.0 * PI / cat.separation / 16.0).min(1.0 / (2.0 * cat.width) / 8.0);
        let p_need = 2.0 * (8.0 / (2.0 * cat.width) + 2.0 * PI / cat.separation);
        let np = ((p_need / dp).ceil() as usize).next_power_of_two();
        GridSpec { nx, dx, np, dp }
    }

    pub fn x(&self, i: usize) -> f64 {
        (i as f64 - (self.nx - 1) as f64 / 2.0) * self.dx
    }

    pub fn p(&self, j: usize) -> f64 {
        (j as f64 - (self.np / 2) as f64) * self.dp
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn p_max(&self) -> f64 {
        self.p(self.np - 1)
    }

    pub fn with_half_dp(&self) -> Self {
        GridSpec { np: self.np * 2, dp: self.dp / 2.0, ..*self }
    }
}

/// Sampled Wigner function with its three components stored separately,
/// each row-major as `[i * np + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub spec: GridSpec,
    pub time: f64,
    pub w_minus: Vec<f64>,
    pub w_plus: Vec<f64>,
    pub w_int: Vec<f64>,
}

impl WignerGrid {
    fn integral(&self, f: &[f64]) -> f64 {
        f.iter().sum::<f64>() * self.spec.dx * self.spec.dp
    }

    /// ∫ W dx dp over the grid.
    pub fn total_mass(&self) -> f64 {
        self.integral(&self.w_minus) + self.integral(&self.w_plus) + self.integral(&self.w_int)
    }

    /// Swaps the roles of x and −x.
    pub fn mirrored(&self) -> WignerGrid {
        let (nx, np) = (self.spec.nx, self.spec.np);
        let flip = |f: &[f64]| {
            let mut out = vec![0.0; f.len()];
            for i in 0..nx {
                out[(nx - 1 - i) * np..(nx - i) * np].copy_from_slice(&f[i * np..(i + 1) * np]);
            }
            out
        };
        WignerGrid {
            spec: self.spec,
            time: self.time,
            w_minus: flip(&self.w_plus),
            w_plus: flip(&self.w_minus),
            w_int: flip(&self.w_int),
        }
    }

    /// Plain CSV with header `x,p,w_minus,w_plus,w_int`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,p,w_minus,w_plus,w_int")?;
        for i in 0..self.spec.nx {
            for j in 0..self.spec.np {
                let k = i * self.spec.np + j;
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.spec.x(i),
                    self.spec.p(j),
                    self.w_minus[k],
                    self.w_plus[k],
                    self.w_int[k]
                )?;
            }
        }
        Ok(())
    }
}

pub fn cat_wigner(cat: &CatState, spec: GridSpec) -> Result<WignerGrid> {
    let (d, s) = (cat.separation, cat.width);
    ensure(spec.nx >= 3 && spec.np >= 8 && spec.dx > 0.0 && spec.dp > 0.0, || "degenerate grid".into())?;
    if spec.x_max() < d / 2.0 + 5.0 * s {
        return Err(Error::GridTooSmall(format!("x range {} < d/2 + 5σ = {}", spec.x_max(), d / 2.0 + 5.0 * s)));
    }
    let p_need = 5.0 / (2.0 * s) + 2.0 * PI / d;
    if spec.p_max() < p_need {
        return Err(Error::GridTooSmall(format!("p range {} < {}", spec.p_max(), p_need)));
    }
    let c = 0.5 / (1.0 + (-d * d / (8.0 * s * s)).exp());
    let n = spec.nx * spec.np;
    let (mut wm, mut wp, mut wi) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..spec.nx {
        let x = spec.x(i);
        for j in 0..spec.np {
            let p = spec.p(j);
            let gp = (-2.0 * s * s * p * p).exp();
            let k = i * spec.np + j;
            wm[k] = c / PI * (-(x + d / 2.0).powi(2) / (2.0 * s * s)).exp() * gp;
            wp[k] = c / PI * (-(x - d / 2.0).powi(2) / (2.0 * s * s)).exp() * gp;
            wi[k] = 2.0 * c / PI * (-x * x / (2.0 * s * s)).exp() * gp * (d * p).cos();
        }
    }
    Ok(WignerGrid { spec, time: 0.0, w_minus: wm, w_plus: wp, w_int: wi })
}

/// Step control for [`evolve_fpe`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpeOptions {
    pub substeps: usize,
    pub drift: bool,
}

impl Default for FpeOptions {
    fn default() -> Self {
        FpeOptions { substeps: 1, drift: true }
    }
}

/// `∫₀ᵗ η` including the delta weight, which acts at t = 0.
fn friction_integral(model: &NoiseModel, t: f64) -> Result<f64> {
    let smooth: f64 = model.modes.iter().map(|m| -m.friction * (-t / m.corr_time).exp_m1()).sum();
    let tab = match &model.tabulated {
        Some(tab) if t > 0.0 => {
            let end = t.min(tab.t_max());
            let n = (end / tab.dt).floor() as usize;
            let mut breaks: Vec<f64> = (0..=n).map(|k| k as f64 * tab.dt).collect();
            breaks.push(end);
            breaks.dedup();
            Quadrature::with_rel_tol(1e-12).integrate_breaks(|u| tab.friction_at(u), &breaks)?
        }
        _ => 0.0,
    };
    Ok(model.delta_friction + smooth + tab)
}

/// Evolves the three components to every time in `times` (increasing, ≥ the
/// state's time) and returns one snapshot per time.
pub fn evolve_fpe(state: &WignerGrid, model: &NoiseModel, times: &[f64], opts: FpeOptions) -> Result<Vec<WignerGrid>> {
    ensure(opts.substeps >= 1, || "need at least one substep".into())?;
    ensure(times.windows(2).all(|w| w[1] > w[0]), || "time grid must be increasing".into())?;
    ensure(times.first().is_none_or(|t| *t >= state.time), || "cannot evolve backwards".into())?;
    let spec = state.spec;
    let np = spec.np;
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(np);
    let inv = planner.plan_fft_inverse(np);
    let k: Vec<f64> = (0..np)
        .map(|j| {
            let m = if j <= np / 2 { j as f64 } else { j as f64 - np as f64 };
            2.0 * PI * m / (np as f64 * spec.dp)
        })
        .collect();
    let p_window = np as f64 * spec.dp;
    let mass0 = state.total_mass();

    let mut cur = state.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    for &target in times {
        let t0 = cur.time;
        for s in 0..opts.substeps {
            let ta = t0 + (target - t0) * s as f64 / opts.substeps as f64;
            let tb = t0 + (target - t0) * (s + 1) as f64 / opts.substeps as f64;
            if tb <= ta {
                continue;
            }
            let dv = sigma_pp(model, tb)? - sigma_pp(model, ta)?;
            let dg = if opts.drift {
                let ga = if ta == 0.0 { 0.0 } else { friction_integral(model, ta)? };
                friction_integral(model, tb)? - ga
            } else {
                0.0
            };
            let shift = spec.x_max() * dg.abs();
            if shift > 0.5 * p_window {
                return Err(Error::StepTooLarge(format!("momentum shift {shift} exceeds half the p window")));
            }
            for comp in [&mut cur.w_minus, &mut cur.w_plus, &mut cur.w_int] {
                for i in 0..spec.nx {
                    let x = spec.x(i);
                    let col = &mut comp[i * np..(i + 1) * np];
                    for (b, v) in buf.iter_mut().zip(col.iter()) {
                        *b = Complex64::new(*v, 0.0);
                    }
                    fwd.process(&mut buf);
                    for (b, &kk) in buf.iter_mut().zip(&k) {
                        *b *= Complex64::from_polar((-0.5 * kk * kk * dv).exp(), kk * x * dg);
                    }
                    inv.process(&mut buf);
                    for (v, b) in col.iter_mut().zip(&buf) {
                        *v = b.re / np as f64;
                    }
                }
            }
            cur.time = tb;
        }
        cur.time = target;
        let drift = (cur.total_mass() - mass0).abs();
        if drift > 1e-4 * mass0.abs() {
            return Err(Error::NormalizationDrift(drift));
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Value at the grid maximum of `f` (or `|f|`), refined by a local quadratic
/// in each direction.
fn refined_peak(f: &[f64], spec: &GridSpec, absolute: bool) -> f64 {
    let val = |i: usize, j: usize| {
        let v = f[i * spec.np + j];
        if absolute {
            v.abs()
        } else {
            v
        }
    };
    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..spec.nx {
        for j in 0..spec.np {
            let v = val(i, j);
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    let (i, j, f0) = best;
    let mut peak = f0;
    let mut refine = |lo: f64, hi: f64| {
        let d1 = 0.5 * (hi - lo);
        let d2 = hi - 2.0 * f0 + lo;
        if d2 < 0.0 {
            peak -= d1 * d1 / (2.0 * d2);
        }
    };
    if i > 0 && i + 1 < spec.nx {
        refine(val(i - 1, j), val(i + 1, j));
    }
    if j > 0 && j + 1 < spec.np {
        refine(val(i, j - 1), val(i, j + 1));
    }
    peak
}

/// Interference peak over twice the geometric mean of the classical peaks.
pub fn peak_ratio(state: &WignerGrid) -> Result<f64> {
    let num = refined_peak(&state.w_int, &state.spec, true);
    if num < 1e-300 {
        return Err(Error::PeakBelowFloor);
    }
    let wm = refined_peak(&state.w_minus, &state.spec, false);
    let wp = refined_peak(&state.w_plus, &state.spec, false);
    Ok(num / (2.0 * (wm * wp).sqrt()))
}

/// Contrast curve from the grid solver; `times` must start at 0.
pub fn grid_contrast_curve(
    cat: &CatState,
    model: &NoiseModel,
    spec: GridSpec,
    times: &[f64],
    opts: FpeOptions,
) -> Result<ContrastCurve> {
    ensure(times.first() == Some(&0.0), || "time grid must start at 0".into())?;
    let init = cat_wigner(cat, spec)?;
    let snaps = evolve_fpe(&init, model, &times[1..], opts)?;
    let mut a = vec![-peak_ratio(&init)?.ln()];
    for s in &snaps {
        a.push(-peak_ratio(s)?.ln());
    }
    Ok(ContrastCurve::from_exponents(times.to_vec(), a, Method::GridPde))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{FieldSpec, ReservoirSpec, System};

    fn cat() -> CatState {
        CatState::new(2.0, 0.2, 1.0, 1.0).unwrap()
    }

    fn quiet() -> NoiseModel {
        NoiseModel::compose(&[ReservoirSpec::delta(0.0, 0.0)], System::new(1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn fresh_cat() {
        let c = cat();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        assert!((peak_ratio(&g).unwrap() - 1.0).abs() < 1e-12);
        assert!(g.w_minus.iter().chain(&g.w_plus).all(|v| *v >= 0.0));
        // d = 10σ
        let c10 = CatState::new(2.0, 0.2, 1.0, 1.0).unwrap();
        let g10 = cat_wigner(&c10, GridSpec::for_cat(&c10)).unwrap();
        assert!((g10.total_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn overlapping_packets_are_normalized() {
        let c = CatState::new(0.5, 0.2, 1.0, 1.0).unwrap();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_small_grids() {
        let c = cat();
        let mut spec = GridSpec::for_cat(&c);
        spec.nx = 11;
        assert!(matches!(cat_wigner(&c, spec), Err(Error::GridTooSmall(_))));
        let mut spec = GridSpec::for_cat(&c);
        spec.np = 16;
        assert!(matches!(cat_wigner(&c, spec), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn quiet_model_leaves_state_unchanged() {
        let c = cat();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let out = evolve_fpe(&g, &quiet(), &[0.5, 1.0], FpeOptions::default()).unwrap();
        let diff = out[1].w_int.iter().zip(&g.w_int).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-14);
    }

    #[test]
    fn delta_model_fringe_damping() {
        let c = cat();
        let (eta, temp, t) = (0.5, 0.8, 0.6);
        let m = NoiseModel::compose(&[ReservoirSpec::delta(eta, temp)], System::new(1.0, 1.0).unwrap()).unwrap();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let out = evolve_fpe(&g, &m, &[t], FpeOptions { substeps: 4, drift: false }).unwrap();
        // Gaussian convolution of cos(dp) under envelope variance s₀ = 1/4σ²
        let v = 2.0 * eta * temp * t;
        let s0 = 1.0 / (4.0 * c.width * c.width);
        let expected = -0.5 * c.separation.powi(2) * v * s0 / (s0 + v);
        assert!((peak_ratio(&out[0]).unwrap().ln() - expected).abs() < 1e-10);
        assert!((out[0].total_mass() - g.total_mass()).abs() < 1e-12);
    }

    #[test]
    fn frozen_envelope_limit() {
        // wide momentum envelope relative to the accumulated variance
        let c = CatState::new(4.0, 0.05, 1.0, 1.0).unwrap();
        let m = NoiseModel::compose(&[ReservoirSpec::delta(1.0, 1.0)], System::new(1.0, 1.0).unwrap()).unwrap();
        let t = 0.01;
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let out = evolve_fpe(&g, &m, &[t], FpeOptions { substeps: 1, drift: false }).unwrap();
        let expected = (-0.5 * 16.0 * 2.0 * t).exp();
        assert!((peak_ratio(&out[0]).unwrap() - expected).abs() < 1e-4);
    }

    #[test]
    fn linearity_and_parity() {
        let c = cat();
        let m = NoiseModel::compose(&[ReservoirSpec::delta(0.3, 1.0), ReservoirSpec::exponential(0.4, 0.5, 2.0)], System::new(1.0, 1.0).unwrap())
            .unwrap()
            .with_fields(&[FieldSpec::colored(0.2, 0.3)])
            .unwrap();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let mut joint = g.clone();
        for k in 0..joint.w_int.len() {
            joint.w_int[k] += joint.w_minus[k] + joint.w_plus[k];
        }
        let opts = FpeOptions { substeps: 3, drift: true };
        let sep = evolve_fpe(&g, &m, &[0.4], opts).unwrap().pop().unwrap();
        let tog = evolve_fpe(&joint, &m, &[0.4], opts).unwrap().pop().unwrap();
        let diff = (0..g.w_int.len())
            .map(|k| (tog.w_int[k] - sep.w_int[k] - sep.w_minus[k] - sep.w_plus[k]).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-12);
        let r = peak_ratio(&sep).unwrap();
        let mirrored = evolve_fpe(&g.mirrored(), &m, &[0.4], opts).unwrap().pop().unwrap();
        assert!((peak_ratio(&mirrored).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn mass_conserved_over_many_steps() {
        let c = cat();
        let m = NoiseModel::compose(&[ReservoirSpec::delta(0.2, 1.0), ReservoirSpec::exponential(0.3, 0.5, 2.0)], System::new(1.0, 1.0).unwrap())
            .unwrap();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let out = evolve_fpe(&g, &m, &[0.5], FpeOptions { substeps: 1000, drift: true }).unwrap();
        assert!((out[0].total_mass() - g.total_mass()).abs() < 1e-6);
    }

    #[test]
    fn diffusion_keeps_fringe_wavevectors() {
        // each Fourier mode of a column is scaled by a real positive factor,
        // so neither wavevector nor phase of any fringe component moves
        let c = cat();
        let m = NoiseModel::compose(&[ReservoirSpec::delta(0.5, 0.5)], System::new(1.0, 1.0).unwrap()).unwrap();
        let spec = GridSpec::for_cat(&c);
        let g = cat_wigner(&c, spec).unwrap();
        let t = 0.3;
        let out = evolve_fpe(&g, &m, &[t], FpeOptions { substeps: 1, drift: false }).unwrap();
        let i0 = (spec.nx - 1) / 2;
        let spectrum = |w: &[f64]| {
            let mut buf: Vec<Complex64> =
                w[i0 * spec.np..(i0 + 1) * spec.np].iter().map(|v| Complex64::new(*v, 0.0)).collect();
            FftPlanner::<f64>::new().plan_fft_forward(spec.np).process(&mut buf);
            buf
        };
        let (before, after) = (spectrum(&g.w_int), spectrum(&out[0].w_int));
        let v = 2.0 * 0.25 * t;
        let peak = before.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for (j, (b, a)) in before.iter().zip(&after).enumerate() {
            let m = if j <= spec.np / 2 { j as f64 } else { j as f64 - spec.np as f64 };
            let k = 2.0 * PI * m / (spec.np as f64 * spec.dp);
            if b.norm() > 1e-6 * peak {
                let ratio = a / b;
                assert!((ratio.re - (-0.5 * k * k * v).exp()).abs() < 1e-9);
                assert!(ratio.im.abs() < 1e-9);
            }
        }
    }

    #[test]
    fn fully_decohered_peak_floor() {
        let c = cat();
        let g = cat_wigner(&c, GridSpec::for_cat(&c)).unwrap();
        let mut dead = g.clone();
        dead.w_int.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(peak_ratio(&dead), Err(Error::PeakBelowFloor));
    }

    #[test]
    fn csv_header() {
        let c = cat();
        let spec = GridSpec { nx: 3, dx: 1.5, np: 64, dp: 0.6 };
        let g = cat_wigner(&c, GridSpec { nx: 33, ..spec }).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("x,p,w_minus,w_plus,w_int\n"));
        assert_eq!(text.lines().count(), 1 + 33 * 64);
    }
}
