//! Exact Gaussian dynamics of the generalized Langevin equation.
//!
//! Each exponential memory component becomes one auxiliary force coordinate
//! `v_k`:
//!
//! ```text
//! ẋ   = p/m
//! ṗ   = −(mω² + Σ η_k/τ_k) x − (η_δ/m) p + Σ v_k + ξ_δ
//! v̇_k = (η_k/τ_k²) x − v_k/τ_k + ξ_k
//! ```
//!
//! with white noises of strength `2 w_δ` and `2 w_k/τ_k²`. Eliminating `v_k`
//! with `v_k(0)` of zero mean reproduces the memory integral, the initial-slip
//! term `−η(t) x(0)`, and a stationary colored force `(w_k/τ_k) e^{−|t|/τ_k}`
//! when the noise part of `v_k` starts from its stationary variance `w_k/τ_k`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use ode_solvers::{Dop853, OutputType, System as OdeSystem};

use crate::decoherence::CatState;
use crate::error::{check_time, ensure, Error, Result};
use crate::kernels::NoiseModel;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSystem {
    pub drift: DMatrix<f64>,
    pub diffusion: DMatrix<f64>,
    /// Covariance of the noise coordinates at t = 0.
    pub noise_initial: DMatrix<f64>,
    pub mass: f64,
}

impl EmbeddedSystem {
    pub fn dim(&self) -> usize {
        self.drift.nrows()
    }

    /// Response of x to a unit force, `[(sI − A)⁻¹]_{x,p}`.
    pub fn transfer_function(&self, s: Complex64) -> Result<Complex64> {
        let n = self.dim();
        let a = self.drift.map(|v| Complex64::new(v, 0.0));
        let m = DMatrix::<Complex64>::identity(n, n) * s - a;
        let mut rhs = DVector::<Complex64>::zeros(n);
        rhs[1] = Complex64::new(1.0, 0.0);
        let sol = m.lu().solve(&rhs).ok_or_else(|| Error::InvalidParameter("singular resolvent".into()))?;
        Ok(sol[0])
    }

    /// Deterministic flow `Φ(t) = exp(A t)`.
    pub fn flow(&self, t: f64) -> Result<DMatrix<f64>> {
        check_time(t)?;
        Ok((&self.drift * t).exp())
    }
}

pub fn embed(model: &NoiseModel) -> Result<EmbeddedSystem> {
    if model.tabulated.is_some() {
        return Err(Error::TabulatedNotEmbeddable);
    }
    let k = model.modes.len();
    let n = 2 + k;
    let (m, w) = (model.system.mass, model.system.frequency);
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, n);
    let mut q0 = DMatrix::zeros(n, n);
    a[(0, 1)] = 1.0 / m;
    a[(1, 0)] = -m * w * w;
    a[(1, 1)] = -model.delta_friction / m;
    b[(1, 1)] = 2.0 * model.delta_noise;
    for (j, mode) in model.modes.iter().enumerate() {
        let (tau, i) = (mode.corr_time, 2 + j);
        a[(1, 0)] -= mode.friction / tau;
        a[(1, i)] = 1.0;
        a[(i, 0)] = mode.friction / (tau * tau);
        a[(i, i)] = -1.0 / tau;
        b[(i, i)] = 2.0 * mode.noise / (tau * tau);
        q0[(i, i)] = mode.noise / tau;
    }
    Ok(EmbeddedSystem { drift: a, diffusion: b, noise_initial: q0, mass: m })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceState {
    pub time: f64,
    pub sigma: DMatrix<f64>,
    /// Noise-accumulated part of the covariance.
    pub noise: DMatrix<f64>,
}

impl CovarianceState {
    pub fn physical_noise(&self) -> Matrix2<f64> {
        Matrix2::new(self.noise[(0, 0)], self.noise[(0, 1)], self.noise[(1, 0)], self.noise[(1, 1)])
    }
}

struct Lyapunov<'a> {
    a: &'a DMatrix<f64>,
    b: &'a DMatrix<f64>,
}

impl OdeSystem<f64, DVector<f64>> for Lyapunov<'_> {
    fn system(&self, _t: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        let n = self.a.nrows();
        let s = DMatrix::from_column_slice(n, n, y.as_slice());
        let a_s = self.a * &s;
        let d = &a_s + a_s.transpose() + self.b;
        dy.copy_from_slice(d.as_slice());
    }
}

fn project_psd(s: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (s + s.transpose()) * 0.5;
    let trace = sym.trace().abs();
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|l| *l >= -1e-10 * trace) {
        return sym;
    }
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    &eig.eigenvectors * DMatrix::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

/// Integrates `Σ̇ = AΣ + ΣAᵀ + B` from `s0` at `times[0]` and returns Σ at
/// every grid time.
fn lyapunov(a: &DMatrix<f64>, b: &DMatrix<f64>, s0: &DMatrix<f64>, times: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    let n = a.nrows();
    let t_end = *times.last().unwrap();
    let scale = s0.amax().max(b.amax() * (t_end - times[0])).max(f64::MIN_POSITIVE);
    let mut out = vec![s0.clone()];
    let mut y = DVector::from_column_slice(s0.as_slice());
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let mut solver = Dop853::new(Lyapunov { a, b }, t0, t1, t1 - t0, y.clone(), 1e-11, 1e-13 * scale);
        solver.set_output(OutputType::Sparse);
        solver.integrate().map_err(|e| Error::IntegratorFailure(format!("{e:?}")))?;
        y = solver.y_out().last().cloned().ok_or_else(|| Error::IntegratorFailure("no output".into()))?;
        let s = project_psd(&DMatrix::from_column_slice(n, n, y.as_slice()));
        y = DVector::from_column_slice(s.as_slice());
        out.push(s);
    }
    Ok(out)
}

/// Covariance along a time grid. Σ starts from `sigma0`; the noise part starts
/// from the stationary variance of the auxiliary noise coordinates.
pub fn propagate_covariance(sys: &EmbeddedSystem, sigma0: &DMatrix<f64>, times: &[f64]) -> Result<Vec<CovarianceState>> {
    let n = sys.dim();
    ensure(sigma0.nrows() == n && sigma0.ncols() == n, || "initial covariance has the wrong shape".into())?;
    ensure(!times.is_empty() && times[0] >= 0.0, || "time grid must be nonempty and nonnegative".into())?;
    ensure(times.windows(2).all(|w| w[1] > w[0]), || "time grid must be increasing".into())?;
    let psd = SymmetricEigen::new((sigma0 + sigma0.transpose()) * 0.5).eigenvalues.min();
    ensure(psd >= -1e-12 * sigma0.trace().abs(), || "initial covariance is not positive semidefinite".into())?;
    let sig = lyapunov(&sys.drift, &sys.diffusion, sigma0, times)?;
    // noise covariance accumulates from t = 0 regardless of the grid start
    let mut noise_times = times.to_vec();
    if times[0] > 0.0 {
        noise_times.insert(0, 0.0);
    }
    let mut noise = lyapunov(&sys.drift, &sys.diffusion, &sys.noise_initial, &noise_times)?;
    if times[0] > 0.0 {
        noise.remove(0);
    }
    Ok(times
        .iter()
        .zip(sig.into_iter().zip(noise))
        .map(|(&time, (sigma, noise))| CovarianceState { time, sigma, noise })
        .collect())
}

/// Full covariance at every grid time for a cat-state packet: the initial
/// packet covariance on (x, p) plus the stationary auxiliary noise.
pub fn cat_initial_covariance(cat: &CatState, sys: &EmbeddedSystem) -> DMatrix<f64> {
    let mut s = sys.noise_initial.clone();
    s[(0, 0)] += cat.width * cat.width;
    s[(1, 1)] += 1.0 / (4.0 * cat.width * cat.width);
    s
}

/// Peak-ratio exponent of a Gaussian cat pushed through the linear map `m`
/// and convolved with the noise covariance `noise` on (x, p).
///
/// With `S₀ = diag(σ², 1/4σ²)`, `k = (0, d)`, `μ = M S₀ k`, `κ = M⁻ᵀ k` and
/// `S_t = M S₀ Mᵀ + Σ_n`, the exponent is `½ μᵀ S_t⁻¹ Σ_n κ`, which equals
/// `½ kᵀ S₀ k − ½ μᵀ S_t⁻¹ μ` without its cancellation.
pub fn gaussian_exponent(cat: &CatState, m: &Matrix2<f64>, noise: &Matrix2<f64>) -> Result<f64> {
    let s0 = Matrix2::new(cat.width * cat.width, 0.0, 0.0, 1.0 / (4.0 * cat.width * cat.width));
    let k = Vector2::new(0.0, cat.separation);
    let mu = m * s0 * k;
    let st = m * s0 * m.transpose() + noise;
    let st_inv = st.try_inverse().ok_or_else(|| Error::InvalidParameter("singular evolved covariance".into()))?;
    match m.transpose().try_inverse() {
        Some(mt_inv) if m.determinant().abs() > 1e-12 * m.norm_squared() => {
            let kappa = mt_inv * k;
            Ok(0.5 * (mu.transpose() * st_inv * noise * kappa)[(0, 0)])
        }
        _ => Ok(0.5 * (k.dot(&(s0 * k)) - mu.dot(&(st_inv * mu)))),
    }
}

/// Exact peak-to-peak ratio `exp(−A)` at time t.
pub fn exact_contrast(cat: &CatState, sys: &EmbeddedSystem, t: f64) -> Result<f64> {
    Ok((-exact_exponent(cat, sys, t)?).exp())
}

pub fn exact_exponent(cat: &CatState, sys: &EmbeddedSystem, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let noise = lyapunov(&sys.drift, &sys.diffusion, &sys.noise_initial, &[0.0, t])?.pop().unwrap();
    let phi = sys.flow(t)?;
    let m = Matrix2::new(phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]);
    let sn = Matrix2::new(noise[(0, 0)], noise[(0, 1)], noise[(1, 0)], noise[(1, 1)]);
    gaussian_exponent(cat, &m, &sn)
}

/// Exact exponents on a grid, sharing one covariance integration.
pub fn exact_exponents(cat: &CatState, sys: &EmbeddedSystem, times: &[f64]) -> Result<Vec<f64>> {
    ensure(times.windows(2).all(|w| w[1] > w[0]), || "time grid must be increasing".into())?;
    let mut grid = times.to_vec();
    let prepend = grid.first().is_some_and(|t| *t > 0.0);
    if prepend {
        grid.insert(0, 0.0);
    }
    let noise = lyapunov(&sys.drift, &sys.diffusion, &sys.noise_initial, &grid)?;
    let start = usize::from(prepend);
    grid.iter()
        .zip(&noise)
        .skip(start)
        .map(|(&t, n)| {
            if t == 0.0 {
                return Ok(0.0);
            }
            let phi = sys.flow(t)?;
            let m = Matrix2::new(phi[(0, 0)], phi[(0, 1)], phi[(1, 0)], phi[(1, 1)]);
            let sn = Matrix2::new(n[(0, 0)], n[(0, 1)], n[(1, 0)], n[(1, 1)]);
            gaussian_exponent(cat, &m, &sn)
        })
        .collect()
}
