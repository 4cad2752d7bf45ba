//! Real rational functions of the Laplace variable, partial fractions, and a
//! fixed-Talbot numerical inverse used as an independent cross-check.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative distance below which a numerator and a denominator root are
/// treated as a common factor.
pub const ROOT_COINCIDENCE: f64 = 1e-12;
/// Relative distance below which two poles count as one repeated pole.
pub const POLE_SEPARATION: f64 = 1e-8;

fn trim(mut c: Vec<f64>) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    while c.len() > 1 && c.last().is_some_and(|x| x.abs() <= 1e-15 * scale) {
        c.pop();
    }
    if c.is_empty() {
        c.push(0.0);
    }
    c
}

pub(crate) fn poly_eval(c: &[f64], s: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * s + a)
}

fn poly_derivative(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, a)| k as f64 * a).collect()
}

pub(crate) fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub(crate) fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or(0.0) + b.get(k).copied().unwrap_or(0.0))
        .collect()
}

fn polish(c: &[f64], mut z: Complex64) -> Complex64 {
    let d = poly_derivative(c);
    for _ in 0..8 {
        let f = poly_eval(c, z);
        let df = poly_eval(&d, z);
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 1e-16 * z.norm() {
            break;
        }
    }
    z
}

/// Roots of a real polynomial given in ascending coefficient order.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let c = trim(coeffs.to_vec());
    let n = c.len() - 1;
    match n {
        0 => vec![],
        1 => vec![Complex64::new(-c[0] / c[1], 0.0)],
        2 => {
            let (a, b, cc) = (c[2], c[1], c[0]);
            let disc = b * b - 4.0 * a * cc;
            if disc >= 0.0 {
                let sign = if b >= 0.0 { 1.0 } else { -1.0 };
                let q = -0.5 * (b + sign * disc.sqrt());
                let r1 = q / a;
                let r2 = if q != 0.0 { cc / q } else { 0.0 };
                vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
            } else {
                let re = -b / (2.0 * a);
                let im = (-disc).sqrt() / (2.0 * a);
                vec![Complex64::new(re, im.abs()), Complex64::new(re, -im.abs())]
            }
        }
        _ => {
            let lead = c[n];
            let mut comp = DMatrix::<f64>::zeros(n, n);
            for i in 1..n {
                comp[(i, i - 1)] = 1.0;
            }
            for i in 0..n {
                comp[(i, n - 1)] = -c[i] / lead;
            }
            comp.complex_eigenvalues()
                .iter()
                .map(|z| polish(&c, *z))
                .collect()
        }
    }
}

fn poly_from_roots(lead: f64, roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(lead, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (k, a) in acc.iter().enumerate() {
            next[k + 1] += *a;
            next[k] -= *a * r;
        }
        acc = next;
    }
    acc.into_iter().map(|z| z.re).collect()
}

fn coincide(a: Complex64, b: Complex64) -> bool {
    let scale = a.norm().max(b.norm());
    (a - b).norm() <= ROOT_COINCIDENCE * scale || (scale == 0.0)
}

/// Ratio of two real polynomials in s, stored in ascending powers, with common
/// factors removed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceRational {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl LaplaceRational {
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let num = trim(num);
        let den = trim(den);
        if den.iter().all(|x| *x == 0.0) || den.iter().any(|x| !x.is_finite()) || num.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("denominator must be a nonzero finite polynomial".into()));
        }
        let mut r = LaplaceRational { num, den };
        r.reduce();
        Ok(r)
    }

    pub fn constant(c: f64) -> Self {
        LaplaceRational { num: vec![c], den: vec![1.0] }
    }

    /// Proper first-order term `weight / (s·tau + 1)`.
    pub fn first_order(weight: f64, tau: f64) -> Self {
        LaplaceRational { num: vec![weight], den: vec![1.0, tau] }
    }

    fn reduce(&mut self) {
        if self.num.iter().all(|x| *x == 0.0) {
            self.num = vec![0.0];
            self.den = vec![1.0];
            return;
        }
        if self.den.len() == 1 || self.num.len() == 1 {
            return;
        }
        let mut nr = poly_roots(&self.num);
        let mut dr = poly_roots(&self.den);
        let mut cancelled = false;
        let mut i = 0;
        while i < nr.len() {
            if let Some(j) = dr.iter().position(|d| coincide(nr[i], *d)) {
                nr.swap_remove(i);
                dr.swap_remove(j);
                cancelled = true;
            } else {
                i += 1;
            }
        }
        if cancelled {
            let ln = *self.num.last().unwrap();
            let ld = *self.den.last().unwrap();
            self.num = poly_from_roots(ln, &nr);
            self.den = poly_from_roots(ld, &dr);
        }
    }

    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    pub fn eval(&self, s: Complex64) -> Complex64 {
        poly_eval(&self.num, s) / poly_eval(&self.den, s)
    }

    pub fn eval_real(&self, s: f64) -> f64 {
        self.eval(Complex64::new(s, 0.0)).re
    }

    pub fn num_degree(&self) -> usize {
        self.num.len() - 1
    }

    pub fn den_degree(&self) -> usize {
        self.den.len() - 1
    }

    /// Limit s → ∞; infinite for improper functions.
    pub fn value_at_infinity(&self) -> f64 {
        match self.num_degree().cmp(&self.den_degree()) {
            std::cmp::Ordering::Less => 0.0,
            std::cmp::Ordering::Equal => self.num.last().unwrap() / self.den.last().unwrap(),
            std::cmp::Ordering::Greater => f64::INFINITY * self.num.last().unwrap().signum(),
        }
    }

    pub fn poles(&self) -> Vec<Complex64> {
        poly_roots(&self.den)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let num = poly_add(&poly_mul(&self.num, &other.den), &poly_mul(&other.num, &self.den));
        LaplaceRational::new(num, poly_mul(&self.den, &other.den))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        if other.num.iter().all(|x| *x == 0.0) {
            return Err(Error::InvalidParameter("division by the zero function".into()));
        }
        LaplaceRational::new(poly_mul(&self.num, &other.den), poly_mul(&self.den, &other.num))
    }

    pub fn scale(&self, c: f64) -> Self {
        LaplaceRational { num: self.num.iter().map(|x| x * c).collect(), den: self.den.clone() }
    }

    /// Splits the function into its s → ∞ constant and simple-pole terms
    /// `residue / (s − pole)`.
    pub fn partial_fractions(&self) -> Result<PartialFractions> {
        if self.num_degree() > self.den_degree() {
            return Err(Error::InvalidParameter("improper rational function".into()));
        }
        let direct = self.value_at_infinity();
        let poles = self.poles();
        let scale = poles.iter().fold(0.0f64, |m, p| m.max(p.norm()));
        for (i, p) in poles.iter().enumerate() {
            if p.re > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::UnstablePole(p.re));
            }
            for q in &poles[i + 1..] {
                if (p - q).norm() <= POLE_SEPARATION * scale {
                    return Err(Error::RepeatedPole(p.re));
                }
            }
        }
        let d = poly_derivative(&self.den);
        let terms = poles
            .into_iter()
            .map(|p| SimplePole { pole: p, residue: poly_eval(&self.num, p) / poly_eval(&d, p) })
            .collect();
        Ok(PartialFractions { direct, terms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplePole {
    pub pole: Complex64,
    pub residue: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractions {
    pub direct: f64,
    pub terms: Vec<SimplePole>,
}

impl PartialFractions {
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.terms.iter().fold(Complex64::new(self.direct, 0.0), |acc, t| acc + t.residue / (s - t.pole))
    }
}

/// Fixed-Talbot inversion of `f` at time `t > 0` with `nodes` contour points.
///
/// Singularities of `f` must lie in the left half plane, away from the
/// positive real axis.
pub fn talbot_invert<F: Fn(Complex64) -> Complex64>(f: F, t: f64, nodes: usize) -> f64 {
    assert!(t > 0.0, "talbot inversion needs t > 0");
    let m = nodes as f64;
    let r = 2.0 * m / (5.0 * t);
    let mut acc = 0.5 * (f(Complex64::new(r, 0.0)) * (r * t).exp()).re;
    for k in 1..nodes {
        let theta = k as f64 * PI / m;
        let cot = 1.0 / theta.tan();
        let s = Complex64::new(r * theta * cot, r * theta);
        let sigma = theta + (theta * cot - 1.0) * cot;
        let term = (s * t).exp() * f(s) * Complex64::new(1.0, sigma);
        acc += term.re;
    }
    acc * r / m
}
