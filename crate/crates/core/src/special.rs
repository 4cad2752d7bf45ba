//! Entire functions φₙ(z) used for cancellation-free exponential integrals.

use num_complex::Complex64;

/// φ₁(z) = (e^z − 1)/z.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-2 {
        // Σ z^k/(k+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..10 {
            term *= z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        z.exp_m1() / z
    }
}

/// φ₂(z) = (e^z − 1 − z)/z².
pub fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ z^k/(k+2)!
        let mut term = Complex64::new(0.5, 0.0);
        let mut sum = term;
        for k in 1..20 {
            term *= z / (k as f64 + 2.0);
            sum += term;
        }
        sum
    } else {
        (z.exp_m1() - z) / (z * z)
    }
}

/// dφ₂/dz = (e^z (z − 2) + z + 2)/z³.
pub fn phi2_prime(z: Complex64) -> Complex64 {
    if z.norm() < 1.0 {
        // Σ (k+1) z^k/(k+3)!
        let mut fact = Complex64::new(1.0 / 6.0, 0.0);
        let mut sum = fact;
        for k in 1..30 {
            fact *= z / (k as f64 + 3.0);
            sum += fact * (k as f64 + 1.0);
        }
        sum
    } else {
        (z.exp() * (z - 2.0) + z + 2.0) / (z * z * z)
    }
}

pub fn phi2_real(x: f64) -> f64 {
    phi2(Complex64::new(x, 0.0)).re
}

trait ExpM1 {
    fn exp_m1(self) -> Self;
}

impl ExpM1 for Complex64 {
    fn exp_m1(self) -> Self {
        // e^{a+ib} − 1 = (e^a − 1)cos b + (cos b − 1) + i e^a sin b
        let (a, b) = (self.re, self.im);
        let cm1 = -2.0 * (0.5 * b).sin().powi(2);
        Complex64::new(a.exp_m1() * b.cos() + cm1, a.exp() * b.sin())
    }
}
