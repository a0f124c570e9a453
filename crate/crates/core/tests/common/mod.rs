//! Test-side numerical oracles, independent of the library quadrature.
#![allow(dead_code)]

use qlidar::SpectralParams;

/// Composite trapezoid rule with n intervals. Converges geometrically for
/// smooth integrands that decay to zero at both ends.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..n {
        s += f(a + i as f64 * h);
    }
    s * h
}

pub fn trapezoid_2d<F: Fn(f64, f64) -> f64>(f: F, x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    trapezoid(|xv| trapezoid(|yv| f(xv, yv), y.0, y.1, n), x.0, x.1, n)
}

pub fn params(k: f64, xi: f64) -> SpectralParams {
    SpectralParams::from_schmidt_number(1.0, k, 0.01, xi, 1.0).unwrap()
}

/// Parameters whose first two Schmidt modes carry n0 and n1 signal photons.
pub fn params_with_mode_photons(n0: f64, n1: f64, rel_bw: f64) -> SpectralParams {
    let a0 = n0.sqrt().asinh();
    let a1 = n1.sqrt().asinh();
    let q = a1 / a0;
    let xi = a0 / (1.0 - q * q).sqrt();
    let rho = (1.0 + q) / (1.0 - q);
    let k = (rho * rho + 1.0) / (2.0 * rho);
    SpectralParams::from_schmidt_number(1.0, k, rel_bw, xi, 1.0).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}
