//! Coherent-state benchmark: the general spectral QFI integral and its
//! narrowband closed form.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Tolerance on the envelope normalization.
pub const NORMALIZATION_TOL: f64 = 1e-8;

/// A real spectral amplitude f(omega) with unit L2 norm.
pub trait Envelope: Sync {
    fn amplitude(&self, omega: f64) -> f64;

    /// Analytic derivative. `None` selects the central-difference fallback.
    fn derivative(&self, _omega: f64) -> Option<f64> {
        None
    }

    /// Integration window carrying all of the mass.
    fn window(&self) -> (f64, f64);

    /// Characteristic width, used for the finite-difference step.
    fn width(&self) -> f64;
}

/// Gaussian amplitude f ~ exp(-(omega - omega_c)^2 / (2 dw^2)).
///
/// `delta_omega` is the amplitude width; the spectral intensity |f|^2 has
/// variance dw^2/2 and the pulse duration is dT^2 = 1/(2 dw^2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelope {
    pub omega_c: f64,
    pub delta_omega: f64,
}

impl GaussianEnvelope {
    pub fn new(omega_c: f64, delta_omega: f64) -> Result<Self> {
        if !(delta_omega > 0.0 && delta_omega.is_finite()) {
            return Err(Error::param("delta_omega", format!("must be > 0, got {delta_omega}")));
        }
        if !omega_c.is_finite() {
            return Err(Error::param("omega_c", "must be finite"));
        }
        Ok(Self { omega_c, delta_omega })
    }

    pub fn duration_sq(&self) -> f64 {
        1.0 / (2.0 * self.delta_omega * self.delta_omega)
    }
}

impl Envelope for GaussianEnvelope {
    fn amplitude(&self, omega: f64) -> f64 {
        let x = (omega - self.omega_c) / self.delta_omega;
        (PI * self.delta_omega * self.delta_omega).powf(-0.25) * (-0.5 * x * x).exp()
    }

    fn derivative(&self, omega: f64) -> Option<f64> {
        let d2 = self.delta_omega * self.delta_omega;
        Some(-(omega - self.omega_c) / d2 * self.amplitude(omega))
    }

    fn window(&self) -> (f64, f64) {
        (self.omega_c - 12.0 * self.delta_omega, self.omega_c + 12.0 * self.delta_omega)
    }

    fn width(&self) -> f64 {
        self.delta_omega
    }
}

/// Raised-cosine amplitude f = c cos^2(pi (omega - omega_c) / (2 W)) on
/// |omega - omega_c| < W.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaisedCosineEnvelope {
    pub omega_c: f64,
    pub half_width: f64,
}

impl RaisedCosineEnvelope {
    pub fn new(omega_c: f64, half_width: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::param("half_width", format!("must be > 0, got {half_width}")));
        }
        Ok(Self { omega_c, half_width })
    }

    /// Envelope with the given duration dT^2 = integral of f'^2.
    pub fn with_duration_sq(omega_c: f64, duration_sq: f64) -> Result<Self> {
        Self::new(omega_c, PI / (3.0 * duration_sq).sqrt())
    }

    pub fn duration_sq(&self) -> f64 {
        PI * PI / (3.0 * self.half_width * self.half_width)
    }

    fn norm(&self) -> f64 {
        (4.0 / (3.0 * self.half_width)).sqrt()
    }
}

impl Envelope for RaisedCosineEnvelope {
    fn amplitude(&self, omega: f64) -> f64 {
        let x = omega - self.omega_c;
        if x.abs() >= self.half_width {
            return 0.0;
        }
        self.norm() * (PI * x / (2.0 * self.half_width)).cos().powi(2)
    }

    fn derivative(&self, omega: f64) -> Option<f64> {
        let x = omega - self.omega_c;
        if x.abs() >= self.half_width {
            return Some(0.0);
        }
        Some(-self.norm() * PI / (2.0 * self.half_width) * (PI * x / self.half_width).sin())
    }

    fn window(&self) -> (f64, f64) {
        (self.omega_c - self.half_width, self.omega_c + self.half_width)
    }

    fn width(&self) -> f64 {
        self.half_width
    }
}

/// A coherent probe with mean photon number `amplitude_sq` = alpha^2.
pub struct CoherentProbe<E: Envelope> {
    pub amplitude_sq: f64,
    pub envelope: E,
}

impl<E: Envelope> CoherentProbe<E> {
    pub fn new(amplitude_sq: f64, envelope: E) -> Result<Self> {
        if !(amplitude_sq >= 0.0 && amplitude_sq.is_finite()) {
            return Err(Error::param("amplitude_sq", format!("must be >= 0, got {amplitude_sq}")));
        }
        Ok(Self { amplitude_sq, envelope })
    }

    fn derivative_at(&self, omega: f64, warned: &mut bool) -> f64 {
        match self.envelope.derivative(omega) {
            Some(d) => d,
            None => {
                if !*warned {
                    log::warn!("envelope has no analytic derivative; using central differences");
                    *warned = true;
                }
                let h = 1e-6 * self.envelope.width();
                (self.envelope.amplitude(omega + h) - self.envelope.amplitude(omega - h)) / (2.0 * h)
            }
        }
    }

    /// Integral of f^2 over the window.
    pub fn norm_sq(&self) -> Result<f64> {
        let (a, b) = self.envelope.window();
        Ok(integrate(|w| self.envelope.amplitude(w).powi(2), a, b, opts())?.value)
    }

    /// Duration dT^2 = integral of f'^2 (real envelopes have zero mean time).
    pub fn duration_sq(&self) -> Result<f64> {
        let (a, b) = self.envelope.window();
        let mut warned = false;
        Ok(integrate(|w| self.derivative_at(w, &mut warned).powi(2), a, b, opts())?.value)
    }

    /// Mean frequency of |f|^2.
    pub fn mean_frequency(&self) -> Result<f64> {
        let (a, b) = self.envelope.window();
        Ok(integrate(|w| w * self.envelope.amplitude(w).powi(2), a, b, opts())?.value)
    }
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_intervals: 4000 }
}

/// J_c = (4 alpha^2 / mu^2) * integral (f/2 + omega f')^2 d omega.
pub fn qfi_coherent_general<E: Envelope>(probe: &CoherentProbe<E>, mu: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::param("mu", format!("must be > 0, got {mu}")));
    }
    let norm = probe.norm_sq()?;
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::NotNormalized { norm });
    }
    if probe.amplitude_sq == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = probe.envelope.window();
    let mut warned = false;
    let integral = integrate(
        |w| {
            let g = 0.5 * probe.envelope.amplitude(w) + w * probe.derivative_at(w, &mut warned);
            g * g
        },
        a,
        b,
        opts(),
    )?
    .value;
    Ok(4.0 * probe.amplitude_sq / (mu * mu) * integral)
}

/// Narrowband form J_c = 4 omega_c^2 N_c dT^2 / mu^2.
pub fn qfi_coherent_narrowband(n_c: f64, omega_c: f64, delta_t_sq: f64, mu: f64) -> Result<f64> {
    if !(n_c >= 0.0 && delta_t_sq >= 0.0 && omega_c >= 0.0) {
        return Err(Error::param("n_c/omega_c/delta_t_sq", "must be nonnegative"));
    }
    if !(mu > 0.0) {
        return Err(Error::param("mu", format!("must be > 0, got {mu}")));
    }
    Ok(4.0 * omega_c * omega_c * n_c * delta_t_sq / (mu * mu))
}
