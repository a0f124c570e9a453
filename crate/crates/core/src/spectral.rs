//! Hermite functions, the double-Gaussian joint spectral amplitude, its
//! Schmidt decomposition and Doppler kinematics.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest Hermite order accepted by [`hermite_fn`].
pub const HERMITE_MAX_ORDER: usize = 10_000;

/// Default Schmidt tail mass for [`schmidt_basis`].
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

/// Hard cap on the number of retained Schmidt modes.
pub const SCHMIDT_MAX_MODES: usize = 4096;

/// Physical configuration of the twin-beam probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    pub omega0: f64,
    pub sigma: f64,
    pub epsilon: f64,
    pub xi: f64,
    pub mu: f64,
}

impl SpectralParams {
    pub fn new(omega0: f64, sigma: f64, epsilon: f64, xi: f64, mu: f64) -> Result<Self> {
        let p = Self { omega0, sigma, epsilon, xi, mu };
        p.validate()?;
        if !p.is_narrowband() {
            log::warn!(
                "omega0/sigma = {:.3}, omega0/epsilon = {:.3}: outside the narrowband regime",
                omega0 / sigma,
                omega0 / epsilon
            );
        }
        Ok(p)
    }

    /// Builds parameters from the Schmidt number `k` and the relative
    /// bandwidth `rel_bw = sqrt(sigma*epsilon)/omega0`. The larger width is
    /// assigned to `sigma`.
    pub fn from_schmidt_number(omega0: f64, k: f64, rel_bw: f64, xi: f64, mu: f64) -> Result<Self> {
        if !(k >= 1.0 && k.is_finite()) {
            return Err(Error::param("K", format!("must be >= 1, got {k}")));
        }
        if !(rel_bw > 0.0 && rel_bw.is_finite()) {
            return Err(Error::param("bw", format!("must be > 0, got {rel_bw}")));
        }
        if !(omega0 > 0.0 && omega0.is_finite()) {
            return Err(Error::param("omega0", format!("must be > 0, got {omega0}")));
        }
        let se = (rel_bw * omega0).powi(2);
        let ratio = k + (k * k - 1.0).sqrt();
        let sigma = (se * ratio).sqrt();
        let epsilon = se / sigma;
        Self::new(omega0, sigma, epsilon, xi, mu)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be finite and > 0, got {v}")))
            }
        };
        pos("omega0", self.omega0)?;
        pos("sigma", self.sigma)?;
        pos("epsilon", self.epsilon)?;
        pos("mu", self.mu)?;
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(Error::param("xi", format!("must be finite and >= 0, got {}", self.xi)));
        }
        Ok(())
    }

    pub fn with_xi(mut self, xi: f64) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn sigma_epsilon(&self) -> f64 {
        self.sigma * self.epsilon
    }

    /// K = (sigma^2 + epsilon^2) / (2 sigma epsilon).
    pub fn schmidt_number(&self) -> f64 {
        (self.sigma * self.sigma + self.epsilon * self.epsilon) / (2.0 * self.sigma * self.epsilon)
    }

    /// sqrt(sigma*epsilon)/omega0.
    pub fn relative_bandwidth(&self) -> f64 {
        self.sigma_epsilon().sqrt() / self.omega0
    }

    /// True when omega0 exceeds both widths by at least a factor 10.
    pub fn is_narrowband(&self) -> bool {
        self.omega0 >= 10.0 * self.sigma && self.omega0 >= 10.0 * self.epsilon
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > HERMITE_MAX_ORDER {
        return Err(Error::Domain(format!("Hermite order {n} exceeds cap {HERMITE_MAX_ORDER}")));
    }
    Ok(())
}

/// Normalized Hermite functions phi_0..=phi_{n_max} at `y`.
///
/// The recurrence runs on an unscaled mantissa with periodic rescaling; the
/// Gaussian factor is applied at the end in log space so neither part
/// overflows or underflows prematurely.
pub fn hermite_fn_all(n_max: usize, y: f64) -> Result<Vec<f64>> {
    check_order(n_max)?;
    if !y.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {y}")));
    }
    const BIG: f64 = 1e150;
    let ln_big = BIG.ln();
    let g = -0.5 * y * y;
    let mut out = Vec::with_capacity(n_max + 1);
    let emit = |p: f64, ls: f64| if p == 0.0 { 0.0 } else { p.signum() * (p.abs().ln() + g + ls).exp() };
    let mut prev = 0.0f64;
    let mut cur = PI.powf(-0.25);
    let mut log_scale = 0.0;
    out.push(emit(cur, log_scale));
    for k in 0..n_max {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * y * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += ln_big;
        }
        out.push(emit(cur, log_scale));
    }
    Ok(out)
}

/// phi_n(y) = (2^n n! sqrt(pi))^{-1/2} H_n(y) exp(-y^2/2).
pub fn hermite_fn(n: usize, y: f64) -> Result<f64> {
    Ok(hermite_fn_all(n, y)?[n])
}

/// d phi_n / dy = sqrt(n/2) phi_{n-1} - sqrt((n+1)/2) phi_{n+1}.
pub fn hermite_fn_deriv(n: usize, y: f64) -> Result<f64> {
    check_order(n)?;
    let v = hermite_fn_all(n + 1, y)?;
    let nf = n as f64;
    let lower = if n > 0 { (nf / 2.0).sqrt() * v[n - 1] } else { 0.0 };
    Ok(lower - ((nf + 1.0) / 2.0).sqrt() * v[n + 1])
}

/// Truncated Schmidt decomposition of the double-Gaussian JSA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchmidtBasis {
    /// r_0..r_{N-1}, all nonnegative.
    pub coefficients: Vec<f64>,
    pub schmidt_number: f64,
    pub truncation_index: usize,
    /// 1 - sum of r_n^2 over the kept modes.
    pub tail_mass: f64,
    /// Geometric ratio |sigma - epsilon| / (sigma + epsilon).
    pub ratio: f64,
    /// True when epsilon > sigma: the n-th mode pair carries a (-1)^n sign.
    pub alternating: bool,
    /// Mode scale s = sqrt(2 / (sigma epsilon)).
    pub scale: f64,
    /// Mode centre omega0 / 2.
    pub center: f64,
}

/// Schmidt coefficients truncated at the smallest N with tail mass below
/// `tail_tol` (capped at [`SCHMIDT_MAX_MODES`]).
pub fn schmidt_basis(params: &SpectralParams, tail_tol: f64) -> Result<SchmidtBasis> {
    params.validate()?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(Error::param("tail_tol", format!("must lie in (0, 1), got {tail_tol}")));
    }
    let (s, e) = (params.sigma, params.epsilon);
    let q = (s - e).abs() / (s + e);
    let n_keep = if q == 0.0 {
        1
    } else {
        // tail after N modes is exactly q^(2N)
        let n = (tail_tol.ln() / (2.0 * q.ln())).ceil();
        let mut n = (n.max(1.0) as usize).min(SCHMIDT_MAX_MODES);
        while n < SCHMIDT_MAX_MODES && q.powi(2 * n as i32) >= tail_tol {
            n += 1;
        }
        n
    };
    let r0 = 2.0 * (s * e).sqrt() / (s + e);
    let mut coefficients = Vec::with_capacity(n_keep);
    let mut r = r0;
    for _ in 0..n_keep {
        coefficients.push(r);
        r *= q;
    }
    let tail_mass = if q == 0.0 { 0.0 } else { q.powf(2.0 * n_keep as f64) };
    Ok(SchmidtBasis {
        coefficients,
        schmidt_number: params.schmidt_number(),
        truncation_index: n_keep,
        tail_mass,
        ratio: q,
        alternating: e > s,
        scale: (2.0 / (s * e)).sqrt(),
        center: 0.5 * params.omega0,
    })
}

impl SchmidtBasis {
    /// r_n for any n, including indices past the truncation point.
    pub fn coefficient(&self, n: usize) -> f64 {
        if let Some(&r) = self.coefficients.get(n) {
            return r;
        }
        if self.ratio == 0.0 {
            return 0.0;
        }
        (1.0 - self.ratio * self.ratio).sqrt() * self.ratio.powf(n as f64)
    }

    /// Sign of the n-th mode-pair term in the decomposition.
    pub fn sign(&self, n: usize) -> f64 {
        if self.alternating && n % 2 == 1 {
            -1.0
        } else {
            1.0
        }
    }

    /// Sum of r_n^2 over kept modes plus the analytic geometric tail.
    pub fn corrected_mass(&self) -> f64 {
        self.coefficients.iter().map(|r| r * r).sum::<f64>() + self.tail_mass
    }

    /// (sum r_n^4)^-1 with the geometric tail of r^4 added back.
    pub fn schmidt_number_from_coefficients(&self) -> f64 {
        let q2 = self.ratio * self.ratio;
        let kept: f64 = self.coefficients.iter().map(|r| r.powi(4)).sum();
        let tail = if q2 == 0.0 {
            0.0
        } else {
            let n = self.truncation_index as f64;
            (1.0 - q2).powi(2) * q2.powf(2.0 * n) / (1.0 - q2 * q2)
        };
        1.0 / (kept + tail)
    }

    /// Schmidt mode psi_n at absolute frequency `omega`.
    pub fn mode(&self, n: usize, omega: f64) -> Result<f64> {
        Ok(self.scale.sqrt() * hermite_fn(n, self.scale * (omega - self.center))?)
    }

    /// All modes psi_0..psi_{n_max} at `omega`.
    pub fn modes(&self, n_max: usize, omega: f64) -> Result<Vec<f64>> {
        let sq = self.scale.sqrt();
        Ok(hermite_fn_all(n_max, self.scale * (omega - self.center))?.into_iter().map(|v| sq * v).collect())
    }

    /// Truncated Schmidt sum at (omega, omega_tilde).
    pub fn reconstruct(&self, omega: f64, omega_tilde: f64) -> Result<f64> {
        let n = self.truncation_index - 1;
        let a = self.modes(n, omega)?;
        let b = self.modes(n, omega_tilde)?;
        Ok((0..=n).map(|k| self.sign(k) * self.coefficients[k] * a[k] * b[k]).sum())
    }
}

/// Double-Gaussian joint spectral amplitude f(omega, omega_tilde).
pub fn jsa(omega: f64, omega_tilde: f64, params: &SpectralParams) -> f64 {
    let se = params.sigma_epsilon();
    let u = omega + omega_tilde - params.omega0;
    let w = omega - omega_tilde;
    (2.0 / (PI * se)).sqrt()
        * (-(u * u) / (2.0 * params.sigma * params.sigma) - (w * w) / (2.0 * params.epsilon * params.epsilon)).exp()
}

/// Reflected JSA: -mu^{1/2} f(mu omega, omega_tilde).
pub fn jsa_doppler(omega: f64, omega_tilde: f64, params: &SpectralParams) -> f64 {
    -params.mu.sqrt() * jsa(params.mu * omega, omega_tilde, params)
}

/// Velocity, speed of light and the resulting Doppler parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerKinematics {
    pub velocity: f64,
    pub speed_of_light: f64,
    pub mu: f64,
    /// d mu / d v.
    pub dmu_dv: f64,
}

/// mu = (1 - v/c)/(1 + v/c); positive v means a receding target.
pub fn doppler_mu(v: f64, c: f64) -> Result<DopplerKinematics> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::param("c", format!("must be > 0, got {c}")));
    }
    if !(v.abs() < c) {
        return Err(Error::Domain(format!("|v| = {} must be below c = {c}", v.abs())));
    }
    let beta = v / c;
    Ok(DopplerKinematics {
        velocity: v,
        speed_of_light: c,
        mu: (1.0 - beta) / (1.0 + beta),
        dmu_dv: -(2.0 / c) / ((1.0 + beta) * (1.0 + beta)),
    })
}

/// Error propagation J(v) = (d mu/d v)^2 J(mu).
pub fn qfi_velocity(j_mu: f64, kin: &DopplerKinematics) -> f64 {
    kin.dmu_dv * kin.dmu_dv * j_mu
}
