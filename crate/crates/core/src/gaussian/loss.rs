//! Photon-loss pipeline: two squeezed Schmidt-mode pairs, a Doppler basis
//! shift, beam splitters into auxiliary modes and a partial trace.

use serde::{Deserialize, Serialize};

use super::qfi::{gaussian_qfi, sld_from_moments, GaussianFamily, QfiEstimate, QfiOptions, Sld};
use super::{beam_splitter, c, two_mode_squeezer, CMat, CVec, GaussianState, SymplecticTransform};
use crate::error::{Error, Result};
use crate::spectral::SpectralParams;

/// Mode order of the loss pipeline before the trace.
pub const LOSS_MODES: [&str; 8] = ["a0", "a1", "a2", "b0", "b1", "c0", "c1", "c2"];
const KEPT: [&str; 5] = ["a0", "a1", "a2", "b0", "b1"];

/// Loss model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossScenario {
    /// Round-trip transmissivity.
    pub eta: f64,
    /// Prior estimate of the Doppler parameter.
    pub mu0: f64,
    pub ns0: f64,
    pub ns1: f64,
    pub params: SpectralParams,
}

impl LossScenario {
    pub fn new(eta: f64, mu0: f64, ns0: f64, ns1: f64, params: SpectralParams) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::param("eta", format!("must lie in [0, 1], got {eta}")));
        }
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(Error::param("mu0", format!("must be > 0, got {mu0}")));
        }
        if !(ns1 >= 0.0 && ns0 >= ns1 && ns0.is_finite()) {
            return Err(Error::param("ns0/ns1", format!("need ns0 >= ns1 >= 0, got ({ns0}, {ns1})")));
        }
        if ns0 + ns1 == 0.0 {
            return Err(Error::param("ns0/ns1", "at least one mode must be populated"));
        }
        params.validate()?;
        Ok(Self { eta, mu0, ns0, ns1, params })
    }

    /// d g / d delta = omega0 / (2 mu0 sqrt(sigma eps)).
    pub fn coupling_rate(&self) -> f64 {
        self.params.omega0 / (2.0 * self.mu0 * self.params.sigma_epsilon().sqrt())
    }

    /// omega0^2 / (mu0^2 sigma eps), the natural QFI unit.
    pub fn qfi_unit(&self) -> f64 {
        let w = self.params.omega0 / self.mu0;
        w * w / self.params.sigma_epsilon()
    }
}

fn labels() -> Vec<String> {
    LOSS_MODES.iter().map(|s| s.to_string()).collect()
}

/// Antisymmetric generator coupling a0-a1 (weight 1) and a1-a2 (weight
/// sqrt 2) on both the annihilation and creation rows.
pub fn basis_shift_generator<S: AsRef<str>>(modes: &[S]) -> Result<CMat> {
    let labels: Vec<String> = modes.iter().map(|m| m.as_ref().to_string()).collect();
    let idx = |l: &str| super::mode_index(&labels, l);
    let (a0, a1, a2) = (idx("a0")?, idx("a1")?, idx("a2")?);
    let n = 2 * labels.len();
    let mut x = CMat::zeros(n, n);
    let r2 = 2f64.sqrt();
    for off in 0..2 {
        let (i0, i1, i2) = (2 * a0 + off, 2 * a1 + off, 2 * a2 + off);
        x[(i0, i1)] = c(1.0);
        x[(i1, i0)] = c(-1.0);
        x[(i1, i2)] = c(r2);
        x[(i2, i1)] = c(-r2);
    }
    Ok(x)
}

/// Basis change for mu = mu0 + delta, Lambda = exp(g X) with
/// g = delta omega0 / (2 mu0 sqrt(sigma eps)).
///
/// The exponential is exactly symplectic and agrees with the first-order
/// matrix I + g X to O(g^2).
pub fn basis_shift_lambda(delta: f64, scenario: &LossScenario) -> Result<SymplecticTransform> {
    if delta.abs() > 1e-2 * scenario.mu0 {
        log::warn!("basis shift |delta| = {} exceeds 1e-2 mu0; first-order mode expansion degrades", delta.abs());
    }
    let x = basis_shift_generator(&LOSS_MODES)?;
    let g = delta * scenario.coupling_rate();
    // X restricted to (a0, a1, a2) is a 3x3 rotation generator with |axis| = sqrt 3
    let theta = 3f64.sqrt();
    let x2 = &x * &x;
    let n = x.nrows();
    let lam = CMat::identity(n, n) + &x * c((g * theta).sin() / theta) + x2 * c((1.0 - (g * theta).cos()) / 3.0);
    Ok(SymplecticTransform { g: lam, b: CVec::zeros(n) })
}

fn squeezed(scenario: &LossScenario) -> Result<GaussianState> {
    let m = LOSS_MODES;
    GaussianState::vacuum(&m)
        .apply(&two_mode_squeezer(scenario.ns0.sqrt().asinh(), &m, ("a0", "b0"))?)?
        .apply(&two_mode_squeezer(scenario.ns1.sqrt().asinh(), &m, ("a1", "b1"))?)
}

fn loss_channel(eta: f64) -> Result<SymplecticTransform> {
    let m = LOSS_MODES;
    let b0 = beam_splitter(eta, &m, ("a0", "c0"))?;
    let b1 = beam_splitter(eta, &m, ("a1", "c1"))?;
    let b2 = beam_splitter(eta, &m, ("a2", "c2"))?;
    Ok(b2.compose(&b1).compose(&b0))
}

/// Full 16x16 state before the trace, at shift `delta`.
fn full_state(scenario: &LossScenario, delta: f64) -> Result<GaussianState> {
    squeezed(scenario)?.apply(&basis_shift_lambda(delta, scenario)?)?.apply(&loss_channel(scenario.eta)?)
}

/// Reduced state on (a0, a1, a2, b0, b1) at mu = mu0 + delta.
pub fn lossy_state(scenario: &LossScenario, delta: f64) -> Result<GaussianState> {
    full_state(scenario, delta)?.partial_trace(&KEPT)
}

/// Analytic derivative of the reduced moments with respect to delta.
pub fn lossy_state_derivative(scenario: &LossScenario, delta: f64) -> Result<(CMat, CVec)> {
    let shifted = squeezed(scenario)?.apply(&basis_shift_lambda(delta, scenario)?)?;
    let x = basis_shift_generator(&LOSS_MODES)?;
    let s = shifted.sigma();
    let ds = (&x * s + s * x.transpose()) * c(scenario.coupling_rate());
    let b = loss_channel(scenario.eta)?;
    let ds = &b.g * ds * b.g.adjoint();
    let tmp = GaussianState::from_parts_unchecked(labels(), CVec::zeros(16), ds);
    let reduced = tmp.partial_trace(&KEPT)?;
    Ok((reduced.sigma().clone(), CVec::zeros(10)))
}

/// The loss pipeline as a one-parameter family in delta.
pub struct LossFamily {
    pub scenario: LossScenario,
}

impl GaussianFamily for LossFamily {
    fn state(&self, delta: f64) -> Result<GaussianState> {
        lossy_state(&self.scenario, delta)
    }

    fn derivative(&self, delta: f64) -> Option<Result<(CMat, CVec)>> {
        Some(lossy_state_derivative(&self.scenario, delta))
    }
}

/// QFI of the lossy probe at mu0 from the covariance pipeline.
pub fn lossy_qfi_pipeline(scenario: &LossScenario) -> Result<QfiEstimate> {
    gaussian_qfi(&LossFamily { scenario: *scenario }, 0.0, &QfiOptions::default())
}

/// Closed-form lossy QFI
/// unit * eta (N0^2 (2N1+1) + 2 N0 N1 ((3-2eta) N1 + 2) + 3 N1^2) / (2(1-eta) N0 N1 + N0 + N1).
pub fn lossy_qfi_closed_form(scenario: &LossScenario) -> f64 {
    let (n0, n1, eta) = (scenario.ns0, scenario.ns1, scenario.eta);
    let num = n0 * n0 * (2.0 * n1 + 1.0) + 2.0 * n0 * n1 * ((3.0 - 2.0 * eta) * n1 + 2.0) + 3.0 * n1 * n1;
    let den = 2.0 * (1.0 - eta) * n0 * n1 + n0 + n1;
    scenario.qfi_unit() * eta * num / den
}

/// Lossless QFI of the two-mode truncated probe from the Z series:
/// unit * (2 N0 N1 + N0 + 3 N1).
pub fn lossless_two_mode_qfi(scenario: &LossScenario) -> f64 {
    let (n0, n1) = (scenario.ns0, scenario.ns1);
    scenario.qfi_unit() * (2.0 * n0 * n1 + n0 + 3.0 * n1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossAdvantage {
    pub j_quantum: f64,
    /// eta omega0^2 N_S dT^2 / mu0^2 with the two-mode N_S and duration.
    pub j_classical: f64,
    pub exact_ratio: f64,
    /// 1/(1 - eta); None at eta = 1.
    pub asymptote: Option<f64>,
}

/// Lossy advantage using the closed-form QFI. The classical benchmark uses
/// N_S = N0 + N1 and dT^2 = (N0 + 3 N1)/((N0 + N1) sigma eps).
pub fn lossy_advantage(scenario: &LossScenario) -> LossAdvantage {
    let (n0, n1) = (scenario.ns0, scenario.ns1);
    let j_quantum = lossy_qfi_closed_form(scenario);
    let j_classical = scenario.eta * scenario.qfi_unit() * (n0 + 3.0 * n1);
    let exact_ratio = if j_classical > 0.0 { j_quantum / j_classical } else { f64::NAN };
    let asymptote = (scenario.eta < 1.0).then(|| 1.0 / (1.0 - scenario.eta));
    LossAdvantage { j_quantum, j_classical, exact_ratio, asymptote }
}

/// SLD of the lossy probe at mu0.
pub fn sld_operator(scenario: &LossScenario) -> Result<Sld> {
    let st = lossy_state(scenario, 0.0)?;
    let (ds, dd) = lossy_state_derivative(scenario, 0.0)?;
    sld_from_moments(&st, &ds, &dd, &QfiOptions::default())
}
