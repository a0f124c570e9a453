//! Frequency-resolved photon counting in the two-photon sector: pdf, Fisher
//! information, phase insensitivity, event sampling and maximum-likelihood
//! estimation with Cramer-Rao checks.

use std::io::Write;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, QuadOptions};
use crate::spectral::{jsa, SpectralParams};

/// One detected signal/idler frequency pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub omega: f64,
    pub omega_tilde: f64,
}

/// Squeezing, signal and idler phases of the generalized probe.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub zeta: f64,
    pub varphi: f64,
    pub vartheta: f64,
}

fn warn_if_not_two_photon(params: &SpectralParams) {
    if params.xi > 0.1 {
        log::warn!("xi = {} is outside the two-photon regime (xi <= 0.1)", params.xi);
    }
}

/// Pdf of a pair given that one was detected: mu f^2(mu omega, omega_tilde).
pub fn conditional_pdf(ev: &DetectionEvent, mu: f64, params: &SpectralParams) -> f64 {
    mu * jsa(mu * ev.omega, ev.omega_tilde, params).powi(2)
}

/// p_mu(omega, omega_tilde) = mu xi^2 f^2(mu omega, omega_tilde).
pub fn joint_spectrum_pdf(ev: &DetectionEvent, mu: f64, params: &SpectralParams) -> f64 {
    warn_if_not_two_photon(params);
    params.xi * params.xi * conditional_pdf(ev, mu, params)
}

/// d/d mu of ln p_mu at one event.
pub fn score(ev: &DetectionEvent, mu: f64, params: &SpectralParams) -> f64 {
    let u = mu * ev.omega + ev.omega_tilde - params.omega0;
    let v = mu * ev.omega - ev.omega_tilde;
    1.0 / mu - 2.0 * ev.omega * (u / (params.sigma * params.sigma) + v / (params.epsilon * params.epsilon))
}

/// Integration box covering the pair pdf to far below double precision.
fn pdf_window(mu: f64, params: &SpectralParams, width: f64) -> ((f64, f64), (f64, f64)) {
    let sd = (params.schmidt_number() * params.sigma_epsilon()).sqrt() / 2.0;
    let cw = params.omega0 / (2.0 * mu);
    let ct = params.omega0 / 2.0;
    ((cw - width * sd / mu, cw + width * sd / mu), (ct - width * sd, ct + width * sd))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherEstimate {
    pub value: f64,
    pub error: f64,
}

/// F(mu) = integral of (d_mu p)^2 / p over the pair pdf, by 2D quadrature.
pub fn fisher_info_counting(mu: f64, params: &SpectralParams) -> Result<FisherEstimate> {
    warn_if_not_two_photon(params);
    if !(mu > 0.0) {
        return Err(Error::param("mu", format!("must be > 0, got {mu}")));
    }
    let (wx, wy) = pdf_window(mu, params, 12.0);
    let r = integrate_2d(
        |w, wt| {
            let ev = DetectionEvent { omega: w, omega_tilde: wt };
            let p = conditional_pdf(&ev, mu, params);
            if p == 0.0 {
                return 0.0;
            }
            let s = score(&ev, mu, params);
            p * s * s
        },
        wx,
        wy,
        QuadOptions { abs_tol: 1e-300, rel_tol: 1e-10, max_intervals: 2000 },
    )?;
    let xi2 = params.xi * params.xi;
    Ok(FisherEstimate { value: xi2 * r.value, error: xi2 * r.error })
}

/// Fisher information per detected pair: (omega0^2 K/(sigma eps) + K^2 + 1) / mu^2.
pub fn pair_fisher_info(mu: f64, params: &SpectralParams) -> f64 {
    let k = params.schmidt_number();
    (params.omega0 * params.omega0 * k / params.sigma_epsilon() + k * k + 1.0) / (mu * mu)
}

/// Closed form (xi^2/mu^2)(omega0^2 K/(sigma eps) + K^2 + 1).
pub fn fisher_info_closed_form(mu: f64, params: &SpectralParams) -> f64 {
    params.xi * params.xi * pair_fisher_info(mu, params)
}

/// Fisher information of the same data coarse-grained onto an
/// `bins` x `bins` grid over the central window.
pub fn fisher_info_binned(mu: f64, params: &SpectralParams, bins: usize) -> Result<f64> {
    if bins == 0 {
        return Err(Error::param("bins", "must be >= 1"));
    }
    let (wx, wy) = pdf_window(mu, params, 8.0);
    let hx = (wx.1 - wx.0) / bins as f64;
    let hy = (wy.1 - wy.0) / bins as f64;
    let opts = QuadOptions { abs_tol: 1e-300, rel_tol: 1e-9, max_intervals: 500 };
    let cells: Vec<(usize, usize)> = (0..bins).flat_map(|i| (0..bins).map(move |j| (i, j))).collect();
    let terms: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let bx = (wx.0 + i as f64 * hx, wx.0 + (i + 1) as f64 * hx);
            let by = (wy.0 + j as f64 * hy, wy.0 + (j + 1) as f64 * hy);
            let ev = |w, wt| DetectionEvent { omega: w, omega_tilde: wt };
            let p = integrate_2d(|w, wt| conditional_pdf(&ev(w, wt), mu, params), bx, by, opts)
                .map(|r| r.value)
                .unwrap_or(0.0);
            if p <= 1e-300 {
                return 0.0;
            }
            let dp = integrate_2d(
                |w, wt| {
                    let e = ev(w, wt);
                    conditional_pdf(&e, mu, params) * score(&e, mu, params)
                },
                bx,
                by,
                opts,
            )
            .map(|r| r.value)
            .unwrap_or(0.0);
            dp * dp / p
        })
        .collect();
    Ok(params.xi * params.xi * terms.iter().sum::<f64>())
}

/// Two-photon amplitude of the phase-dressed probe:
/// -xi e^{-i zeta} mu^{1/2} f(mu nu, nu~) e^{-i nu varphi} e^{-i nu~ vartheta}.
pub fn phase_dressed_amplitude(ev: &DetectionEvent, mu: f64, params: &SpectralParams, ph: &PhaseConfig) -> Complex64 {
    let base = -params.xi * mu.sqrt() * jsa(mu * ev.omega, ev.omega_tilde, params);
    let phase = -(ph.zeta + ev.omega * ph.varphi + ev.omega_tilde * ph.vartheta);
    Complex64::from_polar(1.0, phase) * base
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseReport {
    /// Largest | |amp|^2 / p - 1 | over configs and grid points.
    pub max_rel_deviation: f64,
    /// Largest |Im| of the phase-free amplitude.
    pub max_phase_free_imag: f64,
    pub configs: usize,
    pub points: usize,
}

impl PhaseReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_deviation <= tol && self.max_phase_free_imag == 0.0
    }
}

/// Compares |amplitude|^2 for each phase configuration against the
/// phase-free pdf on a `grid` x `grid` lattice.
pub fn verify_phase_insensitivity(
    mu: f64,
    params: &SpectralParams,
    phases: &[PhaseConfig],
    grid: usize,
) -> PhaseReport {
    let (wx, wy) = pdf_window(mu, params, 4.0);
    let mut max_dev = 0.0f64;
    let mut max_imag = 0.0f64;
    let mut points = 0;
    let step = |r: (f64, f64), k: usize| r.0 + (r.1 - r.0) * k as f64 / (grid.max(2) - 1) as f64;
    for i in 0..grid {
        for j in 0..grid {
            let ev = DetectionEvent { omega: step(wx, i), omega_tilde: step(wy, j) };
            let p = joint_spectrum_pdf(&ev, mu, params);
            if p == 0.0 {
                continue;
            }
            points += 1;
            max_imag = max_imag.max(phase_dressed_amplitude(&ev, mu, params, &PhaseConfig::default()).im.abs());
            for ph in phases {
                let a = phase_dressed_amplitude(&ev, mu, params, ph).norm_sqr();
                max_dev = max_dev.max((a / p - 1.0).abs());
            }
        }
    }
    PhaseReport { max_rel_deviation: max_dev, max_phase_free_imag: max_imag, configs: phases.len(), points }
}

/// RNG for replication `stream` of a run seeded with `seed`. ChaCha streams
/// are independent, so replications can run in any order or in parallel.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `m` pairs from the conditional pdf using stream 0 of `seed`.
pub fn sample_photon_pairs(mu: f64, params: &SpectralParams, m: usize, seed: u64) -> Result<Vec<DetectionEvent>> {
    sample_photon_pairs_stream(mu, params, m, seed, 0)
}

/// u = mu omega + omega_tilde ~ N(omega0, sigma^2/2) and
/// v = mu omega - omega_tilde ~ N(0, eps^2/2) are independent under f^2, so
/// two normal draws and the inverse linear map sample the pdf exactly.
pub fn sample_photon_pairs_stream(
    mu: f64,
    params: &SpectralParams,
    m: usize,
    seed: u64,
    stream: u64,
) -> Result<Vec<DetectionEvent>> {
    if m == 0 {
        return Err(Error::param("M", "must be >= 1"));
    }
    if !(mu > 0.0) {
        return Err(Error::param("mu", format!("must be > 0, got {mu}")));
    }
    let mut rng = stream_rng(seed, stream);
    let su = params.sigma / 2f64.sqrt();
    let sv = params.epsilon / 2f64.sqrt();
    Ok((0..m)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            let u = params.omega0 + su * z1;
            let v = sv * z2;
            DetectionEvent { omega: 0.5 * (u + v) / mu, omega_tilde: 0.5 * (u - v) }
        })
        .collect())
}

/// Writes events as CSV with header `omega,omega_tilde`.
pub fn write_events_csv<W: Write>(events: &[DetectionEvent], mut w: W) -> std::io::Result<()> {
    writeln!(w, "omega,omega_tilde")?;
    for e in events {
        writeln!(w, "{:.17e},{:.17e}", e.omega, e.omega_tilde)?;
    }
    Ok(())
}

/// Log-likelihood of a fixed event list, held as sums of residuals about a
/// reference mu so evaluation is O(1) and free of cancellation.
#[derive(Debug, Clone)]
pub struct LogLikelihood {
    m: f64,
    mu_ref: f64,
    inv_s2: f64,
    inv_e2: f64,
    s_r1r1: f64,
    s_r1w: f64,
    s_r2r2: f64,
    s_r2w: f64,
    s_ww: f64,
}

impl LogLikelihood {
    pub fn new(events: &[DetectionEvent], params: &SpectralParams) -> Result<Self> {
        if events.is_empty() {
            return Err(Error::param("events", "must be nonempty"));
        }
        let mean_w = events.iter().map(|e| e.omega).sum::<f64>() / events.len() as f64;
        let mu_ref = params.omega0 / (2.0 * mean_w);
        let mut s = Self {
            m: events.len() as f64,
            mu_ref,
            inv_s2: 1.0 / (params.sigma * params.sigma),
            inv_e2: 1.0 / (params.epsilon * params.epsilon),
            s_r1r1: 0.0,
            s_r1w: 0.0,
            s_r2r2: 0.0,
            s_r2w: 0.0,
            s_ww: 0.0,
        };
        for e in events {
            let r1 = mu_ref * e.omega + e.omega_tilde - params.omega0;
            let r2 = mu_ref * e.omega - e.omega_tilde;
            s.s_r1r1 += r1 * r1;
            s.s_r1w += r1 * e.omega;
            s.s_r2r2 += r2 * r2;
            s.s_r2w += r2 * e.omega;
            s.s_ww += e.omega * e.omega;
        }
        Ok(s)
    }

    /// sum_i ln p_mu(event_i) up to a mu-independent constant.
    pub fn eval(&self, mu: f64) -> f64 {
        let dm = mu - self.mu_ref;
        let q1 = self.s_r1r1 + 2.0 * dm * self.s_r1w + dm * dm * self.s_ww;
        let q2 = self.s_r2r2 + 2.0 * dm * self.s_r2w + dm * dm * self.s_ww;
        self.m * mu.ln() - q1 * self.inv_s2 - q2 * self.inv_e2
    }

    pub fn len(&self) -> usize {
        self.m as usize
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0.0
    }
}

/// Maximizes `f` on [lo, hi] by Brent's method (golden section with
/// parabolic steps). Returns (x, f(x), iterations).
pub fn brent_maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64, usize) {
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let g = |x: f64| -f(x);
    let (mut a, mut b) = (lo, hi);
    let mut x = a + CGOLD * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut iter = 0;
    while iter < max_iter {
        iter += 1;
        let xm = 0.5 * (a + b);
        let tol1 = 4.0 * f64::EPSILON * x.abs() + tol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = g(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx, iter)
}

/// Tolerance on mu for the likelihood maximization.
pub const MLE_TOL: f64 = 1e-10;

/// One maximum-likelihood fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRun {
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: Option<u64>,
    pub mu_true: Option<f64>,
    pub mu_hat: f64,
    /// Per-pair Fisher information at mu_true (or mu_hat when unknown).
    pub fisher_info: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
}

/// mu_hat = argmax of the log-likelihood on `bracket`. A maximizer on the
/// bracket edge is reported as [`Error::BracketEdge`].
pub fn mle_estimate(events: &[DetectionEvent], params: &SpectralParams, bracket: (f64, f64)) -> Result<EstimationRun> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::param("mu_bracket", format!("need 0 < lo < hi, got ({lo}, {hi})")));
    }
    let ll = LogLikelihood::new(events, params)?;
    let (mu_hat, fmax, iterations) = brent_maximize(|m| ll.eval(m), lo, hi, MLE_TOL, 500);
    let edge = 1e3 * MLE_TOL.max(4.0 * f64::EPSILON * hi);
    if mu_hat - lo <= edge || hi - mu_hat <= edge {
        return Err(Error::BracketEdge { mu_hat, lo, hi });
    }
    Ok(EstimationRun {
        m: events.len(),
        seed: None,
        mu_true: None,
        mu_hat,
        fisher_info: pair_fisher_info(mu_hat, params),
        log_likelihood: fmax,
        iterations,
    })
}

/// Default search bracket around `mu`: wide enough to hold many standard
/// deviations of the estimator for `m` pairs.
pub fn default_bracket(mu: f64, params: &SpectralParams, m: usize) -> (f64, f64) {
    let sd = 1.0 / (m as f64 * pair_fisher_info(mu, params)).sqrt();
    let h = (0.01 * mu).max(50.0 * sd).min(0.5 * mu);
    (mu - h, mu + h)
}

/// Samples one replication and fits it.
pub fn simulate_run(
    mu_true: f64,
    params: &SpectralParams,
    m: usize,
    seed: u64,
    stream: u64,
    bracket: (f64, f64),
) -> Result<EstimationRun> {
    let ev = sample_photon_pairs_stream(mu_true, params, m, seed, stream)?;
    let mut run = mle_estimate(&ev, params, bracket)?;
    run.seed = Some(seed);
    run.mu_true = Some(mu_true);
    run.fisher_info = pair_fisher_info(mu_true, params);
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbConfig {
    pub mu_true: f64,
    pub m: usize,
    pub replications: usize,
    pub seed: u64,
    /// Band for Var * M * F.
    pub band: (f64, f64),
    /// One-sided significance level for the sub-CRB test.
    pub alpha: f64,
}

impl Default for CrbConfig {
    fn default() -> Self {
        Self { mu_true: 1.0, m: 10_000, replications: 200, seed: 20_240_611, band: (0.9, 1.1), alpha: 0.01 }
    }
}

/// Monte Carlo summary of repeated MLE fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrbReport {
    pub mu_true: f64,
    /// Mean of the estimates.
    pub mu_hat: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
    pub replications: usize,
    /// Per-pair Fisher information at mu_true.
    pub fisher_info: f64,
    /// Sample variance of the estimates.
    pub variance: f64,
    /// variance * M * F.
    pub normalized_variance: f64,
    pub bias: f64,
    pub bias_standard_error: f64,
    /// (n-1) s^2 / crb, chi-square with n-1 dof under saturation.
    pub chi2_statistic: f64,
    /// P(chi2 <= statistic); small values signal variance below the bound.
    pub chi2_lower_tail: f64,
    pub sub_crb_significant: bool,
    pub within_band: bool,
    pub estimates: Vec<f64>,
}

/// Runs `replications` independent fits, one RNG stream each, in parallel.
/// Results are merged by replication index, so they do not depend on the
/// thread count.
pub fn run_crb_study(params: &SpectralParams, cfg: &CrbConfig) -> Result<CrbReport> {
    if cfg.replications < 2 {
        return Err(Error::param("replications", "need at least 2"));
    }
    if cfg.m == 0 {
        return Err(Error::param("M", "must be >= 1"));
    }
    let bracket = default_bracket(cfg.mu_true, params, cfg.m);
    let estimates: Vec<f64> = (0..cfg.replications)
        .into_par_iter()
        .map(|r| simulate_run(cfg.mu_true, params, cfg.m, cfg.seed, r as u64, bracket).map(|run| run.mu_hat))
        .collect::<Result<_>>()?;
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let f = pair_fisher_info(cfg.mu_true, params);
    let crb = 1.0 / (cfg.m as f64 * f);
    let stat = (n - 1.0) * var / crb;
    let chi = ChiSquared::new(n - 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let lower = chi.cdf(stat);
    let normalized = var / crb;
    Ok(CrbReport {
        mu_true: cfg.mu_true,
        mu_hat: mean,
        m: cfg.m,
        seed: cfg.seed,
        replications: cfg.replications,
        fisher_info: f,
        variance: var,
        normalized_variance: normalized,
        bias: mean - cfg.mu_true,
        bias_standard_error: (var / n).sqrt(),
        chi2_statistic: stat,
        chi2_lower_tail: lower,
        sub_crb_significant: lower < cfg.alpha,
        within_band: normalized >= cfg.band.0 && normalized <= cfg.band.1,
        estimates,
    })
}
