//! QFI and SLD of Gaussian families.
//!
//! Two routes to the kappa -> 1 limit of
//! J = 1/2 vec[dS]† M_k^{-1} vec[dS] + 2 dd† S^{-1} dd,  M_k = k conj(S) (x) S - K (x) K:
//!
//! * Kronecker: dense LU solve at two values of kappa and Richardson
//!   extrapolation.
//! * Symplectic frame: S = T D T† with T K T† = K (up to ordering); in that
//!   frame M_1 is diagonal with entries d_i d_j - k_i k_j, so its inverse can
//!   be projected off the null space exactly. Used when the Kronecker route
//!   is ill-conditioned or the two kappa values disagree.

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{c, symplectic_form, CMat, CVec, GaussianState};
use crate::error::{Error, Result};

/// How the kappa -> 1 limit was realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QfiMethod {
    KappaRichardson,
    ProjectedInverse,
}

#[derive(Debug, Clone, Copy)]
pub struct QfiOptions {
    pub kappa1: f64,
    pub kappa2: f64,
    /// Relative disagreement between the two kappa evaluations that triggers
    /// the projected inverse.
    pub agreement: f64,
    /// LU pivot magnitude ratio above which the Kronecker solve is not
    /// trusted.
    pub max_pivot_ratio: f64,
    /// Relative size of d_i d_j - k_i k_j treated as zero in the frame route.
    pub null_tol: f64,
    /// Central-difference step for families without analytic derivatives.
    pub fd_step: f64,
    /// Skip the Kronecker route entirely.
    pub force_projected: bool,
}

impl Default for QfiOptions {
    fn default() -> Self {
        Self {
            kappa1: 1.0 - 1e-7,
            kappa2: 1.0 - 1e-8,
            agreement: 1e-6,
            max_pivot_ratio: 1e14,
            null_tol: 1e-7,
            fd_step: 1e-6,
            force_projected: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiEstimate {
    pub value: f64,
    pub sigma_term: f64,
    pub displacement_term: f64,
    pub method: QfiMethod,
}

/// A one-parameter family of Gaussian states.
pub trait GaussianFamily {
    fn state(&self, theta: f64) -> Result<GaussianState>;

    /// Analytic (d sigma/d theta, d d/d theta); `None` selects central
    /// differences.
    fn derivative(&self, _theta: f64) -> Option<Result<(CMat, CVec)>> {
        None
    }
}

/// Symplectic frame of a covariance matrix.
struct Frame {
    /// T^{-1}.
    t_inv: CMat,
    d: Vec<f64>,
    k: Vec<f64>,
}

fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

fn frame(sigma: &CMat) -> Result<Frame> {
    let n = sigma.nrows();
    let eig = SymmetricEigen::new(hermitize(sigma));
    if eig.eigenvalues.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::NonPhysical { min_eig: eig.eigenvalues.min() });
    }
    let u = &eig.eigenvectors;
    let sqrt_w = CMat::from_diagonal(&CVec::from_fn(n, |i, _| c(eig.eigenvalues[i].sqrt())));
    let isqrt_w = CMat::from_diagonal(&CVec::from_fn(n, |i, _| c(1.0 / eig.eigenvalues[i].sqrt())));
    let s_half = u * sqrt_w * u.adjoint();
    let s_ihalf = u * isqrt_w * u.adjoint();
    let h = hermitize(&(&s_half * symplectic_form(n / 2) * &s_half));
    let he = SymmetricEigen::new(h);
    let lam: Vec<f64> = he.eigenvalues.iter().cloned().collect();
    if lam.contains(&0.0) {
        return Err(Error::Singular("symplectic frame"));
    }
    let scale = CMat::from_diagonal(&CVec::from_fn(n, |i, _| c(lam[i].abs().sqrt())));
    let t_inv = scale * he.eigenvectors.adjoint() * s_ihalf;
    Ok(Frame { t_inv, d: lam.iter().map(|l| l.abs()).collect(), k: lam.iter().map(|l| l.signum()).collect() })
}

/// Solves sigma A sigma - K A K = dS in the frame, dropping null directions.
/// Returns (A, 1/2 tr[dS A]).
fn frame_solve(sigma: &CMat, dsigma: &CMat, null_tol: f64) -> Result<(CMat, f64)> {
    let f = frame(sigma)?;
    let n = sigma.nrows();
    let p = &f.t_inv * dsigma * f.t_inv.adjoint();
    let mut at = CMat::zeros(n, n);
    let mut j = 0.0;
    for i in 0..n {
        for l in 0..n {
            let dd = f.d[i] * f.d[l];
            let den = dd - f.k[i] * f.k[l];
            if den.abs() <= null_tol * dd {
                continue;
            }
            at[(i, l)] = p[(i, l)] / den;
            j += p[(i, l)].norm_sqr() / den;
        }
    }
    let a = f.t_inv.adjoint() * at * &f.t_inv;
    Ok((hermitize(&a), 0.5 * j))
}

fn kron_quadratic(sigma: &CMat, dsigma: &CMat, kappa: f64, max_pivot_ratio: f64) -> Option<f64> {
    let n = sigma.nrows();
    let k = symplectic_form(n / 2);
    let m = sigma.conjugate().kronecker(sigma) * c(kappa) - k.kronecker(&k);
    let lu = m.lu();
    let udiag: Vec<f64> = lu.u().diagonal().iter().map(|z| z.norm()).collect();
    let (lo, hi) = udiag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    if lo == 0.0 || hi / lo > max_pivot_ratio {
        return None;
    }
    // column-major vec
    let v = DVector::from_column_slice(dsigma.as_slice());
    let x = lu.solve(&v)?;
    let q: Complex64 = v.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum();
    q.re.is_finite().then_some(0.5 * q.re)
}

fn displacement_term(sigma: &CMat, dd: &CVec) -> Result<f64> {
    if dd.iter().all(|z| z.norm() == 0.0) {
        return Ok(0.0);
    }
    let x = sigma.clone().lu().solve(dd).ok_or(Error::Singular("sigma"))?;
    Ok(2.0 * dd.dotc(&x).re)
}

/// QFI of a Gaussian state given its moments and their derivatives.
pub fn qfi_from_moments(state: &GaussianState, dsigma: &CMat, dd: &CVec, opts: &QfiOptions) -> Result<QfiEstimate> {
    let sigma = state.sigma();
    if dsigma.shape() != sigma.shape() || dd.len() != sigma.nrows() {
        return Err(Error::param("derivative", "shape does not match the state"));
    }
    state.check_physical()?;
    let disp = displacement_term(sigma, dd)?;
    if dsigma.iter().all(|z| z.norm() == 0.0) {
        return Ok(QfiEstimate {
            value: disp,
            sigma_term: 0.0,
            displacement_term: disp,
            method: QfiMethod::KappaRichardson,
        });
    }
    if !opts.force_projected {
        let q1 = kron_quadratic(sigma, dsigma, opts.kappa1, opts.max_pivot_ratio);
        let q2 = kron_quadratic(sigma, dsigma, opts.kappa2, opts.max_pivot_ratio);
        if let (Some(q1), Some(q2)) = (q1, q2) {
            if (q1 - q2).abs() <= opts.agreement * q2.abs().max(f64::MIN_POSITIVE) {
                let (e1, e2) = (1.0 - opts.kappa1, 1.0 - opts.kappa2);
                let q0 = (e1 * q2 - e2 * q1) / (e1 - e2);
                return Ok(QfiEstimate {
                    value: q0 + disp,
                    sigma_term: q0,
                    displacement_term: disp,
                    method: QfiMethod::KappaRichardson,
                });
            }
        }
    }
    let (_, q) = frame_solve(sigma, dsigma, opts.null_tol)?;
    Ok(QfiEstimate { value: q + disp, sigma_term: q, displacement_term: disp, method: QfiMethod::ProjectedInverse })
}

fn family_derivative<F: GaussianFamily + ?Sized>(family: &F, theta0: f64, h: f64) -> Result<(CMat, CVec)> {
    if let Some(d) = family.derivative(theta0) {
        return d;
    }
    let p = family.state(theta0 + h)?;
    let m = family.state(theta0 - h)?;
    let inv = c(1.0 / (2.0 * h));
    Ok(((p.sigma() - m.sigma()) * inv, (p.d() - m.d()) * inv))
}

/// QFI of `family` at `theta0`.
pub fn gaussian_qfi<F: GaussianFamily + ?Sized>(family: &F, theta0: f64, opts: &QfiOptions) -> Result<QfiEstimate> {
    let state = family.state(theta0)?;
    let (ds, dd) = family_derivative(family, theta0, opts.fd_step)?;
    qfi_from_moments(&state, &ds, &dd, opts)
}

/// L = dR† A dR - 1/2 tr[sigma A] + 2 dR† sigma^{-1} dd.
#[derive(Debug, Clone, PartialEq)]
pub struct Sld {
    /// Basis labels of the ladder vector.
    pub basis: Vec<String>,
    pub a: CMat,
    /// -1/2 tr[sigma A].
    pub constant: f64,
    /// 2 sigma^{-1} dd.
    pub linear: CVec,
}

impl Sld {
    fn index(&self, label: &str, dagger: bool) -> Result<usize> {
        let name = if dagger { format!("{label}†") } else { label.to_string() };
        self.basis.iter().position(|b| *b == name).ok_or(Error::UnknownMode(name))
    }

    /// Coefficient of the operator product p q in dR† A dR, where each
    /// operator is (mode label, is_creation).
    pub fn bilinear_coefficient(&self, p: (&str, bool), q: (&str, bool)) -> Result<Complex64> {
        // (R_i)† = p means R_i is p with the dagger flipped.
        let i_p = self.index(p.0, !p.1)?;
        let j_q = self.index(q.0, q.1)?;
        if p == q {
            return Ok(self.a[(i_p, j_q)]);
        }
        let i_q = self.index(q.0, !q.1)?;
        let j_p = self.index(p.0, p.1)?;
        Ok(self.a[(i_p, j_q)] + self.a[(i_q, j_p)])
    }
}

/// SLD from moments, using the projected inverse in the symplectic frame.
pub fn sld_from_moments(state: &GaussianState, dsigma: &CMat, dd: &CVec, opts: &QfiOptions) -> Result<Sld> {
    state.check_physical()?;
    let sigma = state.sigma();
    let (a, _) = frame_solve(sigma, dsigma, opts.null_tol)?;
    let constant = -0.5 * (sigma * &a).trace().re;
    let linear = if dd.iter().all(|z| z.norm() == 0.0) {
        CVec::zeros(dd.len())
    } else {
        sigma.clone().lu().solve(dd).ok_or(Error::Singular("sigma"))? * c(2.0)
    };
    Ok(Sld { basis: super::ladder_labels(state.modes()), a, constant, linear })
}
