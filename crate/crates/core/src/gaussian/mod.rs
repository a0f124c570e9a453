//! Gaussian states in the complex ladder basis R = (a0, a0†, a1, a1†, ...),
//! symplectic transforms, partial trace, the QFI/SLD kernel and the
//! photon-loss pipeline.

mod loss;
mod qfi;

pub use loss::{
    basis_shift_generator, basis_shift_lambda, lossless_two_mode_qfi, lossy_advantage, lossy_qfi_closed_form,
    lossy_qfi_pipeline, lossy_state, lossy_state_derivative, sld_operator, LossAdvantage, LossFamily, LossScenario,
    LOSS_MODES,
};
pub use qfi::{
    gaussian_qfi, qfi_from_moments, sld_from_moments, GaussianFamily, QfiEstimate, QfiMethod, QfiOptions, Sld,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Tolerance for symplecticity and physicality checks.
pub const SYMPLECTIC_TOL: f64 = 1e-10;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// diag(1, -1, 1, -1, ...) for `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> CMat {
    CMat::from_diagonal(&CVec::from_fn(2 * n_modes, |i, _| c(if i % 2 == 0 { 1.0 } else { -1.0 })))
}

/// Ladder-basis labels for a mode list: a0, a0†, a1, a1†, ...
pub fn ladder_labels(modes: &[String]) -> Vec<String> {
    modes.iter().flat_map(|m| [m.clone(), format!("{m}†")]).collect()
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn mode_index(modes: &[String], label: &str) -> Result<usize> {
    modes.iter().position(|m| m == label).ok_or_else(|| Error::UnknownMode(label.to_string()))
}

/// First and second moments of a Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    modes: Vec<String>,
    d: CVec,
    sigma: CMat,
}

impl GaussianState {
    /// Vacuum on the given modes: sigma = I, d = 0.
    pub fn vacuum<S: AsRef<str>>(modes: &[S]) -> Self {
        let modes: Vec<String> = modes.iter().map(|m| m.as_ref().to_string()).collect();
        let n = 2 * modes.len();
        Self { modes, d: CVec::zeros(n), sigma: CMat::identity(n, n) }
    }

    /// Builds a state after checking shape, Hermiticity, the ladder-basis
    /// conjugation pattern and physicality.
    pub fn new(modes: Vec<String>, d: CVec, sigma: CMat) -> Result<Self> {
        let n = 2 * modes.len();
        if d.len() != n || sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::param("sigma", format!("expected {n}x{n} for {} modes", modes.len())));
        }
        let s = Self { modes, d, sigma };
        s.check_structure()?;
        s.check_physical()?;
        Ok(s)
    }

    pub(crate) fn from_parts_unchecked(modes: Vec<String>, d: CVec, sigma: CMat) -> Self {
        Self { modes, d, sigma }
    }

    pub fn modes(&self) -> &[String] {
        &self.modes
    }

    pub fn d(&self) -> &CVec {
        &self.d
    }

    pub fn sigma(&self) -> &CMat {
        &self.sigma
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        mode_index(&self.modes, label)
    }

    fn check_structure(&self) -> Result<()> {
        let scale = max_abs(&self.sigma).max(1.0);
        let tol = SYMPLECTIC_TOL * scale;
        let herm = (&self.sigma - self.sigma.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > tol {
            return Err(Error::Domain(format!("sigma is not Hermitian (deviation {herm:e})")));
        }
        let n = self.modes.len();
        for i in 0..n {
            for j in 0..n {
                let s = &self.sigma;
                let a = (s[(2 * i, 2 * j)] - s[(2 * i + 1, 2 * j + 1)].conj()).norm();
                let b = (s[(2 * i, 2 * j + 1)] - s[(2 * i + 1, 2 * j)].conj()).norm();
                if a > tol || b > tol {
                    return Err(Error::Domain("sigma breaks the ladder-basis conjugation symmetry".into()));
                }
            }
            if (self.d[2 * i] - self.d[2 * i + 1].conj()).norm() > tol {
                return Err(Error::Domain("d breaks the ladder-basis conjugation symmetry".into()));
            }
        }
        Ok(())
    }

    /// Smallest eigenvalue of sigma + form.
    pub fn min_physical_eigenvalue(&self) -> f64 {
        let m = &self.sigma + symplectic_form(self.n_modes());
        let h = (&m + m.adjoint()) * c(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Checks sigma + form >= 0 within a tolerance scaled by |sigma|.
    pub fn check_physical(&self) -> Result<()> {
        let min_eig = self.min_physical_eigenvalue();
        if min_eig < -SYMPLECTIC_TOL * max_abs(&self.sigma).max(1.0) {
            return Err(Error::NonPhysical { min_eig });
        }
        Ok(())
    }

    /// sigma' = G sigma G†, d' = G d + b.
    pub fn apply(&self, t: &SymplecticTransform) -> Result<Self> {
        if t.g.nrows() != self.sigma.nrows() {
            return Err(Error::param("transform", "dimension does not match the state"));
        }
        let sigma = &t.g * &self.sigma * t.g.adjoint();
        let d = &t.g * &self.d + &t.b;
        Ok(Self { modes: self.modes.clone(), d, sigma })
    }

    /// Keeps only the listed modes (in the order given).
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::param("keep", "must name at least one mode"));
        }
        let mut idx = Vec::with_capacity(2 * keep.len());
        for k in keep {
            let m = self.mode_index(k.as_ref())?;
            idx.push(2 * m);
            idx.push(2 * m + 1);
        }
        let n = idx.len();
        let sigma = CMat::from_fn(n, n, |i, j| self.sigma[(idx[i], idx[j])]);
        let d = CVec::from_fn(n, |i, _| self.d[idx[i]]);
        Ok(Self { modes: keep.iter().map(|k| k.as_ref().to_string()).collect(), d, sigma })
    }

    /// JSON dump with row-major real/imaginary arrays and the basis order.
    pub fn to_dump(&self) -> MatrixDump {
        let n = self.sigma.nrows();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(self.sigma[(i, j)].re);
                im.push(self.sigma[(i, j)].im);
            }
        }
        MatrixDump {
            modes: self.modes.clone(),
            basis: ladder_labels(&self.modes),
            dim: n,
            sigma_re: re,
            sigma_im: im,
            d_re: self.d.iter().map(|z| z.re).collect(),
            d_im: self.d.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_dump()).expect("dump serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let dump: MatrixDump = serde_json::from_str(s).map_err(|e| Error::Domain(format!("bad matrix dump: {e}")))?;
        dump.into_state()
    }
}

/// Serialized form of a [`GaussianState`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDump {
    pub modes: Vec<String>,
    pub basis: Vec<String>,
    pub dim: usize,
    pub sigma_re: Vec<f64>,
    pub sigma_im: Vec<f64>,
    pub d_re: Vec<f64>,
    pub d_im: Vec<f64>,
}

impl MatrixDump {
    pub fn into_state(self) -> Result<GaussianState> {
        let n = self.dim;
        if self.sigma_re.len() != n * n || self.sigma_im.len() != n * n || self.d_re.len() != n || self.d_im.len() != n
        {
            return Err(Error::Domain("matrix dump has inconsistent lengths".into()));
        }
        let sigma = CMat::from_fn(n, n, |i, j| Complex64::new(self.sigma_re[i * n + j], self.sigma_im[i * n + j]));
        let d = CVec::from_fn(n, |i, _| Complex64::new(self.d_re[i], self.d_im[i]));
        GaussianState::new(self.modes, d, sigma)
    }
}

/// Affine symplectic map R -> G R + b.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    pub g: CMat,
    pub b: CVec,
}

impl SymplecticTransform {
    pub fn identity(n_modes: usize) -> Self {
        Self { g: CMat::identity(2 * n_modes, 2 * n_modes), b: CVec::zeros(2 * n_modes) }
    }

    /// Checked constructor.
    pub fn new(g: CMat, b: CVec) -> Result<Self> {
        let t = Self { g, b };
        if t.g.nrows() != t.g.ncols() || !t.g.nrows().is_multiple_of(2) || t.b.len() != t.g.nrows() {
            return Err(Error::param("g", "must be square with even dimension matching b"));
        }
        let dev = t.symplectic_deviation();
        if dev > SYMPLECTIC_TOL {
            return Err(Error::Domain(format!("matrix is not symplectic (deviation {dev:e})")));
        }
        Ok(t)
    }

    /// max |G form G† - form|.
    pub fn symplectic_deviation(&self) -> f64 {
        let k = symplectic_form(self.g.nrows() / 2);
        max_abs(&(&self.g * &k * self.g.adjoint() - k))
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SymplecticTransform) -> SymplecticTransform {
        SymplecticTransform { g: &self.g * &first.g, b: &self.g * &first.b + &self.b }
    }
}

fn embed(modes: &[String], pair: (&str, &str), block: [[f64; 4]; 4]) -> Result<SymplecticTransform> {
    let i = mode_index(modes, pair.0)?;
    let j = mode_index(modes, pair.1)?;
    if i == j {
        return Err(Error::param("mode_pair", "modes must differ"));
    }
    let idx = [2 * i, 2 * i + 1, 2 * j, 2 * j + 1];
    let mut t = SymplecticTransform::identity(modes.len());
    for (r, row) in block.iter().enumerate() {
        for (col, v) in row.iter().enumerate() {
            t.g[(idx[r], idx[col])] = c(*v);
        }
    }
    Ok(t)
}

/// Two-mode squeezer on (a, b) with squeezing `r`; block in
/// (a, a†, b, b†) is [[c,0,0,-s],[0,c,-s,0],[0,-s,c,0],[-s,0,0,c]].
pub fn two_mode_squeezer<S: AsRef<str>>(r: f64, modes: &[S], pair: (&str, &str)) -> Result<SymplecticTransform> {
    if !r.is_finite() {
        return Err(Error::param("r", "must be finite"));
    }
    let labels: Vec<String> = modes.iter().map(|m| m.as_ref().to_string()).collect();
    let (ch, sh) = (r.cosh(), r.sinh());
    embed(&labels, pair, [[ch, 0.0, 0.0, -sh], [0.0, ch, -sh, 0.0], [0.0, -sh, ch, 0.0], [-sh, 0.0, 0.0, ch]])
}

/// Beam splitter of transmissivity `eta` between signal `a` and auxiliary `c`.
pub fn beam_splitter<S: AsRef<str>>(eta: f64, modes: &[S], pair: (&str, &str)) -> Result<SymplecticTransform> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Domain(format!("transmissivity {eta} outside [0, 1]")));
    }
    let labels: Vec<String> = modes.iter().map(|m| m.as_ref().to_string()).collect();
    let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
    embed(&labels, pair, [[t, 0.0, r, 0.0], [0.0, t, 0.0, r], [-r, 0.0, t, 0.0], [0.0, -r, 0.0, t]])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two() -> Vec<&'static str> {
        vec!["a", "b"]
    }

    #[test]
    fn squeezer_on_vacuum() {
        let r = 0.8f64;
        let s = GaussianState::vacuum(&two()).apply(&two_mode_squeezer(r, &two(), ("a", "b")).unwrap()).unwrap();
        assert!((s.sigma()[(0, 0)].re - (2.0 * r).cosh()).abs() < 1e-12);
        assert!((s.sigma()[(0, 3)].re + (2.0 * r).sinh()).abs() < 1e-12);
        s.check_physical().unwrap();
        assert!(two_mode_squeezer(2.7, &two(), ("a", "b")).unwrap().symplectic_deviation() < 1e-10);
        assert_eq!(two_mode_squeezer(0.0, &two(), ("a", "b")).unwrap(), SymplecticTransform::identity(2));
    }

    #[test]
    fn beam_splitter_limits() {
        assert_eq!(beam_splitter(1.0, &two(), ("a", "b")).unwrap(), SymplecticTransform::identity(2));
        let swap = beam_splitter(0.0, &two(), ("a", "b")).unwrap();
        assert_eq!(swap.g[(0, 2)].re, 1.0);
        assert_eq!(swap.g[(2, 0)].re, -1.0);
        assert!(beam_splitter(1.5, &two(), ("a", "b")).is_err());
    }

    #[test]
    fn thermal_through_half_beam_splitter() {
        let n: f64 = 7.0;
        let st = GaussianState::vacuum(&["a", "b", "c"])
            .apply(&two_mode_squeezer(n.sqrt().asinh(), &["a", "b", "c"], ("a", "b")).unwrap())
            .unwrap()
            .apply(&beam_splitter(0.5, &["a", "b", "c"], ("a", "c")).unwrap())
            .unwrap()
            .partial_trace(&["a"])
            .unwrap();
        assert!((st.sigma()[(0, 0)].re - (n + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_of_squeezed_vacuum_is_thermal() {
        let r = 1.1f64;
        let s = GaussianState::vacuum(&two())
            .apply(&two_mode_squeezer(r, &two(), ("a", "b")).unwrap())
            .unwrap()
            .partial_trace(&["a"])
            .unwrap();
        let expect = 2.0 * r.sinh().powi(2) + 1.0;
        assert!((s.sigma() - CMat::identity(2, 2) * c(expect)).iter().all(|z| z.norm() < 1e-12));
        assert!(matches!(s.partial_trace(&["zz"]), Err(Error::UnknownMode(_))));
        let empty: [&str; 0] = [];
        assert!(s.partial_trace(&empty).is_err());
    }

    #[test]
    fn non_physical_rejected() {
        let sigma = CMat::identity(2, 2) * c(0.5);
        assert!(matches!(GaussianState::new(vec!["a".into()], CVec::zeros(2), sigma), Err(Error::NonPhysical { .. })));
    }

    #[test]
    fn dump_roundtrip() {
        let s = GaussianState::vacuum(&two()).apply(&two_mode_squeezer(0.3, &two(), ("a", "b")).unwrap()).unwrap();
        let back = GaussianState::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.to_dump().basis, vec!["a", "a†", "b", "b†"]);
    }
}
