//! Adaptive Gauss-Kronrod integration and Gauss-Hermite rules.
//!
//! The 1D integrator is a globally adaptive G7/K15 scheme: the interval with
//! the largest error estimate is bisected until the summed estimate meets the
//! tolerance. The 2D integrator nests it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Tolerances and limits for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-14, rel_tol: 1e-12, max_intervals: 2000 }
    }
}

/// Result of an integration with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0f64; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let x = h * XGK[j];
        fv[j] = f(c - x);
        fv[14 - j] = f(c + x);
    }
    let mut kron = fv[7] * WGK[7];
    let mut gauss = fv[7] * WG[3];
    for j in 0..7 {
        let s = fv[j] + fv[14 - j];
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * kron;
    let mut resasc = WGK[7] * (fv[7] - mean).abs();
    for j in 0..7 {
        resasc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }
    let resasc = resasc * h.abs();
    // QUADPACK's scaling of |K - G|; much less pessimistic for smooth integrands.
    let mut err = ((kron - gauss) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    (kron * h, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]`. Returns an error if the tolerance is not
/// met within `max_intervals` subdivisions.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, opts: QuadOptions) -> Result<QuadResult> {
    let r = integrate_best_effort(&mut f, a, b, opts);
    let target = opts.abs_tol.max(opts.rel_tol * r.value.abs());
    if r.error > target || !r.value.is_finite() {
        return Err(Error::QuadratureNonConvergence { achieved: r.error, target });
    }
    Ok(r)
}

/// Same as [`integrate`] but always returns the last estimate.
pub fn integrate_best_effort<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, opts: QuadOptions) -> QuadResult {
    let (v, e) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut err = e;
    let mut evals = 15;
    while heap.len() < opts.max_intervals {
        if err <= opts.abs_tol.max(opts.rel_tol * total.abs()) {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let m = 0.5 * (worst.a + worst.b);
        if m <= worst.a || m >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(f, worst.a, m);
        let (v2, e2) = gk15(f, m, worst.b);
        evals += 30;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: m, value: v1, error: e1 });
        heap.push(Segment { a: m, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum from the pieces so the running update does not accumulate drift.
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = segs.iter().map(|s| s.value).sum();
    let error = segs.iter().map(|s| s.error).sum();
    QuadResult { value, error, evaluations: evals }
}

/// Nested adaptive integral of `f(x, y)` over a rectangle.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    (xa, xb): (f64, f64),
    (ya, yb): (f64, f64),
    opts: QuadOptions,
) -> Result<QuadResult> {
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol / (xb - xa).abs().max(1.0),
        rel_tol: opts.rel_tol * 0.1,
        max_intervals: opts.max_intervals,
    };
    // Inner integrals that meet their own tolerance contribute at most
    // rel_tol*|inner| + abs_tol each; ones that do not are charged in full.
    let mut missed = 0.0f64;
    let mut evals = 0usize;
    let outer = integrate_best_effort(
        &mut |x| {
            let r = integrate_best_effort(&mut |y| f(x, y), ya, yb, inner_opts);
            if r.error > inner_opts.abs_tol.max(inner_opts.rel_tol * r.value.abs()) {
                missed = missed.max(r.error);
            }
            evals += r.evaluations;
            r.value
        },
        xa,
        xb,
        opts,
    );
    let width = (xb - xa).abs();
    let error = outer.error + inner_opts.rel_tol * outer.value.abs() + (inner_opts.abs_tol + missed) * width;
    let target = opts.abs_tol.max(opts.rel_tol * outer.value.abs());
    if error > target || !outer.value.is_finite() {
        return Err(Error::QuadratureNonConvergence { achieved: error, target });
    }
    Ok(QuadResult { value: outer.value, error, evaluations: evals })
}

/// Gauss-Hermite nodes and weights for the weight `exp(-x^2)`, computed by
/// the Golub-Welsch eigenvalue method. Exact for polynomials of degree
/// `2n - 1`.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_hermite needs at least one node");
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jac[(i, i - 1)] = b;
        jac[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jac);
    let mu0 = std::f64::consts::PI.sqrt();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], mu0 * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}
