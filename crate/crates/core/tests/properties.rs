mod common;

use common::{rel, trapezoid};
use proptest::prelude::*;
use qlidar::gaussian::*;
use qlidar::measurement::*;
use qlidar::qfi_classical::*;
use qlidar::qfi_quantum::*;
use qlidar::spectral::*;
use qlidar::SpectralParams;

fn swap(p: &SpectralParams) -> SpectralParams {
    SpectralParams::new(p.omega0, p.epsilon, p.sigma, p.xi, p.mu).unwrap()
}

fn kp(k: f64, xi: f64) -> SpectralParams {
    SpectralParams::from_schmidt_number(1.0, k, 0.01, xi, 1.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sigma_epsilon_swap_is_invariant(k in 1.0f64..200.0, xi in 0.01f64..50.0, mu in 0.5f64..1.5) {
        let p = kp(k, xi).with_mu(mu);
        let q = swap(&p);
        let (a, b) = (schmidt_basis(&p, 1e-12).unwrap(), schmidt_basis(&q, 1e-12).unwrap());
        prop_assert_eq!(a.coefficients.len(), b.coefficients.len());
        for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
            prop_assert!((x * x - y * y).abs() <= 1e-15);
        }
        prop_assert!(rel(p.schmidt_number(), q.schmidt_number()) < 1e-14);
        let (ba, bb) = (qfi_quantum(&p).unwrap(), qfi_quantum(&q).unwrap());
        for (x, y) in [
            (ba.ln_photon_number, bb.ln_photon_number),
            (ba.ln_z_omega, bb.ln_z_omega),
            (ba.ln_z_sigma, bb.ln_z_sigma),
            (ba.ln_j_q, bb.ln_j_q),
        ] {
            prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
        prop_assert!(rel(pulse_duration_sq(&p).unwrap(), pulse_duration_sq(&q).unwrap()) < 1e-12);
    }

    #[test]
    fn schmidt_mass_and_number(k in 1.0f64..1000.0) {
        let b = schmidt_basis(&kp(k, 0.1), 1e-12).unwrap();
        prop_assert!((b.corrected_mass() - 1.0).abs() < 1e-10);
        prop_assert!(rel(b.schmidt_number_from_coefficients(), k) < 1e-10);
    }

    #[test]
    fn hermite_recurrences(n in 0usize..400, y in -30.0f64..30.0) {
        let v = hermite_fn_all(n + 1, y).unwrap();
        let nf = n as f64;
        let below = if n > 0 { v[n - 1] } else { 0.0 };
        // y phi_n = sqrt((n+1)/2) phi_{n+1} + sqrt(n/2) phi_{n-1}
        let mul = y * v[n] - ((nf + 1.0) / 2.0).sqrt() * v[n + 1] - (nf / 2.0).sqrt() * below;
        prop_assert!(mul.abs() < 1e-10 * y.abs().max(1.0), "mult residual {}", mul);
        // phi_n' = -y phi_n + sqrt(2n) phi_{n-1}
        let d = hermite_fn_deriv(n, y).unwrap();
        let alt = -y * v[n] + (2.0 * nf).sqrt() * below;
        prop_assert!((d - alt).abs() < 1e-10 * y.abs().max(1.0), "deriv residual {}", d - alt);
    }

    #[test]
    fn modes_are_orthonormal_with_expected_moments(k in 1.0f64..50.0, bw in 0.001f64..0.05) {
        let p = SpectralParams::from_schmidt_number(1.0, k, bw, 0.1, 1.0).unwrap();
        let b = schmidt_basis(&p, 1e-12).unwrap();
        let half = 14.0 / b.scale;
        let (lo, hi) = (0.5 - half, 0.5 + half);
        let n_grid = 1200;
        let grid: Vec<Vec<f64>> = (0..=n_grid)
            .map(|i| b.modes(10, lo + (hi - lo) * i as f64 / n_grid as f64).unwrap())
            .collect();
        let integ = |f: &dyn Fn(usize) -> f64| trapezoid(|w| f(((w - lo) / (hi - lo) * n_grid as f64).round() as usize), lo, hi, n_grid);
        for n in 0..=10 {
            for m in n..=10 {
                let o = integ(&|i| grid[i][n] * grid[i][m]);
                let expect = if n == m { 1.0 } else { 0.0 };
                prop_assert!((o - expect).abs() < 1e-8, "<{},{}> = {}", n, m, o);
            }
            let w_of = |i: usize| lo + (hi - lo) * i as f64 / n_grid as f64;
            let mean = integ(&|i| w_of(i) * grid[i][n] * grid[i][n]);
            let var = integ(&|i| (w_of(i) - 0.5).powi(2) * grid[i][n] * grid[i][n]);
            prop_assert!((mean - 0.5).abs() < 1e-10);
            prop_assert!(rel(var, p.sigma_epsilon() / 2.0 * (n as f64 + 0.5)) < 1e-8);
        }
    }

    #[test]
    fn truncation_never_decreases_sums(k in 1.5f64..100.0, xi in 0.01f64..100.0) {
        let p = kp(k, xi);
        let mut prev = qfi_quantum_truncated(&p, 1).unwrap();
        for n in 2..30 {
            let b = qfi_quantum_truncated(&p, n).unwrap();
            prop_assert!(b.ln_z_omega >= prev.ln_z_omega);
            prop_assert!(b.ln_z_sigma >= prev.ln_z_sigma);
            prop_assert!(b.ln_photon_number >= prev.ln_photon_number);
            prev = b;
        }
    }

    #[test]
    fn bandwidth_share_formula(k in 1.0f64..100.0, xi in 0.01f64..100.0) {
        let p = kp(k, xi);
        let b = qfi_quantum(&p).unwrap();
        let t = p.sigma_epsilon() / (p.omega0 * p.omega0);
        let expect = 1.0 / (1.0 + (b.ln_z_omega - b.ln_z_sigma).exp() / t);
        prop_assert!((b.bandwidth_share - expect).abs() <= 1e-12 * expect.max(1e-300));
        let regime = regime_of(xi, k, &RegimeThresholds::default());
        if matches!(regime, Regime::HighSqueezing | Regime::Mixed) {
            prop_assert!(b.bandwidth_share < 0.01, "{:?} share {}", regime, b.bandwidth_share);
        }
    }

    #[test]
    fn single_mode_reduction(xi in 0.0f64..20.0, mu in 0.5f64..2.0) {
        let p = kp(1.0, xi).with_mu(mu);
        let b = qfi_quantum(&p).unwrap();
        prop_assert_eq!(schmidt_basis(&p, 1e-12).unwrap().coefficients.len(), 1);
        let ns = xi.sinh().powi(2);
        // Single pair of modes: Z_omega = S (1 + 0) + 0, Z_sigma = 2 S
        let expect = ns / (mu * mu) * (1.0 / p.sigma_epsilon() + 2.0);
        if ns > 0.0 {
            prop_assert!(rel(b.j_q, expect) < 1e-13);
        } else {
            prop_assert_eq!(b.j_q, 0.0);
        }
    }

    #[test]
    fn narrowband_error_bounded(ratio in 5.0f64..200.0, wc in 0.5f64..5.0) {
        let dw = wc / ratio;
        let env = GaussianEnvelope::new(wc, dw).unwrap();
        let g = qfi_coherent_general(&CoherentProbe::new(1.0, env).unwrap(), 1.0).unwrap();
        let nb = qfi_coherent_narrowband(1.0, wc, env.duration_sq(), 1.0).unwrap();
        // Empirical constant c1 = 1.
        prop_assert!(rel(nb, g) <= (dw / wc).powi(2) * (1.0 + 1e-8));
    }

    #[test]
    fn transforms_are_symplectic(r in -3.0f64..3.0, eta in 0.0f64..=1.0, delta in -1e-2f64..1e-2) {
        let m = ["a", "b", "c"];
        prop_assert!(two_mode_squeezer(r, &m, ("a", "b")).unwrap().symplectic_deviation() < 1e-10);
        prop_assert!(beam_splitter(eta, &m, ("a", "c")).unwrap().symplectic_deviation() < 1e-10);
        let sc = LossScenario::new(0.5, 1.0, 100.0, 10.0, kp(10.0, 1.0)).unwrap();
        prop_assert!(basis_shift_lambda(delta, &sc).unwrap().symplectic_deviation() < 1e-10);
    }

    #[test]
    fn composition_and_physicality(r1 in -2.0f64..2.0, r2 in -2.0f64..2.0, eta in 0.0f64..=1.0) {
        let m = ["a", "b", "c"];
        let t1 = two_mode_squeezer(r1, &m, ("a", "b")).unwrap();
        let t2 = beam_splitter(eta, &m, ("a", "c")).unwrap();
        let t3 = two_mode_squeezer(r2, &m, ("b", "c")).unwrap();
        let v = GaussianState::vacuum(&m);
        let stepwise = v.apply(&t1).unwrap().apply(&t2).unwrap().apply(&t3).unwrap();
        let left = v.apply(&t3.compose(&t2.compose(&t1))).unwrap();
        let right = v.apply(&t3.compose(&t2).compose(&t1)).unwrap();
        let scale = stepwise.sigma().iter().map(|z| z.norm()).fold(1.0, f64::max);
        for other in [&left, &right] {
            let diff = (other.sigma() - stepwise.sigma()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(diff <= 1e-10 * scale, "diff {}", diff);
        }
        prop_assert!(stepwise.check_physical().is_ok());
        prop_assert!(stepwise.partial_trace(&["a", "c"]).unwrap().check_physical().is_ok());
        prop_assert!(stepwise.partial_trace(&["b"]).unwrap().check_physical().is_ok());
    }

    #[test]
    fn qfi_frame_invariance(r in 0.1f64..1.5, eta in 0.05f64..0.95, th in 0.2f64..1.0) {
        struct Fam { eta: f64, frame: Option<SymplecticTransform> }
        impl GaussianFamily for Fam {
            fn state(&self, t: f64) -> qlidar::Result<GaussianState> {
                let m = ["a", "b", "c"];
                let s = GaussianState::vacuum(&m)
                    .apply(&two_mode_squeezer(t, &m, ("a", "b"))?)?
                    .apply(&beam_splitter(self.eta, &m, ("a", "c"))?)?
                    .partial_trace(&["a", "b"])?;
                match &self.frame {
                    Some(g) => s.apply(g),
                    None => Ok(s),
                }
            }
        }
        let m = ["a", "b"];
        let g = beam_splitter(th, &m, ("a", "b")).unwrap().compose(&two_mode_squeezer(0.4, &m, ("a", "b")).unwrap());
        let o = QfiOptions::default();
        let j0 = gaussian_qfi(&Fam { eta, frame: None }, r, &o).unwrap().value;
        let j1 = gaussian_qfi(&Fam { eta, frame: Some(g) }, r, &o).unwrap().value;
        prop_assert!(rel(j1, j0) < 1e-6, "{} vs {}", j0, j1);
    }

    #[test]
    fn lambda_matches_mode_overlap(mu0 in 0.85f64..1.15, k in 1.5f64..50.0) {
        let p = SpectralParams::from_schmidt_number(1.0, k, 0.01, 1.0, 1.0).unwrap();
        let sc = LossScenario::new(0.5, mu0, 100.0, 10.0, p).unwrap();
        let b = schmidt_basis(&p, 1e-12).unwrap();
        let h = 1e-6;
        let half = 16.0 / (b.scale * mu0);
        let c0 = 0.5 / mu0;
        // <psi_m at mu | psi_n at mu0> in the frequency variable of the return beam.
        let overlap = |m: usize, n: usize, mu: f64| {
            trapezoid(|w| (mu * mu0).sqrt() * b.mode(m, mu * w).unwrap() * b.mode(n, mu0 * w).unwrap(), c0 - half, c0 + half, 6000)
        };
        let lam = |d: f64| basis_shift_lambda(d, &sc).unwrap().g;
        let (lp, lm) = (lam(h), lam(-h));
        // ladder indices of a0, a1, a2 in LOSS_MODES order
        for (m, n, i, j) in [(0usize, 1usize, 0usize, 2usize), (1, 2, 2, 4)] {
            let ov = (overlap(m, n, mu0 + h) - overlap(m, n, mu0 - h)) / (2.0 * h);
            let gen = (lp[(i, j)].re - lm[(i, j)].re) / (2.0 * h);
            prop_assert!((ov + gen).abs() <= 1e-6 * gen.abs(), "({},{}) overlap {} vs lambda {}", m, n, ov, gen);
        }
    }

    #[test]
    fn phase_configuration_is_invisible(z in -10.0f64..10.0, a in -1e3f64..1e3, b in -1e3f64..1e3,
                                        u in -3.0f64..3.0, v in -3.0f64..3.0, mu in 0.8f64..1.2) {
        let p = kp(10.0, 0.05);
        // offsets along the sum and difference axes, in units of their widths
        let (a_s, a_d) = (u * p.sigma / 2.0, v * p.epsilon / 2.0);
        let ev = DetectionEvent { omega: (0.5 + a_s + a_d) / mu, omega_tilde: 0.5 + a_s - a_d };
        let base = joint_spectrum_pdf(&ev, mu, &p);
        let amp = phase_dressed_amplitude(&ev, mu, &p, &PhaseConfig { zeta: z, varphi: a, vartheta: b });
        prop_assert!((amp.norm_sqr() / base - 1.0).abs() < 1e-12);
        prop_assert_eq!(phase_dressed_amplitude(&ev, mu, &p, &PhaseConfig::default()).im, 0.0);
    }
}

#[test]
fn regime_ladders_tighten() {
    let th = RegimeThresholds::default();
    let gap = |k: f64, xi: f64| classify_regime(&kp(k, xi), &th).unwrap().relative_gap.unwrap().abs();
    let he: Vec<f64> = [2.0, 1.0, 0.5, 0.25].iter().map(|&xi| gap(400.0, xi)).collect();
    assert!(he.windows(2).all(|w| w[1] < w[0]), "{he:?}");
    let mixed: Vec<f64> = [100.0, 400.0, 1600.0].iter().map(|&k| gap(k, k)).collect();
    assert!(mixed.windows(2).all(|w| w[1] < w[0]), "{mixed:?}");
    // High squeezing: the exact ratio settles on a fixed multiple of the
    // displayed asymptote; deeper points pin that multiple more tightly.
    let hs: Vec<f64> = [1e3, 1e4, 1e5]
        .iter()
        .map(|&xi| {
            let r = classify_regime(&kp(10.0, xi), &th).unwrap();
            (r.ln_exact_ratio - r.ln_asymptotic_ratio.unwrap()).exp()
        })
        .collect();
    assert!(hs.iter().all(|f| (f - 1.5).abs() < 1e-6), "{hs:?}");
}

#[test]
fn conditional_pdf_is_normalized() {
    let p = kp(10.0, 0.05);
    for mu in [0.7, 1.0, 1.3] {
        let f = |w: f64, wt: f64| conditional_pdf(&DetectionEvent { omega: w, omega_tilde: wt }, mu, &p);
        let sd = (p.schmidt_number() * p.sigma_epsilon()).sqrt() / 2.0;
        let r = qlidar::quadrature::integrate_2d(
            f,
            (0.5 / mu - 12.0 * sd / mu, 0.5 / mu + 12.0 * sd / mu),
            (0.5 - 12.0 * sd, 0.5 + 12.0 * sd),
            qlidar::quadrature::QuadOptions { abs_tol: 1e-300, rel_tol: 1e-11, max_intervals: 2000 },
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-8, "mu {mu}: {}", r.value);
    }
}

#[test]
fn binning_cannot_increase_fisher_information() {
    let p = kp(10.0, 0.05);
    let full = fisher_info_counting(1.0, &p).unwrap();
    let binned = fisher_info_binned(1.0, &p, 32).unwrap();
    assert!(binned <= full.value + full.error, "binned {binned} > full {}", full.value);
    assert!(binned > 0.0);
    let coarse = fisher_info_binned(1.0, &p, 4).unwrap();
    assert!(coarse <= binned);
}

#[test]
fn crb_saturates_with_more_replications() {
    // Same seed as the default study; 2000 replications put the sampling
    // spread of Var*M*F near 0.03 instead of 0.1.
    let cfg = CrbConfig { replications: 2000, ..CrbConfig::default() };
    let r = run_crb_study(&kp(10.0, 0.05), &cfg).unwrap();
    assert!(r.within_band, "Var*M*F = {}", r.normalized_variance);
    assert!(!r.sub_crb_significant);
    assert!(r.bias.abs() < 4.0 * r.bias_standard_error);
}
