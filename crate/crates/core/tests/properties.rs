use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;
use shellnls_core::domain::{Coupling, Nonlinearity};
use shellnls_core::hankel::{hankel_forward, hankel_inverse, RadialGrid};
use shellnls_core::kernels::{o_ell, rho_symbol, t_lambda, LANDAU_NU_CAP, LANDAU_X_CAP};
use shellnls_core::specfun::{
    bessel_j_half, bessel_j_half_miller, bessel_j_half_upward, bessel_y_half, HalfIntOrder,
};
use shellnls_core::sphgrid::*;

/// `max_{ℓ≤128} |ρ(1/2,ℓ)|⟨ℓ⟩^{1/3}`, frozen.
const RHO_DECAY_CAP: f64 = 0.671_396_707_141_803_2;
/// `max λ^{1/3} T^λ_ℓ` over `λ ∈ [1, 1e4]`, `ℓ ≤ 64`; attained at `ℓ = 0`,
/// `λ = 1`.
const T_DECAY_CAP: f64 = 0.432_332_358_381_693_65;
/// Cap on `‖ν(g)‖_{H^{3/2}} / (‖g‖_∞ ‖g‖_{H^{3/2}})` at `σ = 1/2`; the
/// largest ratio seen over 300 random fields was 0.80.
const SCHAUDER_CAP: f64 = 1.0;

fn spectrum(l: usize, raw: &[(f64, f64)]) -> ChargeSpectrum {
    let coef = raw[..spectrum_len(l)]
        .iter()
        .map(|&(a, b)| Complex64::new(a, b))
        .collect();
    ChargeSpectrum::from_coefficients(l, coef).unwrap()
}

fn coefs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), spectrum_len(16))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn miller_and_upward_agree(ell in 4usize..=64, s in 0.0..1.0f64) {
        let x = ell as f64 * (0.5 + 1.5 * s);
        let (a, b) = (bessel_j_half_miller(ell, x), bessel_j_half_upward(ell, x));
        let scale = if x >= ell as f64 { a.abs() } else { b.hypot(bessel_y_half(ell, x)) };
        prop_assert!((a - b).abs() <= 1e-11 * scale, "{a} {b}");
    }

    #[test]
    fn landau_envelopes(ell in 0usize..=64, e in -3.0..4.0f64) {
        let x = 10f64.powf(e);
        let j = bessel_j_half(HalfIntOrder::new(ell).unwrap(), x).unwrap().abs();
        prop_assert!(x.cbrt() * j <= LANDAU_X_CAP);
        prop_assert!((ell as f64 + 0.5).cbrt() * j <= LANDAU_NU_CAP);
    }

    #[test]
    fn sht_round_trip_and_parseval(l in 0usize..=16, raw in coefs()) {
        let q = spectrum(l, &raw);
        let grid = Arc::new(SphereGrid::new(l));
        let f = sht_synthesis(&q, &grid).unwrap();
        prop_assert!(sht_analysis(&f, l).unwrap().max_abs_diff(&q) <= 1e-12);
        let coef2: f64 = q.coefficients().iter().map(|z| z.norm_sqr()).sum();
        let l2 = lp_norm(&f, 2.0).unwrap().powi(2);
        prop_assert!((coef2 - l2).abs() <= 1e-10 * coef2);
    }

    #[test]
    fn real_fields_have_conjugate_symmetric_coefficients(l in 1usize..=12, raw in coefs()) {
        let grid = Arc::new(SphereGrid::new(l));
        let f = sht_synthesis(&spectrum(l, &raw), &grid).unwrap().map(|z| Complex64::new(z.re, 0.0));
        prop_assert!(sht_analysis(&f, l).unwrap().real_symmetry_defect() <= 1e-13);
    }

    #[test]
    fn nu_is_phase_equivariant(l in 0usize..=8, raw in coefs(), theta in 0.0..TAU, sigma in 0.5..2.0f64) {
        let grid = Arc::new(SphereGrid::new(dealias_band(l, sigma)));
        let f = sht_synthesis(&spectrum(l, &raw), &grid).unwrap();
        let e = Complex64::from_polar(1.0, theta);
        let lhs = apply_nu(&f.map(|z| z * e), -0.7, sigma);
        let rhs = apply_nu(&f, -0.7, sigma).map(|z| z * e);
        for (a, b) in lhs.values().iter().zip(rhs.values()) {
            prop_assert!((a - b).norm() <= 1e-14 * a.norm().max(1.0));
        }
    }

    #[test]
    fn schauder_ratio_is_capped(l in 1usize..=16, raw in coefs()) {
        let q = spectrum(l, &raw);
        let grid = Arc::new(SphereGrid::new(dealias_band(l, 0.5)));
        let nu = nu_spectrum(&q, 1.0, 0.5, &grid).unwrap();
        let sup = lp_norm(&sht_synthesis(&q, &grid).unwrap(), f64::INFINITY).unwrap();
        let ratio = sobolev_norm(&nu, 1.5) / (sup * sobolev_norm(&q, 1.5));
        prop_assert!(ratio <= SCHAUDER_CAP, "{ratio}");
    }

    #[test]
    fn defocusing_potential_is_nonnegative(l in 0usize..=6, raw in coefs(), sigma in 0.5..2.0f64) {
        let nl = Nonlinearity::new(Coupling::Power { beta: 0.3, sigma }, l).unwrap();
        prop_assert!(nl.potential(&spectrum(l, &raw)).unwrap() >= 0.0);
    }

    #[test]
    fn symbol_conjugacy(ell in 0usize..=128, e in -2.0..1.0f64) {
        let tau = 10f64.powf(e);
        prop_assert!((rho_symbol(tau, ell).unwrap() - o_ell(tau, ell).unwrap().conj()).norm() <= 1e-14);
    }

    #[test]
    fn symbol_decay_in_ell(ell in 0usize..=128) {
        let v = rho_symbol(0.5, ell).unwrap().norm() * (1.0 + (ell * ell) as f64).sqrt().cbrt();
        prop_assert!(v <= RHO_DECAY_CAP * (1.0 + 1e-12));
    }

    #[test]
    fn t_lambda_decay(ell in 0usize..=64, e in 0.0..4.0f64) {
        let lam = 10f64.powf(e);
        let t = t_lambda(ell, lam).unwrap();
        prop_assert!(t > 0.0);
        prop_assert!(lam.cbrt() * t <= T_DECAY_CAP * (1.0 + 1e-12));
    }

    #[test]
    fn radial_grid_invariants(k_max in 1.0..400.0f64, panel in 0.3..3.0f64, points in 4usize..=64) {
        let g = RadialGrid::uniform(k_max, panel, points).unwrap();
        prop_assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        prop_assert!(g.weights().iter().all(|&w| w > 0.0));
        prop_assert!((g.weights().iter().sum::<f64>() - k_max).abs() <= 1e-12 * k_max.max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hankel_involution_on_gaussians(a in 0.5..2.0f64) {
        let r = RadialGrid::default_r(40.0).unwrap();
        let k = RadialGrid::uniform(30.0, 1.0, 48).unwrap();
        let g: Vec<Complex64> = r.nodes().iter().map(|x| Complex64::new((-a * x * x).exp(), 0.0)).collect();
        let gk = hankel_forward(&g, &r, 0, &k).unwrap();
        let probe: Vec<f64> = (1..=30).map(|i| 0.1 * i as f64).collect();
        let back = hankel_inverse(&gk, &k, 0, &probe).unwrap();
        for (x, v) in probe.iter().zip(&back) {
            prop_assert!((v - (-a * x * x).exp()).norm() <= 1e-6);
        }
    }
}
