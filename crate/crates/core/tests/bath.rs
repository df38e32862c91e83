mod common;

use std::f64::consts::PI;

use proptest::prelude::*;

use dwell::bath::{
    asymptotic_coefficients, assemble_pair_matrices, compute_coefficients, spectral_density, BathModel,
    CoefficientMode, CoefficientTable, GapIndex,
};

use common::{coefficient_oracle, default_spectrum, time_transform};

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

#[test]
fn closed_forms_match_frequency_quadrature() {
    let cases = [
        (0.2, 2000.0, 100.0, 1e-3),
        (0.2, 2000.0, 100.0, 1e-2),
        (1.0, 20.0, 0.3, 0.5),
        (1.0, 20.0, 55.0, 0.2),
        (0.5, 200.0, 200.0, 0.05),
        (0.5, 200.0, 0.019, 0.1),
        (2.0, 2.0, 5.0, 3.0),
    ];
    for &(g0, lam, delta, t) in &cases {
        let bath = BathModel::new(g0, lam).unwrap();
        let c = compute_coefficients(&bath, delta, t).unwrap();
        let o = coefficient_oracle(g0, lam, delta, t);
        let scale = g0 * lam;
        assert!(rel(c.d_normal, o[0], scale) < 1e-6, "D at {delta},{t}: {} vs {}", c.d_normal, o[0]);
        assert!(rel(c.f_anomalous, o[1], g0) < 1e-5, "f at {delta},{t}: {} vs {}", c.f_anomalous, o[1]);
        assert!(rel(c.gamma_dissipation, o[2], g0) < 1e-5, "gamma at {delta},{t}: {} vs {}", c.gamma_dissipation, o[2]);
        assert!(rel(c.omega_shift_sq, o[3], scale) < 1e-5, "shift at {delta},{t}: {} vs {}", c.omega_shift_sq, o[3]);
    }
}

#[test]
fn kernels_transform_into_the_coefficients() {
    let bath = BathModel::new(0.3, 50.0).unwrap();
    for &(delta, t) in &[(7.0, 0.05), (40.0, 0.4), (120.0, 1.3)] {
        let c = compute_coefficients(&bath, delta, t).unwrap();
        // ∫ ν e^{iΔs} = D - iΔf and ∫ η e^{-iΔs} = -Ω̃²/2 - iΔγ
        let noise = time_transform(|s| bath.noise_kernel(s), delta, t);
        let diss = time_transform(|s| bath.dissipation_kernel(s), -delta, t);
        let scale = 0.3 * 50.0;
        assert!((noise.re - c.d_normal).abs() < 1e-8 * scale, "D {} vs {}", noise.re, c.d_normal);
        assert!((-noise.im / delta - c.f_anomalous).abs() < 1e-8, "f {} vs {}", -noise.im / delta, c.f_anomalous);
        assert!((-diss.im / delta - c.gamma_dissipation).abs() < 1e-10);
        assert!((-2.0 * diss.re - c.omega_shift_sq).abs() < 1e-10 * scale);
    }
}

#[test]
fn long_time_limits_are_reached() {
    let bath = BathModel::new(0.4, 300.0).unwrap();
    for &delta in &[2.0, 30.0, 299.0, 900.0] {
        let late = compute_coefficients(&bath, delta, 1e4 / 300.0).unwrap();
        let inf = asymptotic_coefficients(&bath, delta);
        let lorentz = 300.0f64.powi(2) / (300.0f64.powi(2) + delta * delta);
        assert!((inf.d_normal - 0.5 * PI * spectral_density(&bath, delta).unwrap()).abs() < 1e-12 * inf.d_normal);
        assert!((inf.gamma_dissipation - 0.4 * lorentz).abs() < 1e-14);
        assert!(rel(late.d_normal, inf.d_normal, inf.d_normal) < 1e-3, "D({delta})");
        assert!(rel(late.gamma_dissipation, inf.gamma_dissipation, inf.gamma_dissipation) < 1e-3);
        assert!(rel(late.omega_shift_sq, inf.omega_shift_sq, inf.omega_shift_sq.abs()) < 1e-3);
        assert!(rel(late.f_anomalous, inf.f_anomalous, inf.f_anomalous.abs().max(0.4)) < 1e-2, "f({delta})");
    }
}

#[test]
fn anomalous_coefficient_grows_with_log_cutoff() {
    let delta = 37.0;
    let f: Vec<f64> = [1e2, 1e3, 1e4, 1e5]
        .iter()
        .map(|&lam| compute_coefficients(&BathModel::new(0.5, lam).unwrap(), delta, 50.0).unwrap().f_anomalous)
        .collect();
    let step = 10f64.ln() * 2.0 / PI * 0.5;
    for w in f.windows(2).skip(1) {
        assert!(((w[1] - w[0]) - step).abs() < 0.02 * step, "{:?}", f);
    }
}

#[test]
fn coefficient_table_is_conjugation_symmetric_and_reuses_gaps() {
    let spectrum = default_spectrum();
    let bath = BathModel::new(0.2, 2000.0).unwrap();
    let table = assemble_pair_matrices(&spectrum.eig, &bath, 0.01).unwrap();
    assert!(table.conjugation_defect() < 1e-14);
    let index = GapIndex::new(&spectrum.eig);
    let n = spectrum.eig.n_states();
    assert!(index.gaps().len() <= n * (n - 1) / 2 + 1);
    assert_eq!(index.gaps()[0], 0.0);
    for a in 0..n {
        assert_eq!(table.diffusion()[(a, a)].im, 0.0);
    }
    let mut frozen = CoefficientTable::zeros(n);
    frozen.refresh(&index, &bath, 0.0, CoefficientMode::FrozenAsymptotic).unwrap();
    assert_eq!(frozen.mode(), CoefficientMode::FrozenAsymptotic);
    assert!(frozen.conjugation_defect() < 1e-14);
}

#[test]
fn rejects_invalid_inputs() {
    assert!(BathModel::new(-1.0, 10.0).is_err());
    assert!(BathModel::new(1.0, f64::INFINITY).is_err());
    assert!(BathModel::with_temperature(1.0, 10.0, 0.1).is_err());
    let bath = BathModel::new(1.0, 10.0).unwrap();
    assert!(compute_coefficients(&bath, 1.0, -1.0).is_err());
    assert!(spectral_density(&bath, -0.5).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let b64 = BathModel::new(0.2f64, 2000.0).unwrap();
    let b32 = BathModel::new(0.2f32, 2000.0).unwrap();
    let c64 = compute_coefficients(&b64, 100.0, 0.01).unwrap();
    let c32 = compute_coefficients(&b32, 100.0f32, 0.01).unwrap();
    assert!((c32.d_normal as f64 - c64.d_normal).abs() < 1e-4 * c64.d_normal.abs());
    assert!((c32.gamma_dissipation as f64 - c64.gamma_dissipation).abs() < 1e-4 * 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn coefficients_are_even_in_the_gap(delta in 1e-3f64..500.0, t in 1e-5f64..2.0, lam in 1.0f64..5000.0) {
        let bath = BathModel::new(0.7, lam).unwrap();
        let p = compute_coefficients(&bath, delta, t).unwrap();
        let m = compute_coefficients(&bath, -delta, t).unwrap();
        prop_assert_eq!(p.d_normal, m.d_normal);
        prop_assert_eq!(p.f_anomalous, m.f_anomalous);
        prop_assert_eq!(p.gamma_dissipation, m.gamma_dissipation);
        prop_assert_eq!(p.omega_shift_sq, m.omega_shift_sq);
        let dp = p.diffusion_pair(delta);
        let dm = m.diffusion_pair(-delta);
        prop_assert_eq!(dp.conj(), dm);
        prop_assert_eq!(p.dissipation_pair(delta).conj(), m.dissipation_pair(-delta));
    }

    #[test]
    fn coefficients_are_linear_in_coupling(delta in 0.0f64..500.0, t in 1e-5f64..2.0, g in 0.01f64..10.0) {
        let one = compute_coefficients(&BathModel::new(1.0, 800.0).unwrap(), delta, t).unwrap();
        let many = compute_coefficients(&BathModel::new(g, 800.0).unwrap(), delta, t).unwrap();
        let close = |a: f64, b: f64| (a - g * b).abs() <= 1e-12 * (a.abs() + (g * b).abs()) + 1e-300;
        prop_assert!(close(many.d_normal, one.d_normal));
        prop_assert!(close(many.f_anomalous, one.f_anomalous));
        prop_assert!(close(many.gamma_dissipation, one.gamma_dissipation));
        prop_assert!(close(many.omega_shift_sq, one.omega_shift_sq));
        let zero = compute_coefficients(&BathModel::new(0.0, 800.0).unwrap(), delta, t).unwrap();
        prop_assert_eq!(zero.d_normal, 0.0);
        prop_assert_eq!(zero.gamma_dissipation, 0.0);
    }

    #[test]
    fn small_gap_limit_joins_smoothly(t in 1e-5f64..1.0) {
        let bath = BathModel::new(0.5, 2000.0).unwrap();
        let at_zero = compute_coefficients(&bath, 0.0, t).unwrap();
        let near = compute_coefficients(&bath, 1e-2, t).unwrap();
        prop_assert!((at_zero.d_normal - near.d_normal).abs() < 1e-6 * 0.5 * 2000.0);
        prop_assert!((at_zero.gamma_dissipation - near.gamma_dissipation).abs() < 1e-6);
        prop_assert!((at_zero.omega_shift_sq - near.omega_shift_sq).abs() < 1e-6 * 0.5 * 2000.0);
        prop_assert!((at_zero.f_anomalous - near.f_anomalous).abs() < 1e-4 * (1.0 + at_zero.f_anomalous.abs()));
    }
}
