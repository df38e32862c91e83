mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use dwell::evolve::{prepare_state, DensityMatrix, InitialStateSpec};
use dwell::observe::{
    energy_stats, fringe_visibility, measured_decoherence_time, negativity_volume, observe, position_distribution,
    well_probabilities, wigner, WignerSpec,
};

use common::{default_spectrum, harmonic_eigensystem, random_state, rng, C};

const OMEGA: f64 = 25.0;

fn fine_spec() -> WignerSpec<f64> {
    WignerSpec { x_stride: 1, p_max: Some(6.0 * OMEGA.sqrt()), dp: Some(0.05 * OMEGA.sqrt()) }
}

#[test]
fn harmonic_ground_state_is_the_gaussian() {
    let eig = harmonic_eigensystem(OMEGA, 6, 128);
    let rho = DensityMatrix::basis_state(6, 0);
    let w = wigner(&rho, &eig, &fine_spec()).unwrap();
    for (i, &x) in w.x_nodes.iter().enumerate() {
        for (j, &p) in w.p_nodes.iter().enumerate() {
            let exact = (-OMEGA * x * x - p * p / OMEGA).exp() / PI;
            assert!((w.values[(i, j)] - exact).abs() < 1e-8, "W({x},{p})");
        }
    }
    // the peak 1/π sits at x = 0, half a spacing from the nearest node
    assert!((w.max() - 1.0 / PI).abs() < 1e-2 / PI);
    assert!((w.total() - 1.0).abs() < 1e-8);
    assert!(negativity_volume(&w) < 1e-8);
    assert!(fringe_visibility(&w) < 1e-8);
}

#[test]
fn first_excited_state_has_the_known_negativity() {
    let eig = harmonic_eigensystem(OMEGA, 6, 128);
    let rho = DensityMatrix::basis_state(6, 1);
    let w = wigner(&rho, &eig, &fine_spec()).unwrap();
    let centre = w.x_nodes.len() / 2;
    let origin = w.p_nodes.len() / 2;
    // the even grid has no node at x = 0; W(x, 0) = (1/π)(2ωx² - 1)e^{-ωx²}
    let x = w.x_nodes[centre];
    let exact = (2.0 * OMEGA * x * x - 1.0) * (-OMEGA * x * x).exp() / PI;
    assert!((w.values[(centre, origin)] - exact).abs() < 1e-8);
    let expect = 2.0 * (2.0 * (-0.5f64).exp() - 1.0);
    assert!((negativity_volume(&w) - expect).abs() < 5e-3, "{}", negativity_volume(&w));
    assert!(fringe_visibility(&w) > 0.9);
}

#[test]
fn default_lattice_resolves_the_cat() {
    let spectrum = default_spectrum();
    let cat = prepare_state(&InitialStateSpec::cat(spectrum.x_min, 1.0 / 200f64.sqrt()), &spectrum.eig).unwrap();
    let w = wigner(&cat.rho, &spectrum.eig, &WignerSpec::default()).unwrap();
    assert!((w.total() - 1.0).abs() < 1e-6);
    assert!(w.max() <= 1.0 / PI + 1e-6 && w.min() >= -1.0 / PI - 1e-6);
    let delta = negativity_volume(&w);
    assert!(delta > 0.1 && delta < 1.0, "{delta}");
    assert!(fringe_visibility(&w) > 0.5);
    let (record, grid) = observe(0.0, &cat.rho, &spectrum.eig, spectrum.x_min, Some(&WignerSpec::default())).unwrap();
    assert_eq!(record.negativity_volume, delta);
    assert!(grid.is_some());
    assert!((record.p_left - record.p_right).abs() < 1e-10);
    assert!((record.p_left + record.p_right + record.p_barrier - 1.0).abs() < 1e-8);
    assert!(record.p_barrier < 1e-2);
    let (bare, none) = observe(0.0, &cat.rho, &spectrum.eig, spectrum.x_min, None).unwrap();
    assert!(bare.negativity_volume.is_nan() && none.is_none() && bare.fringe_visibility.is_none());
}

#[test]
fn mixture_of_packets_has_no_fringes() {
    let spectrum = default_spectrum();
    let width = 1.0 / 200f64.sqrt();
    let right = prepare_state(&InitialStateSpec::localized(spectrum.x_min, width), &spectrum.eig).unwrap();
    let left = prepare_state(&InitialStateSpec::localized(-spectrum.x_min, width), &spectrum.eig).unwrap();
    let mixed = (right.rho.matrix() + left.rho.matrix()) * C::new(0.5, 0.0);
    let mixed = DensityMatrix::from_matrix(mixed).unwrap();
    let w = wigner(&mixed, &spectrum.eig, &WignerSpec::default()).unwrap();
    assert!(negativity_volume(&w) < 1e-3, "{}", negativity_volume(&w));
    assert!((mixed.purity() - 0.5).abs() < 1e-3);
}

#[test]
fn localized_packet_sits_in_one_well() {
    let spectrum = default_spectrum();
    let right = prepare_state(&InitialStateSpec::localized(spectrum.x_min, 1.0 / 200f64.sqrt()), &spectrum.eig).unwrap();
    let sigma = position_distribution(&right.rho, &spectrum.eig).unwrap();
    let p = well_probabilities(&sigma, spectrum.eig.grid(), spectrum.x_min);
    assert!(p.right > 0.99);
    assert!(p.imbalance() > 0.98);
}

#[test]
fn mismatched_inputs_are_rejected() {
    let eig = harmonic_eigensystem(OMEGA, 4, 64);
    let rho = DensityMatrix::basis_state(3, 0);
    assert!(position_distribution(&rho, &eig).is_err());
    assert!(energy_stats(&rho, &eig).is_err());
    let ok = DensityMatrix::basis_state(4, 0);
    let bad = WignerSpec { x_stride: 0, ..WignerSpec::default() };
    assert!(wigner(&ok, &eig, &bad).is_err());
    let neg = WignerSpec { dp: Some(-1.0), ..WignerSpec::default() };
    assert!(wigner(&ok, &eig, &neg).is_err());
}

#[test]
fn single_precision_wigner_tracks_double() {
    let eig64 = harmonic_eigensystem(OMEGA, 4, 64);
    let grid = dwell::spectral::SpatialGrid::new(eig64.grid().half_width() as f32, 64).unwrap();
    let v: Vec<f32> = grid.nodes().iter().map(|&x| 0.5 * (OMEGA * OMEGA) as f32 * x * x).collect();
    let eig32 = dwell::spectral::solve_eigensystem(&v, &grid, 4, dwell::spectral::KineticScheme::Sinc).unwrap();
    let w32 = wigner(&DensityMatrix::<f32>::basis_state(4, 0), &eig32, &WignerSpec::default()).unwrap();
    let w64 = wigner(&DensityMatrix::<f64>::basis_state(4, 0), &eig64, &WignerSpec::default()).unwrap();
    assert!((w32.max() as f64 - w64.max()).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn wigner_marginals_are_the_densities(seed in any::<u64>()) {
        let n = 6;
        let eig = harmonic_eigensystem(OMEGA, n, 96);
        let rho = DensityMatrix::from_matrix(random_state(&mut rng(seed), n)).unwrap();
        let w = wigner(&rho, &eig, &fine_spec()).unwrap();
        let sigma = position_distribution(&rho, &eig).unwrap();
        for (k, m) in w.x_marginal().iter().enumerate() {
            prop_assert!((m - sigma[k]).abs() < 1e-6 * (1.0 + sigma[k]), "x marginal at {}", k);
        }
        // the momentum density of |ψ⟩ = Σ c_n |n⟩ follows from ψ̃_n(p) = (-i)^n ψ_n(p/ω)/√ω
        let psi_p = |p: f64| -> Vec<C> {
            let u = p / OMEGA.sqrt();
            let mut h = vec![0.0; n];
            h[0] = (-0.5 * u * u).exp() / PI.powf(0.25);
            h[1] = 2f64.sqrt() * u * h[0];
            for k in 2..n {
                h[k] = (2.0 / k as f64).sqrt() * u * h[k - 1] - ((k - 1) as f64 / k as f64).sqrt() * h[k - 2];
            }
            let mut sign = C::new(1.0, 0.0);
            (0..n).map(|k| {
                let out = sign * h[k] / OMEGA.powf(0.25);
                sign *= C::new(0.0, -1.0);
                out
            }).collect()
        };
        let phase: Vec<f64> = (0..n).map(|k| {
            // align the solver's sign convention with the Hermite functions
            let i = eig.grid().n_points() / 2;
            let x = eig.grid().nodes()[i] * OMEGA.sqrt();
            let mut h = vec![0.0; n];
            h[0] = (-0.5 * x * x).exp();
            h[1] = 2f64.sqrt() * x * h[0];
            for j in 2..n {
                h[j] = (2.0 / j as f64).sqrt() * x * h[j - 1] - ((j - 1) as f64 / j as f64).sqrt() * h[j - 2];
            }
            (eig.eigenfunctions()[(i, k)] * h[k]).signum()
        }).collect();
        let m = rho.matrix();
        for (j, &p) in w.p_nodes.iter().enumerate() {
            let f = psi_p(p);
            let mut density = C::new(0.0, 0.0);
            for a in 0..n {
                for b in 0..n {
                    density += m[(a, b)] * f[a] * phase[a] * (f[b] * phase[b]).conj();
                }
            }
            let marginal = w.p_marginal()[j];
            prop_assert!((marginal - density.re).abs() < 1e-6, "p marginal at {}: {} vs {}", p, marginal, density.re);
        }
    }

    #[test]
    fn energy_statistics_ignore_coherences(seed in any::<u64>()) {
        let eig = &default_spectrum().eig;
        let n = eig.n_states();
        let rho = random_state(&mut rng(seed), n);
        let diag = DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| rho[(k, k)]));
        let full = energy_stats(&DensityMatrix::from_matrix(rho).unwrap(), eig).unwrap();
        let dephased = energy_stats(&DensityMatrix::from_matrix(diag).unwrap(), eig).unwrap();
        prop_assert_eq!(full.mean, dephased.mean);
        prop_assert_eq!(full.dispersion, dephased.dispersion);
        prop_assert!(full.mean >= eig.energies()[0] - 1e-9);
        prop_assert!(full.dispersion >= 0.0);
    }

    #[test]
    fn zones_partition_the_density(seed in any::<u64>()) {
        let spectrum = default_spectrum();
        let rho = DensityMatrix::from_matrix(random_state(&mut rng(seed), spectrum.eig.n_states())).unwrap();
        let sigma = position_distribution(&rho, &spectrum.eig).unwrap();
        let p = well_probabilities(&sigma, spectrum.eig.grid(), spectrum.x_min);
        prop_assert!((p.left + p.right + p.barrier - 1.0).abs() < 1e-8);
        prop_assert!(p.left >= -1e-12 && p.right >= -1e-12 && p.barrier >= -1e-12);
    }

    #[test]
    fn decoherence_time_lies_in_its_bracket(drops in proptest::collection::vec(0.0f64..1.0, 2..30)) {
        let mut delta = vec![1.0];
        for d in &drops {
            let last = *delta.last().unwrap();
            delta.push(last * d);
        }
        let times: Vec<f64> = (0..delta.len()).map(|k| k as f64 * 0.1).collect();
        if let Some(t) = measured_decoherence_time(&times, &delta, 0.05) {
            let k = delta.iter().position(|&d| d < 0.05).unwrap();
            prop_assert!(t > times[k - 1] - 1e-12 && t <= times[k] + 1e-12);
        } else {
            prop_assert!(delta.iter().all(|&d| d >= 0.05));
        }
    }
}
