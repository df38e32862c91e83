mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use dwell::spectral::{
    build_potential, check_coverage, minimal_coverage, solve_converged, solve_eigensystem, tunneling_time_instanton,
    tunneling_time_numeric, KineticScheme, Parity, PotentialParams, SpatialGrid,
};

use common::{default_spectrum, harmonic_eigensystem, shell_eigensystem};

/// Tunneling time from an independent high-resolution solve of the default well.
const TAU_REFERENCE: f64 = 158.272151;
/// `(3/8)√(πΩ/2V₀) Ω⁻¹ e^{S₀}` at `Ω = 100`, `V₀ = 200`.
const TAU_INSTANTON_REFERENCE: f64 = 142.577397;

#[test]
fn harmonic_levels_and_matrix_elements() {
    let omega = 100.0;
    let eig = harmonic_eigensystem(omega, 12, 256);
    for (k, &e) in eig.energies().iter().enumerate() {
        assert!((e - omega * (k as f64 + 0.5)).abs() < 1e-9 * omega, "level {k}: {e}");
    }
    let x = eig.x_matrix();
    for k in 0..11 {
        let expect = ((k + 1) as f64 / (2.0 * omega)).sqrt();
        assert!((x[(k, k + 1)].abs() - expect).abs() < 1e-9, "x[{k},{}]", k + 1);
    }
    assert!(eig.orthonormality_defect() < 1e-12);
}

#[test]
fn finite_difference_schemes_converge_at_their_order() {
    let omega: f64 = 4.0;
    let grid = SpatialGrid::new(10.0 / omega.sqrt(), 200).unwrap();
    for (order, scheme) in [(2, KineticScheme::FiniteDifference { order: 2 }), (4, KineticScheme::FiniteDifference { order: 4 })] {
        let err = |g: &SpatialGrid<f64>| {
            let v: Vec<f64> = g.nodes().iter().map(|&x| 0.5 * omega * omega * x * x).collect();
            let eig = solve_eigensystem(&v, g, 4, scheme).unwrap();
            (eig.energies()[3] - 3.5 * omega).abs()
        };
        let ratio = err(&grid) / err(&grid.refined());
        let expect = 2f64.powi(order);
        assert!(ratio > 0.7 * expect && ratio < 1.4 * expect, "order {order}: ratio {ratio}");
    }
    let v: Vec<f64> = grid.nodes().iter().map(|&x| 0.5 * omega * omega * x * x).collect();
    assert!(solve_eigensystem(&v, &grid, 4, KineticScheme::FiniteDifference { order: 3 }).is_err());
}

#[test]
fn default_well_reproduces_the_reference_tunneling_time() {
    let s = default_spectrum();
    assert!((s.tau - TAU_REFERENCE).abs() < 1e-6 * TAU_REFERENCE, "{}", s.tau);
    let inst = s.instanton.unwrap();
    assert!((inst.tau - TAU_INSTANTON_REFERENCE).abs() < 1e-6 * TAU_INSTANTON_REFERENCE);
    assert!((inst.action - 32.0 / 3.0).abs() < 1e-12);
    assert!(inst.semiclassical);
    assert!(s.convergence.unwrap().drift < 1e-6);
    assert!((s.gap() - 3.0 / TAU_REFERENCE).abs() < 1e-6 * s.gap());
}

#[test]
fn default_well_has_alternating_parities_and_selection_rules() {
    let eig = &default_spectrum().eig;
    let n = eig.n_states();
    for (k, p) in eig.parities().iter().enumerate() {
        assert_eq!(*p, if k % 2 == 0 { Parity::Even } else { Parity::Odd }, "state {k}");
    }
    let x = eig.x_matrix();
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for a in 0..n {
        for b in 0..n {
            assert_eq!(x[(a, b)], x[(b, a)]);
            if eig.parities()[a] == eig.parities()[b] {
                assert!(x[(a, b)].abs() < 1e-12 * scale, "x[{a},{b}] = {}", x[(a, b)]);
            }
        }
    }
    // the doublet is the tunneling pair: ⟨0|x|1⟩ sits near the well, pulled inward by the anharmonicity
    let x_min = default_spectrum().x_min;
    assert!((x[(0, 1)].abs() - x_min).abs() < 0.1 * x_min);
    assert!(eig.orthonormality_defect() < 1e-12);
    assert!(check_coverage(eig, 200.0).is_ok());
    assert!(minimal_coverage(eig, 200.0).unwrap() <= n);
}

#[test]
fn higher_barrier_lengthens_tunneling() {
    let tau = |v0: f64| {
        let p = PotentialParams::new(100.0, v0).unwrap();
        let grid = SpatialGrid::for_potential(&p, 384).unwrap();
        let v = build_potential(&p, &grid).unwrap();
        tunneling_time_numeric(&solve_eigensystem(&v, &grid, 4, KineticScheme::Sinc).unwrap()).unwrap()
    };
    let (low, high) = (tau(150.0), tau(250.0));
    assert!(high > 5.0 * low);
    let ratio = tunneling_time_instanton(&PotentialParams::new(100.0, 250.0).unwrap()).tau
        / tunneling_time_instanton(&PotentialParams::new(100.0, 150.0).unwrap()).tau;
    assert!((high / low / ratio - 1.0).abs() < 0.25);
}

#[test]
fn refinement_check_reports_drift() {
    let p = PotentialParams::new(100.0, 200.0).unwrap();
    let grid = SpatialGrid::for_potential(&p, 256).unwrap();
    let (eig, report) = solve_converged(|x| p.value(x), &grid, 10, KineticScheme::Sinc, 1e-8).unwrap();
    assert_eq!(eig.n_states(), 10);
    assert!(report.drift < 1e-8);
    let fd = solve_converged(|x| p.value(x), &grid, 10, KineticScheme::FiniteDifference { order: 2 }, 1e-10);
    assert!(fd.is_err());
}

#[test]
fn invalid_requests_are_rejected() {
    assert!(PotentialParams::new(-1.0, 200.0).is_err());
    assert!(PotentialParams::new(100.0, 0.0).is_err());
    assert!(SpatialGrid::new(0.0, 100).is_err());
    assert!(SpatialGrid::new(1.0, 2).is_err());
    let p = PotentialParams::new(100.0, 200.0).unwrap();
    let narrow = SpatialGrid::new(0.5, 128).unwrap();
    let err = build_potential(&p, &narrow).unwrap_err().to_string();
    assert!(err.contains("half_width"), "{err}");
    let grid = SpatialGrid::for_potential(&p, 64).unwrap();
    let v = build_potential(&p, &grid).unwrap();
    assert!(solve_eigensystem(&v, &grid, 65, KineticScheme::Sinc).is_err());
    assert!(solve_eigensystem(&v[..10], &grid, 4, KineticScheme::Sinc).is_err());
    let flat = shell_eigensystem(vec![1.0, 1.0, 2.0], DMatrix::zeros(3, 3));
    assert!(tunneling_time_numeric(&flat).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let p64 = PotentialParams::new(100.0f64, 200.0).unwrap();
    let p32 = PotentialParams::new(100.0f32, 200.0).unwrap();
    let g64 = SpatialGrid::for_potential(&p64, 256).unwrap();
    let g32 = SpatialGrid::for_potential(&p32, 256).unwrap();
    let e64 = solve_eigensystem(&build_potential(&p64, &g64).unwrap(), &g64, 6, KineticScheme::Sinc).unwrap();
    let e32 = solve_eigensystem(&build_potential(&p32, &g32).unwrap(), &g32, 6, KineticScheme::Sinc).unwrap();
    for (a, b) in e64.energies().iter().zip(e32.energies()) {
        assert!((a - *b as f64).abs() < 1e-3 * a.abs().max(100.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_are_mirror_symmetric(half in 0.1f64..20.0, pairs in 4usize..300) {
        let n = 2 * pairs;
        let g = SpatialGrid::new(half, n).unwrap();
        let x = g.nodes();
        prop_assert_eq!(x.len(), n);
        for i in 0..n {
            prop_assert!((x[i] + x[g.mirror(i)]).abs() < 1e-12 * half);
        }
        let ones = vec![1.0; n];
        prop_assert!((g.integrate(&ones) - 2.0 * half).abs() < 1e-12 * half);
    }

    #[test]
    fn potential_is_even_with_minima_at_the_wells(omega in 10.0f64..300.0, v0 in 10.0f64..500.0, x in -2.0f64..2.0) {
        let p = PotentialParams::new(omega, v0).unwrap();
        prop_assert!((p.value(x) - p.value(-x)).abs() <= 1e-12 * p.value(x).abs().max(1.0));
        let x0 = p.x_min;
        prop_assert!((p.value(x0) + v0).abs() < 1e-9 * v0);
        prop_assert!(p.value(x) >= p.value(x0) - 1e-9 * v0);
        prop_assert!((p.curvature(x0) - omega * omega).abs() < 1e-9 * omega * omega);
    }
}
