//! Shared oracles and fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dwell::config::RunConfig;
use dwell::run::{solve_spectrum, Spectrum};
use dwell::spectral::{solve_eigensystem, EigenSystem, KineticScheme, Parity, SpatialGrid};
use dwell::Complex;

pub type C = Complex<f64>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A A† / Tr(A A†)` for a random complex `A`: Hermitian, positive, unit trace.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C> {
    let a = DMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    m / C::new(tr, 0.0)
}

/// Random Hermitian matrix with unit trace (not necessarily positive).
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C> {
    let a = DMatrix::from_fn(n, n, |_, _| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let mut h = (&a + a.adjoint()) * C::new(0.5, 0.0);
    let shift = (1.0 - h.trace().re) / n as f64;
    for k in 0..n {
        h[(k, k)] += C::new(shift, 0.0);
    }
    h
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

/// Sorted random energies.
pub fn random_energies(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Eigensystem shell with given energies and position matrix.
pub fn shell_eigensystem(energies: Vec<f64>, x: DMatrix<f64>) -> EigenSystem<f64> {
    let n = energies.len();
    let grid = SpatialGrid::new(1.0, 8).unwrap();
    let parities = (0..n).map(|k| if k % 2 == 0 { Parity::Even } else { Parity::Odd }).collect();
    EigenSystem::from_parts(grid, energies, DMatrix::zeros(8, 0), x, parities).unwrap()
}

/// Coefficient matrices built from even functions of the gap, so that
/// `M_{βα} = conj(M_{αβ})` holds: `D = a(|Δ|) + iΔ b(|Δ|)`,
/// `γ = c(|Δ|) - iΔ d(|Δ|)`.
pub fn random_even_tables(rng: &mut ChaCha8Rng, energies: &[f64]) -> (DMatrix<C>, DMatrix<C>) {
    let p: Vec<f64> = (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let n = energies.len();
    let mut d = DMatrix::zeros(n, n);
    let mut g = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let delta = energies[a] - energies[b];
            let s = delta.abs();
            d[(a, b)] = C::new(p[0] + p[1] * s, delta * (p[2] + p[3] * (p[4] * s).cos()));
            g[(a, b)] = C::new(p[5] * (1.0 + s * s).recip(), -delta * (p[6] + p[7] * s));
        }
    }
    (d, g)
}

/// Literal element-wise transcription of the eigenbasis master equation:
///
/// ```text
/// ρ̇_{μν} = −iΔ_{μν}ρ_{μν}
///   − Σ_{αβ} { D_{αβ}x_{μα}x_{αβ}ρ_{βν} − D_{βν}x_{μα}x_{βν}ρ_{αβ}
///             − D_{μα}x_{μα}x_{βν}ρ_{αβ} + D_{αβ}x_{αβ}x_{βν}ρ_{μα} }
///   + i Σ_{αβ} { γ_{αβ}x_{μα}x_{αβ}ρ_{βν} + γ_{βν}x_{μα}x_{βν}ρ_{αβ}
///               − γ_{μα}x_{μα}x_{βν}ρ_{αβ} − γ_{αβ}x_{αβ}x_{βν}ρ_{μα} }
/// ```
pub fn quadruple_sum_rhs(
    rho: &DMatrix<C>,
    energies: &[f64],
    x: &DMatrix<f64>,
    d: &DMatrix<C>,
    g: &DMatrix<C>,
) -> DMatrix<C> {
    let n = energies.len();
    let i = C::new(0.0, 1.0);
    DMatrix::from_fn(n, n, |mu, nu| {
        let mut out = -i * (energies[mu] - energies[nu]) * rho[(mu, nu)];
        let mut diff = C::new(0.0, 0.0);
        let mut diss = C::new(0.0, 0.0);
        for al in 0..n {
            for be in 0..n {
                diff += d[(al, be)] * x[(mu, al)] * x[(al, be)] * rho[(be, nu)]
                    - d[(be, nu)] * x[(mu, al)] * x[(be, nu)] * rho[(al, be)]
                    - d[(mu, al)] * x[(mu, al)] * x[(be, nu)] * rho[(al, be)]
                    + d[(al, be)] * x[(al, be)] * x[(be, nu)] * rho[(mu, al)];
                diss += g[(al, be)] * x[(mu, al)] * x[(al, be)] * rho[(be, nu)]
                    + g[(be, nu)] * x[(mu, al)] * x[(be, nu)] * rho[(al, be)]
                    - g[(mu, al)] * x[(mu, al)] * x[(be, nu)] * rho[(al, be)]
                    - g[(al, be)] * x[(al, be)] * x[(be, nu)] * rho[(mu, al)];
            }
        }
        out += -diff + i * diss;
        out
    })
}

pub fn max_abs_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` (Golub-Welsch).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Bath coefficients `(D, f, γ, Ω̃²)` by direct frequency quadrature of the
/// windowed kernels, for `Δ > 0`:
///
/// * `D    = ∫ I(ω) ½[S(ω−Δ) + S(ω+Δ)]`
/// * `Δ f  = ∫ I(ω) ½[K(ω−Δ) − K(ω+Δ)]`
/// * `Δ γ  = ∫ I(ω) ½[S(ω−Δ) − S(ω+Δ)]`
/// * `Ω̃²  = −∫ I(ω) [K(ω−Δ) + K(ω+Δ)]`
///
/// with `S(a) = sin(at)/a` and `K(a) = (1 − cos(at))/a`, i.e. the windowed
/// transforms `∫₀ᵗ ν(s) e^{iΔs} ds` and `∫₀ᵗ η(s) e^{−iΔs} ds` of the kernels
/// `ν(s) = ∫ I cos(ωs)` and `η(s) = ∫ I sin(ωs)`.
pub fn coefficient_oracle(gamma0: f64, cutoff: f64, delta: f64, t: f64) -> [f64; 4] {
    let spectral = |w: f64| (2.0 / PI) * gamma0 * w * cutoff * cutoff / (cutoff * cutoff + w * w);
    let s = |a: f64| if (a * t).abs() < 1e-8 { t } else { (a * t).sin() / a };
    let k = |a: f64| {
        let h = (0.5 * a * t).sin();
        if (a * t).abs() < 1e-8 {
            0.5 * a * t * t
        } else {
            2.0 * h * h / a
        }
    };
    // the oscillating tails beyond the window fall off as γ₀Λ²/(W²t)
    let upper = (400.0 * cutoff).max((cutoff * 1e8 / t).sqrt()) + 10.0 * delta;
    let (nodes, weights) = gauss_legendre(16);
    let floor = 1e-4 * cutoff.min(delta).min(1.0 / t);
    let mut acc = [0.0f64; 4];
    let mut a = 0.0;
    let mut breaks = vec![delta];
    breaks.retain(|&b| b > 0.0 && b < upper);
    while a < upper {
        let mut h = (0.5 / t).min(0.2 * (a + floor)).min(0.05 * cutoff.max(a));
        if let Some(&b) = breaks.iter().find(|&&b| b > a && b < a + h) {
            h = b - a;
        }
        let b = (a + h).min(upper);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in nodes.iter().zip(&weights) {
            let om = mid + half * x;
            let iw = spectral(om) * w * half;
            let (sm, sp) = (s(om - delta), s(om + delta));
            let (km, kp) = (k(om - delta), k(om + delta));
            acc[0] += iw * 0.5 * (sm + sp);
            acc[1] += iw * 0.5 * (km - kp);
            acc[2] += iw * 0.5 * (sm - sp);
            acc[3] -= iw * (km + kp);
        }
        a = b;
    }
    // non-oscillating tail of the frequency-shift integrand, −(4/π)γ₀Λ²/ω²
    acc[3] -= (4.0 / PI) * gamma0 * cutoff * cutoff / upper;
    [acc[0], acc[1] / delta, acc[2] / delta, acc[3]]
}

/// `∫₀ᵗ k(s) e^{iΔs} ds` by Gauss-Legendre on geometrically graded panels,
/// which resolves the logarithmic singularity of the noise kernel at `s = 0`.
pub fn time_transform(kernel: impl Fn(f64) -> f64, delta: f64, t: f64) -> C {
    let (nodes, weights) = gauss_legendre(20);
    let mut edges = vec![0.0];
    let mut s = t * 1e-16;
    while s < t {
        edges.push(s);
        s *= 2.0;
    }
    let fine = 200;
    let start = *edges.last().unwrap() / 2.0;
    edges.retain(|&e| e < start);
    for k in 0..=fine {
        edges.push(start + (t - start) * k as f64 / fine as f64);
    }
    let mut acc = C::new(0.0, 0.0);
    for w in edges.windows(2) {
        let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for (x, wt) in nodes.iter().zip(&weights) {
            let s = mid + half * x;
            acc += C::from_polar(kernel(s) * wt * half, delta * s);
        }
    }
    acc
}

/// Double-well spectrum at the default settings, solved once per test binary.
pub fn default_spectrum() -> &'static Spectrum {
    static CELL: OnceLock<Spectrum> = OnceLock::new();
    CELL.get_or_init(|| solve_spectrum(&RunConfig::default()).expect("default spectrum"))
}

/// Harmonic oscillator `½ω²x²` eigensystem on a wide grid.
pub fn harmonic_eigensystem(omega: f64, n_states: usize, n_points: usize) -> EigenSystem<f64> {
    let grid = SpatialGrid::new(10.0 / omega.sqrt(), n_points).unwrap();
    let v: Vec<f64> = grid.nodes().iter().map(|&x| 0.5 * omega * omega * x * x).collect();
    solve_eigensystem(&v, &grid, n_states, KineticScheme::Sinc).unwrap()
}
