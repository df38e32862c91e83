use nalgebra::{DMatrix, SymmetricEigen};

use super::potential::SpatialGrid;
use crate::error::SpectralError;
use crate::num::{abs, lit, to_f64, usize_to, Real};

/// Discretization of the kinetic energy `-½ d²/dx²` on the uniform grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KineticScheme {
    /// Sinc discrete variable representation; spectrally accurate for smooth
    /// bound states.
    #[default]
    Sinc,
    /// Central finite differences of the given even order (2, 4, 6 or 8).
    FiniteDifference { order: usize },
}

impl KineticScheme {
    fn validate(self) -> Result<(), SpectralError> {
        match self {
            KineticScheme::Sinc => Ok(()),
            KineticScheme::FiniteDifference { order: 2 | 4 | 6 | 8 } => Ok(()),
            KineticScheme::FiniteDifference { order } => Err(SpectralError::InvalidParameters(format!(
                "finite-difference order must be 2, 4, 6 or 8 (got {order})"
            ))),
        }
    }

    /// Matrix element `T_{i,i+k}` of the kinetic operator.
    fn element<T: Real>(self, offset: usize, dx: T) -> T {
        let inv = (dx * dx).recip();
        match self {
            KineticScheme::Sinc => {
                if offset == 0 {
                    T::pi() * T::pi() / lit(6.0) * inv
                } else {
                    let k: T = usize_to(offset);
                    let sign = if offset.is_multiple_of(2) { T::one() } else { -T::one() };
                    sign * inv / (k * k)
                }
            }
            KineticScheme::FiniteDifference { order } => {
                let c: &[f64] = match order {
                    2 => &[-2.0, 1.0],
                    4 => &[-5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
                    6 => &[-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0],
                    _ => &[-205.0 / 72.0, 8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0],
                };
                c.get(offset).map_or(T::zero(), |&v| lit::<T>(-0.5 * v) * inv)
            }
        }
    }
}

/// Parity of an eigenstate under `x -> -x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn symbol(self) -> char {
        match self {
            Parity::Even => '+',
            Parity::Odd => '-',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            '+' => Some(Parity::Even),
            '-' => Some(Parity::Odd),
            _ => None,
        }
    }
}

/// Lowest eigenstates of the discretized Hamiltonian.
#[derive(Debug, Clone)]
pub struct EigenSystem<T: Real> {
    grid: SpatialGrid<T>,
    energies: Vec<T>,
    /// `n_points x n_states`, column `a` holds `ψ_a` at the grid nodes.
    eigenfunctions: DMatrix<T>,
    x_matrix: DMatrix<T>,
    parities: Vec<Parity>,
}

impl<T: Real> EigenSystem<T> {
    /// Assembles an eigensystem from precomputed parts, e.g. when loading a
    /// cached spectrum. Eigenfunctions may be empty (`n_points x 0`) when only
    /// the energies and the position matrix are needed.
    pub fn from_parts(
        grid: SpatialGrid<T>,
        energies: Vec<T>,
        eigenfunctions: DMatrix<T>,
        x_matrix: DMatrix<T>,
        parities: Vec<Parity>,
    ) -> Result<Self, SpectralError> {
        let n = energies.len();
        if x_matrix.nrows() != n || x_matrix.ncols() != n || parities.len() != n {
            return Err(SpectralError::InvalidParameters(format!(
                "inconsistent eigensystem parts: {n} energies, {}x{} position matrix, {} parities",
                x_matrix.nrows(),
                x_matrix.ncols(),
                parities.len()
            )));
        }
        if eigenfunctions.ncols() != 0 && (eigenfunctions.ncols() != n || eigenfunctions.nrows() != grid.n_points()) {
            return Err(SpectralError::InvalidParameters("eigenfunction block does not match the grid".into()));
        }
        Ok(Self { grid, energies, eigenfunctions, x_matrix, parities })
    }

    /// Restriction to the lowest `n` states.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.n_states());
        let eigenfunctions = if self.has_eigenfunctions() {
            self.eigenfunctions.columns(0, n).into_owned()
        } else {
            self.eigenfunctions.clone()
        };
        Self {
            grid: self.grid.clone(),
            energies: self.energies[..n].to_vec(),
            eigenfunctions,
            x_matrix: self.x_matrix.view((0, 0), (n, n)).into_owned(),
            parities: self.parities[..n].to_vec(),
        }
    }

    pub fn n_states(&self) -> usize {
        self.energies.len()
    }

    pub fn grid(&self) -> &SpatialGrid<T> {
        &self.grid
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn eigenfunctions(&self) -> &DMatrix<T> {
        &self.eigenfunctions
    }

    pub fn has_eigenfunctions(&self) -> bool {
        self.eigenfunctions.ncols() == self.energies.len() && !self.energies.is_empty()
    }

    pub fn x_matrix(&self) -> &DMatrix<T> {
        &self.x_matrix
    }

    pub fn parities(&self) -> &[Parity] {
        &self.parities
    }

    /// `Δ_{αβ} = ω_α - ω_β`.
    pub fn delta(&self, a: usize, b: usize) -> T {
        self.energies[a] - self.energies[b]
    }

    pub fn delta_matrix(&self) -> DMatrix<T> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |a, b| self.delta(a, b))
    }

    /// Splitting of the lowest doublet, `ω_1 - ω_0`.
    pub fn doublet_gap(&self) -> T {
        self.energies[1] - self.energies[0]
    }

    /// Largest overlap defect `|⟨α|β⟩ - δ_{αβ}|` under the trapezoidal rule.
    pub fn orthonormality_defect(&self) -> T {
        let w = DMatrix::from_fn(self.grid.n_points(), 1, |i, _| self.grid.weight(i));
        let mut weighted = self.eigenfunctions.clone();
        for (i, mut row) in weighted.row_iter_mut().enumerate() {
            row *= w[(i, 0)];
        }
        let overlap = self.eigenfunctions.transpose() * weighted;
        let mut worst = T::zero();
        for a in 0..self.n_states() {
            for b in 0..self.n_states() {
                let target = if a == b { T::one() } else { T::zero() };
                worst = worst.max(abs(overlap[(a, b)] - target));
            }
        }
        worst
    }

    /// Relative gap between `Σ_β x_{αβ}²` and the grid value of `⟨α|x²|α⟩`.
    /// Grows as `α` approaches the truncation edge.
    pub fn completeness_defect(&self, a: usize) -> T {
        let truncated: T = (0..self.n_states()).map(|b| self.x_matrix[(a, b)].powi(2)).fold(T::zero(), |s, v| s + v);
        let psi = self.eigenfunctions.column(a);
        let exact = self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .fold(T::zero(), |s, (i, &x)| s + self.grid.weight(i) * psi[i] * psi[i] * x * x);
        abs(truncated - exact) / exact
    }
}

/// Solves for the lowest `n_states` eigenpairs of `-½ d²/dx² + V` on `grid`.
///
/// The potential must be symmetric under reflection; the problem is split into
/// even and odd blocks so that every state carries an exact parity label.
pub fn solve_eigensystem<T: Real>(
    potential: &[T],
    grid: &SpatialGrid<T>,
    n_states: usize,
    scheme: KineticScheme,
) -> Result<EigenSystem<T>, SpectralError> {
    scheme.validate()?;
    let n = grid.n_points();
    if potential.len() != n {
        return Err(SpectralError::InvalidParameters(format!(
            "potential has {} samples for a grid of {n} points",
            potential.len()
        )));
    }
    if n_states == 0 || n_states > n / 4 {
        return Err(SpectralError::TooManyStates { n_states, n_points: n, max: n / 4 });
    }
    let scale = potential.iter().fold(T::one(), |m, &v| m.max(abs(v)));
    for i in 0..n / 2 {
        if abs(potential[i] - potential[grid.mirror(i)]) > lit::<T>(1e-10) * scale {
            return Err(SpectralError::InvalidParameters(
                "potential must be symmetric under x -> -x".into(),
            ));
        }
    }

    let half = n / 2;
    let dx = grid.spacing();
    let mut kinetic = vec![T::zero(); n];
    for (k, t) in kinetic.iter_mut().enumerate() {
        *t = scheme.element(k, dx);
    }
    let block = |sign: T| {
        DMatrix::from_fn(half, half, |i, j| {
            let direct = kinetic[i.abs_diff(j)];
            // column j of the block pairs node j with its mirror n-1-j
            let mirrored = kinetic[n - 1 - i - j];
            let diag = if i == j { potential[i] } else { T::zero() };
            direct + sign * mirrored + diag
        })
    };
    let even = SymmetricEigen::new(block(T::one()));
    let odd = SymmetricEigen::new(block(-T::one()));

    let mut candidates: Vec<(T, Parity, usize)> = Vec::with_capacity(2 * half);
    candidates.extend(even.eigenvalues.iter().enumerate().map(|(k, &e)| (e, Parity::Even, k)));
    candidates.extend(odd.eigenvalues.iter().enumerate().map(|(k, &e)| (e, Parity::Odd, k)));
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    candidates.truncate(n_states);
    if candidates.iter().any(|c| !c.0.is_finite()) {
        return Err(SpectralError::Solver("non-finite eigenvalue".into()));
    }

    let threshold: T = lit(1e-6);
    let mut psi = DMatrix::zeros(n, n_states);
    for (col, &(_, parity, k)) in candidates.iter().enumerate() {
        let (v, sign) = match parity {
            Parity::Even => (even.eigenvectors.column(k), T::one()),
            Parity::Odd => (odd.eigenvectors.column(k), -T::one()),
        };
        for i in 0..half {
            psi[(i, col)] = v[i];
            psi[(grid.mirror(i), col)] = sign * v[i];
        }
        let norm2 = (0..n).fold(T::zero(), |s, i| s + grid.weight(i) * psi[(i, col)] * psi[(i, col)]);
        let mut column = psi.column_mut(col);
        column /= norm2.sqrt();
        let lead = column.iter().copied().find(|v| abs(*v) > threshold).unwrap_or(T::one());
        if lead < T::zero() {
            column.neg_mut();
        }
    }

    let energies: Vec<T> = candidates.iter().map(|c| c.0).collect();
    let parities: Vec<Parity> = candidates.iter().map(|c| c.1).collect();
    let x_matrix = position_matrix(&psi, grid);
    Ok(EigenSystem { grid: grid.clone(), energies, eigenfunctions: psi, x_matrix, parities })
}

/// `x_{αβ} = Σ_i w_i ψ_α(x_i) x_i ψ_β(x_i)`, symmetrized.
fn position_matrix<T: Real>(psi: &DMatrix<T>, grid: &SpatialGrid<T>) -> DMatrix<T> {
    let mut weighted = psi.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= grid.weight(i) * grid.nodes()[i];
    }
    let x = psi.transpose() * weighted;
    (&x + x.transpose()) * lit::<T>(0.5)
}

/// Outcome of the grid-refinement check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// Node count of the accepted grid.
    pub n_points: usize,
    /// Largest relative eigenvalue shift against the doubled grid.
    pub drift: f64,
}

/// Solves on `grid` and on the doubled grid; accepts the coarser solution once
/// every retained eigenvalue moves by less than `tolerance` relative. Allows
/// two doublings before giving up.
///
/// Shifts are measured relative to `max(|ω|, ω_{N-1} - ω_0)` so that levels
/// close to zero energy do not inflate the ratio.
pub fn solve_converged<T: Real, F: Fn(T) -> T>(
    potential: F,
    grid: &SpatialGrid<T>,
    n_states: usize,
    scheme: KineticScheme,
    tolerance: f64,
) -> Result<(EigenSystem<T>, ConvergenceReport), SpectralError> {
    let sample = |g: &SpatialGrid<T>| g.nodes().iter().map(|&x| potential(x)).collect::<Vec<T>>();
    let mut coarse_grid = grid.clone();
    let mut coarse = solve_eigensystem(&sample(&coarse_grid), &coarse_grid, n_states, scheme)?;
    let mut worst = f64::INFINITY;
    for _ in 0..2 {
        let fine_grid = coarse_grid.refined();
        let fine = solve_eigensystem(&sample(&fine_grid), &fine_grid, n_states, scheme)?;
        let e = fine.energies();
        let width = to_f64(e[e.len() - 1] - e[0]);
        let drift = coarse
            .energies()
            .iter()
            .zip(e)
            .map(|(&c, &f)| (to_f64(c) - to_f64(f)).abs() / to_f64(f).abs().max(width))
            .fold(0.0, f64::max);
        log::debug!("eigenvalue drift {drift:e} between {} and {} points", coarse_grid.n_points(), fine_grid.n_points());
        if drift < tolerance {
            let report = ConvergenceReport { n_points: coarse_grid.n_points(), drift };
            return Ok((coarse, report));
        }
        worst = drift;
        coarse_grid = fine_grid;
        coarse = fine;
    }
    Err(SpectralError::NotConverged { drift: worst, tolerance })
}

/// Checks that the highest retained level reaches `E0 + 5 V0`.
pub fn check_coverage<T: Real>(eig: &EigenSystem<T>, v0: T) -> Result<(), SpectralError> {
    let e = eig.energies();
    let required = e[0] + lit::<T>(5.0) * v0;
    if e[e.len() - 1] < required {
        return Err(SpectralError::InsufficientCoverage {
            highest: to_f64(e[e.len() - 1]),
            required: to_f64(required),
        });
    }
    Ok(())
}

/// Smallest basis size whose highest level reaches `E0 + 5 V0`, if any.
pub fn minimal_coverage<T: Real>(eig: &EigenSystem<T>, v0: T) -> Option<usize> {
    let e = eig.energies();
    let required = e[0] + lit::<T>(5.0) * v0;
    e.iter().position(|&w| w >= required).map(|k| k + 1)
}
