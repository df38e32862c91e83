use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::EvolveError;
use crate::num::{cabs, cexp, cplx, lit, real, to_f64, Complex, Real};
use crate::spectral::EigenSystem;

/// Reduced density matrix in the energy eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    entries: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Wraps a square matrix without checking the density-matrix invariants.
    pub fn from_matrix(entries: DMatrix<Complex<T>>) -> Result<Self, EvolveError> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(EvolveError::Dimension(format!(
                "density matrix must be square and non-empty (got {}x{})",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(Self { entries })
    }

    /// `|c⟩⟨c|` for a normalized amplitude vector.
    pub fn pure(amplitudes: &DVector<Complex<T>>) -> Self {
        Self { entries: amplitudes * amplitudes.adjoint() }
    }

    /// `|k⟩⟨k|` in a basis of size `n`.
    pub fn basis_state(n: usize, k: usize) -> Self {
        let mut entries = DMatrix::zeros(n, n);
        entries[(k, k)] = real(T::one());
        Self { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex<T>> {
        self.entries
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        // Tr ρ² = Σ |ρ_ij|² for Hermitian ρ
        self.entries.iter().fold(T::zero(), |s, z| s + z.norm_sqr())
    }

    /// `max |ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_defect(&self) -> T {
        hermiticity_defect(&self.entries)
    }

    /// Replaces `ρ` by `(ρ + ρ†)/2`.
    pub fn hermitize(&mut self) {
        hermitize(&mut self.entries);
    }

    /// Divides by the real part of the trace; returns the trace before scaling.
    pub fn renormalize(&mut self) -> Complex<T> {
        let tr = self.trace();
        self.entries /= real(tr.re);
        tr
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> T {
        let mut h = self.entries.clone();
        hermitize(&mut h);
        let eig = SymmetricEigen::new(h);
        eig.eigenvalues.iter().copied().fold(T::max_value().unwrap_or(lit(f64::MAX)), |m, v| m.min(v))
    }

    /// Populations `ρ_αα` (real parts).
    pub fn populations(&self) -> Vec<T> {
        (0..self.dim()).map(|k| self.entries[(k, k)].re).collect()
    }
}

pub(crate) fn hermiticity_defect<T: Real>(m: &DMatrix<Complex<T>>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max(cabs(m[(i, j)] - m[(j, i)].conj()));
        }
    }
    worst
}

pub(crate) fn hermitize<T: Real>(m: &mut DMatrix<Complex<T>>) {
    let n = m.nrows();
    let half: T = lit(0.5);
    for i in 0..n {
        m[(i, i)] = real(m[(i, i)].re);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Shape of the initial wave packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    /// Superposition of packets at `+center` and `-center`.
    Cat,
    /// One packet at `center`.
    Localized,
}

/// Gaussian-packet initial condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialStateSpec<T: Real> {
    pub kind: StateKind,
    pub center: T,
    /// Position standard deviation of each packet's density.
    pub width: T,
    /// Phase of the packet at `-center` relative to the one at `+center`.
    pub relative_phase: T,
    /// Amplitudes `(c₊, c₋)` of the packets at `+center` and `-center`.
    pub weights: (T, T),
}

impl<T: Real> InitialStateSpec<T> {
    /// Even cat with equal weights.
    pub fn cat(center: T, width: T) -> Self {
        let w = lit::<T>(0.5).sqrt();
        Self { kind: StateKind::Cat, center, width, relative_phase: T::zero(), weights: (w, w) }
    }

    pub fn localized(center: T, width: T) -> Self {
        Self { kind: StateKind::Localized, center, width, relative_phase: T::zero(), weights: (T::one(), T::zero()) }
    }

    pub fn with_phase(mut self, phase: T) -> Self {
        self.relative_phase = phase;
        self
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        if !(self.width > T::zero()) {
            return Err(EvolveError::InvalidState(format!("packet width must be positive (got {})", to_f64(self.width))));
        }
        if !self.center.is_finite() || !self.relative_phase.is_finite() {
            return Err(EvolveError::InvalidState("center and phase must be finite".into()));
        }
        if self.kind == StateKind::Cat && self.weights.0 == T::zero() && self.weights.1 == T::zero() {
            return Err(EvolveError::InvalidState("cat weights must not both vanish".into()));
        }
        Ok(())
    }

    /// Unnormalized `ψ(x)`.
    pub fn amplitude(&self, x: T) -> Complex<T> {
        let g = |c: T| {
            let u = (x - c) / self.width;
            (-u * u * lit(0.25)).exp()
        };
        match self.kind {
            StateKind::Localized => real(g(self.center)),
            StateKind::Cat => {
                let phase = cexp(cplx(T::zero(), self.relative_phase));
                real(self.weights.0 * g(self.center)) + phase * (self.weights.1 * g(-self.center))
            }
        }
    }
}

/// Result of projecting a packet onto the truncated basis.
#[derive(Debug, Clone)]
pub struct PreparedState<T: Real> {
    pub rho: DensityMatrix<T>,
    pub amplitudes: DVector<Complex<T>>,
    /// `Σ_α |⟨α|ψ⟩|²` before renormalization.
    pub captured_norm: T,
}

/// Smallest captured norm accepted when projecting onto the basis.
pub const COMPLETENESS_TOLERANCE: f64 = 1e-6;

/// Samples the packet on the grid, normalizes it there and projects it onto
/// the eigenbasis.
pub fn prepare_state<T: Real>(spec: &InitialStateSpec<T>, eig: &EigenSystem<T>) -> Result<PreparedState<T>, EvolveError> {
    spec.validate()?;
    if !eig.has_eigenfunctions() {
        return Err(EvolveError::InvalidState("eigensystem carries no eigenfunctions".into()));
    }
    let grid = eig.grid();
    let psi: Vec<Complex<T>> = grid.nodes().iter().map(|&x| spec.amplitude(x)).collect();
    let norm2 = psi.iter().enumerate().fold(T::zero(), |s, (i, z)| s + grid.weight(i) * z.norm_sqr());
    if !(norm2 > T::zero()) {
        return Err(EvolveError::InvalidState("packet vanishes on the grid".into()));
    }
    let inv = norm2.sqrt().recip();
    let n = eig.n_states();
    let phi = eig.eigenfunctions();
    let amplitudes = DVector::from_fn(n, |a, _| {
        psi.iter()
            .enumerate()
            .fold(real(T::zero()), |s, (i, z)| s + *z * (grid.weight(i) * phi[(i, a)] * inv))
    });
    let captured = amplitudes.iter().fold(T::zero(), |s, z| s + z.norm_sqr());
    if captured < T::one() - lit(COMPLETENESS_TOLERANCE) {
        return Err(EvolveError::InvalidState(format!(
            "truncated basis of {n} states captures only {:.8} of the packet norm; increase n_states",
            to_f64(captured)
        )));
    }
    let amplitudes = amplitudes / real(captured.sqrt());
    let rho = DensityMatrix::pure(&amplitudes);
    Ok(PreparedState { rho, amplitudes, captured_norm: captured })
}
