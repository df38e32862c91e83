use nalgebra::DMatrix;

use crate::bath::CoefficientTable;
use crate::error::EvolveError;
use crate::num::{imag, real, Complex, Real};
use crate::spectral::EigenSystem;

use super::state::DensityMatrix;

/// Preallocated operands for repeated right-hand-side evaluation.
///
/// With `M = D∘x` and `G = γ∘x` the coupling terms collapse to
/// `-[x, K'ρ - ρK]` where `K = M + iG` and `K' = M - iG`, so one evaluation
/// costs four matrix products.
#[derive(Debug, Clone)]
pub struct RhsWorkspace<T: Real> {
    x: DMatrix<Complex<T>>,
    delta: DMatrix<T>,
    k: DMatrix<Complex<T>>,
    k_prime: DMatrix<Complex<T>>,
    y: DMatrix<Complex<T>>,
    coupled: bool,
}

impl<T: Real> RhsWorkspace<T> {
    pub fn new(eig: &EigenSystem<T>) -> Self {
        let n = eig.n_states();
        Self {
            x: eig.x_matrix().map(real),
            delta: eig.delta_matrix(),
            k: DMatrix::zeros(n, n),
            k_prime: DMatrix::zeros(n, n),
            y: DMatrix::zeros(n, n),
            coupled: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    /// Loads the coupling operators for a new coefficient table.
    pub fn load(&mut self, table: &CoefficientTable<T>) -> Result<(), EvolveError> {
        let n = self.dim();
        if table.dim() != n {
            return Err(EvolveError::Dimension(format!("coefficient table is {}x{}, basis has {n} states", table.dim(), table.dim())));
        }
        let i = imag::<T>();
        let (d, g) = (table.diffusion(), table.dissipation());
        let zero = real(T::zero());
        let mut any = false;
        for a in 0..n {
            for b in 0..n {
                let m = d[(a, b)] * self.x[(a, b)];
                let ig = i * g[(a, b)] * self.x[(a, b)];
                self.k[(a, b)] = m + ig;
                self.k_prime[(a, b)] = m - ig;
                any |= m != zero || ig != zero;
            }
        }
        self.coupled = any;
        Ok(())
    }

    /// Disables the coupling terms (closed evolution).
    pub fn decouple(&mut self) {
        self.coupled = false;
    }

    /// Writes `dρ/dt` into `out`.
    pub fn eval(&mut self, rho: &DMatrix<Complex<T>>, out: &mut DMatrix<Complex<T>>) {
        let n = self.dim();
        let i = imag::<T>();
        for a in 0..n {
            for b in 0..n {
                out[(a, b)] = -i * rho[(a, b)] * self.delta[(a, b)];
            }
        }
        if !self.coupled {
            return;
        }
        let one = real(T::one());
        let zero = real(T::zero());
        // Y = K'ρ - ρK
        self.y.gemm(one, &self.k_prime, rho, zero);
        self.y.gemm(-one, rho, &self.k, one);
        // out -= xY - Yx
        out.gemm(-one, &self.x, &self.y, one);
        out.gemm(one, &self.y, &self.x, one);
    }
}

/// Right-hand side of the master equation at the table's time.
pub fn master_rhs<T: Real>(
    rho: &DensityMatrix<T>,
    eig: &EigenSystem<T>,
    table: &CoefficientTable<T>,
) -> Result<DMatrix<Complex<T>>, EvolveError> {
    let n = eig.n_states();
    if rho.dim() != n {
        return Err(EvolveError::Dimension(format!("density matrix is {}x{}, basis has {n} states", rho.dim(), rho.dim())));
    }
    let mut ws = RhsWorkspace::new(eig);
    ws.load(table)?;
    let mut out = DMatrix::zeros(n, n);
    ws.eval(rho.matrix(), &mut out);
    Ok(out)
}
