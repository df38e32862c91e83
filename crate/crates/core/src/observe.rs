//! Observables of a reduced density matrix: position density, Wigner function,
//! well populations, energy statistics, purity and decoherence diagnostics.

use nalgebra::DMatrix;

use crate::bath::BathModel;
use crate::error::ObserveError;
use crate::evolve::DensityMatrix;
use crate::num::{abs, lit, to_f64, usize_to, Complex, Real};
use crate::spectral::{EigenSystem, SpatialGrid};

fn check_dims<T: Real>(rho: &DensityMatrix<T>, eig: &EigenSystem<T>) -> Result<(), ObserveError> {
    if rho.dim() != eig.n_states() {
        return Err(ObserveError::Dimension(format!(
            "density matrix is {}x{}, basis has {} states",
            rho.dim(),
            rho.dim(),
            eig.n_states()
        )));
    }
    if !eig.has_eigenfunctions() {
        return Err(ObserveError::InvalidSettings("eigensystem carries no eigenfunctions".into()));
    }
    Ok(())
}

/// Largest imaginary residue tolerated in the position density.
const IMAGINARY_RESIDUE: f64 = 1e-8;

/// `σ(x,x) = Σ_{αβ} ρ_{αβ} ψ_α(x) ψ_β(x)` at every grid node.
pub fn position_distribution<T: Real>(rho: &DensityMatrix<T>, eig: &EigenSystem<T>) -> Result<Vec<T>, ObserveError> {
    check_dims(rho, eig)?;
    let phi = eig.eigenfunctions();
    let m = rho.matrix();
    let n = eig.n_states();
    let mut out = Vec::with_capacity(phi.nrows());
    let mut worst = T::zero();
    let mut row = vec![Complex::new(T::zero(), T::zero()); n];
    for i in 0..phi.nrows() {
        for (b, r) in row.iter_mut().enumerate() {
            let mut s = Complex::new(T::zero(), T::zero());
            for a in 0..n {
                s += m[(a, b)] * phi[(i, a)];
            }
            *r = s;
        }
        let mut v = Complex::new(T::zero(), T::zero());
        for (b, r) in row.iter().enumerate() {
            v += *r * phi[(i, b)];
        }
        worst = worst.max(abs(v.im));
        out.push(v.re);
    }
    if to_f64(worst) > IMAGINARY_RESIDUE {
        return Err(ObserveError::InvalidSettings(format!(
            "position density has imaginary residue {:.3e}; the density matrix is not Hermitian",
            to_f64(worst)
        )));
    }
    Ok(out)
}

/// Probabilities left of, right of and inside the barrier zone `|x| <= b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WellProbabilities<T: Real> {
    pub left: T,
    pub right: T,
    pub barrier: T,
}

impl<T: Real> WellProbabilities<T> {
    /// `P_R - P_L`.
    pub fn imbalance(&self) -> T {
        self.right - self.left
    }
}

/// Barrier-zone half-width as a fraction of the minimum position.
pub const BARRIER_ZONE_FRACTION: f64 = 0.5;

/// Splits the trapezoidal integral of `sigma` into the three zones, with
/// barrier half-width `b = x₀/2`.
pub fn well_probabilities<T: Real>(sigma: &[T], grid: &SpatialGrid<T>, x_min: T) -> WellProbabilities<T> {
    let b = x_min * lit(BARRIER_ZONE_FRACTION);
    let mut p = WellProbabilities { left: T::zero(), right: T::zero(), barrier: T::zero() };
    for (i, (&x, &s)) in grid.nodes().iter().zip(sigma).enumerate() {
        let w = grid.weight(i) * s;
        if x < -b {
            p.left += w;
        } else if x > b {
            p.right += w;
        } else {
            p.barrier += w;
        }
    }
    p
}

/// Mean energy and energy dispersion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStats<T: Real> {
    pub mean: T,
    pub dispersion: T,
}

/// `⟨E⟩ = Σ ω_α ρ_αα` and `ΔE = √(Σ ω_α² ρ_αα - ⟨E⟩²)`.
pub fn energy_stats<T: Real>(rho: &DensityMatrix<T>, eig: &EigenSystem<T>) -> Result<EnergyStats<T>, ObserveError> {
    if rho.dim() != eig.n_states() {
        return Err(ObserveError::Dimension("density matrix and basis sizes differ".into()));
    }
    let e = eig.energies();
    let pops = rho.populations();
    let mean = pops.iter().zip(e).fold(T::zero(), |s, (&p, &w)| s + p * w);
    // centre the second moment to avoid cancellation
    let var = pops.iter().zip(e).fold(T::zero(), |s, (&p, &w)| s + p * (w - mean) * (w - mean));
    let scale = e.iter().fold(T::one(), |m, &w| m.max(w * w));
    if var < -lit::<T>(1e-10) * scale {
        return Err(ObserveError::InvalidSettings(format!(
            "negative energy variance {:.3e}; populations are not a probability distribution",
            to_f64(var)
        )));
    }
    Ok(EnergyStats { mean, dispersion: var.max(T::zero()).sqrt() })
}

/// `Tr ρ²`.
pub fn purity<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.purity()
}

/// Phase-space lattice for the Wigner function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WignerSpec<T: Real> {
    /// Every `x_stride`-th grid node is an `x` lattice point.
    pub x_stride: usize,
    /// Momentum half-range; derived from the basis when `None`.
    pub p_max: Option<T>,
    /// Momentum spacing; derived from the grid extent when `None`.
    pub dp: Option<T>,
}

impl<T: Real> Default for WignerSpec<T> {
    fn default() -> Self {
        Self { x_stride: 2, p_max: None, dp: None }
    }
}

impl<T: Real> WignerSpec<T> {
    /// Momentum half-range `1.25 √(2 (ω_max - V_min))` covering the
    /// classically allowed momenta of the highest retained state. The
    /// potential floor is estimated as `ω_0 - (ω_2 - ω_0)/2`, one zero-point
    /// spacing below the ground level.
    fn resolve_p_max(&self, eig: &EigenSystem<T>) -> T {
        if let Some(p) = self.p_max {
            return p;
        }
        let e = eig.energies();
        let top = e[e.len() - 1];
        let spacing = e[2.min(e.len() - 1)] - e[0];
        let v_min = e[0] - spacing * lit(0.5);
        lit::<T>(1.25) * (lit::<T>(2.0) * (top - v_min).max(T::one())).sqrt()
    }

    /// Spacing resolving `e^{2ipy}` at the largest separation `y = L` with
    /// at least eight points per period.
    fn resolve_dp(&self, grid: &SpatialGrid<T>) -> T {
        self.dp.unwrap_or_else(|| T::pi() / (lit::<T>(8.0) * grid.half_width()))
    }
}

/// `W(x,p)` on a rectangular lattice; `values[(i, j)]` is at `(x_i, p_j)`.
#[derive(Debug, Clone)]
pub struct WignerGrid<T: Real> {
    pub x_nodes: Vec<T>,
    pub p_nodes: Vec<T>,
    pub values: DMatrix<T>,
    pub dx: T,
    pub dp: T,
}

impl<T: Real> WignerGrid<T> {
    pub fn cell_area(&self) -> T {
        self.dx * self.dp
    }

    /// `Σ W dx dp`.
    pub fn total(&self) -> T {
        self.values.iter().fold(T::zero(), |s, &w| s + w) * self.cell_area()
    }

    /// `∫ W dp` at every `x` lattice point.
    pub fn x_marginal(&self) -> Vec<T> {
        self.values.row_iter().map(|r| r.iter().fold(T::zero(), |s, &w| s + w) * self.dp).collect()
    }

    /// `∫ W dx` at every `p` lattice point.
    pub fn p_marginal(&self) -> Vec<T> {
        self.values.column_iter().map(|c| c.iter().fold(T::zero(), |s, &w| s + w) * self.dx).collect()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(lit(f64::INFINITY), |m, w| m.min(w))
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(lit(f64::NEG_INFINITY), |m, w| m.max(w))
    }
}

/// `W(x,p) = (1/π) ∫ dy e^{2ipy} ⟨x-y|ρ|x+y⟩`.
///
/// The `y` quadrature runs over multiples of the grid spacing, so that
/// `x ± y` are grid nodes and no interpolation is needed; the window is
/// bounded by the grid edges.
pub fn wigner<T: Real>(rho: &DensityMatrix<T>, eig: &EigenSystem<T>, spec: &WignerSpec<T>) -> Result<WignerGrid<T>, ObserveError> {
    check_dims(rho, eig)?;
    if spec.x_stride == 0 {
        return Err(ObserveError::InvalidSettings("x_stride must be at least 1".into()));
    }
    let grid = eig.grid();
    let n_grid = grid.n_points();
    let h = grid.spacing();
    let p_max = spec.resolve_p_max(eig);
    let dp = spec.resolve_dp(grid);
    if !(p_max > T::zero()) || !(dp > T::zero()) {
        return Err(ObserveError::InvalidSettings("momentum range and spacing must be positive".into()));
    }
    let half_np = (to_f64(p_max / dp).ceil() as usize).max(1);
    let p_nodes: Vec<T> = (0..=2 * half_np).map(|j| (usize_to::<T>(j) - usize_to::<T>(half_np)) * dp).collect();

    // start from the node nearest the left edge that keeps the lattice symmetric
    let offset = ((n_grid - 1) % spec.x_stride) / 2;
    let x_index: Vec<usize> = (offset..n_grid).step_by(spec.x_stride).collect();
    let x_nodes: Vec<T> = x_index.iter().map(|&i| grid.nodes()[i]).collect();
    let max_k = n_grid / 2;

    // e^{2 i p_j y_k} tables, y_k = k h
    let n_p = p_nodes.len();
    let mut cos_t = DMatrix::<T>::zeros(n_p, max_k + 1);
    let mut sin_t = DMatrix::<T>::zeros(n_p, max_k + 1);
    for (j, &p) in p_nodes.iter().enumerate() {
        for k in 0..=max_k {
            let arg = lit::<T>(2.0) * p * usize_to::<T>(k) * h;
            cos_t[(j, k)] = arg.cos();
            sin_t[(j, k)] = arg.sin();
        }
    }

    let phi = eig.eigenfunctions();
    let m = rho.matrix();
    let n = eig.n_states();
    let mut values = DMatrix::<T>::zeros(x_nodes.len(), n_p);
    let mut r: Vec<Complex<T>> = Vec::with_capacity(max_k + 1);
    let mut tmp = vec![Complex::new(T::zero(), T::zero()); n];
    let two: T = lit(2.0);
    let pref = h / T::pi();
    for (row, &i) in x_index.iter().enumerate() {
        let k_max = i.min(n_grid - 1 - i);
        r.clear();
        for k in 0..=k_max {
            // r_k = Φ(x_i - y_k)ᵀ ρ Φ(x_i + y_k)
            let lo = i - k;
            let hi = i + k;
            for (a, t) in tmp.iter_mut().enumerate() {
                let mut s = Complex::new(T::zero(), T::zero());
                for b in 0..n {
                    s += m[(a, b)] * phi[(hi, b)];
                }
                *t = s;
            }
            let mut v = Complex::new(T::zero(), T::zero());
            for (a, t) in tmp.iter().enumerate() {
                v += *t * phi[(lo, a)];
            }
            r.push(v);
        }
        for j in 0..n_p {
            let mut acc = r[0].re;
            for k in 1..=k_max {
                // Re(e^{2ipy} r_k)
                acc += two * (cos_t[(j, k)] * r[k].re - sin_t[(j, k)] * r[k].im);
            }
            values[(row, j)] = pref * acc;
        }
    }
    Ok(WignerGrid { x_nodes, p_nodes, values, dx: h * usize_to::<T>(spec.x_stride), dp })
}

/// `δ = Σ (|W| - W) dx dp`.
pub fn negativity_volume<T: Real>(w: &WignerGrid<T>) -> T {
    w.values.iter().fold(T::zero(), |s, &v| s + (abs(v) - v)) * w.cell_area()
}

/// Depth of the deepest negative lobe relative to the peak along the `p`
/// line through the lattice point closest to `x = 0`; zero without a negative
/// lobe.
pub fn fringe_visibility<T: Real>(w: &WignerGrid<T>) -> T {
    let Some((row, _)) = w
        .x_nodes
        .iter()
        .enumerate()
        .min_by(|a, b| abs(*a.1).partial_cmp(&abs(*b.1)).unwrap_or(std::cmp::Ordering::Equal))
    else {
        return T::zero();
    };
    let line = w.values.row(row);
    let hi = line.iter().copied().fold(T::zero(), |m, v| m.max(v));
    let lo = line.iter().copied().fold(T::zero(), |m, v| m.min(v));
    if hi > T::zero() {
        -lo / hi
    } else {
        T::zero()
    }
}

/// The two regime estimates of the decoherence time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoherenceBounds<T: Real> {
    /// `1/(8γ₀)`, the bound for flat potentials; infinite when decoupled.
    pub flat_potential: T,
    /// `1/Λ`, the scale for stiff wells.
    pub cutoff: T,
}

pub fn decoherence_time_bound<T: Real>(bath: &BathModel<T>) -> DecoherenceBounds<T> {
    let flat = if bath.is_decoupled() { lit(f64::INFINITY) } else { (lit::<T>(8.0) * bath.gamma0()).recip() };
    DecoherenceBounds { flat_potential: flat, cutoff: bath.cutoff().recip() }
}

/// Fraction of the initial negativity below which a state counts as decohered.
pub const DECOHERENCE_THRESHOLD: f64 = 0.05;

/// First time at which `δ(t)` drops below `threshold · δ(0)`, linearly
/// interpolated between the bracketing samples. `None` if it never does or if
/// `δ(0) = 0`.
pub fn measured_decoherence_time<T: Real>(times: &[T], negativity: &[T], threshold: T) -> Option<T> {
    let first = *negativity.first()?;
    if !(first > T::zero()) {
        return None;
    }
    let level = threshold * first;
    for k in 1..negativity.len().min(times.len()) {
        if negativity[k] < level {
            let (t0, t1) = (times[k - 1], times[k]);
            let (d0, d1) = (negativity[k - 1], negativity[k]);
            if d0 <= d1 {
                return Some(t1);
            }
            return Some(t0 + (t1 - t0) * (d0 - level) / (d0 - d1));
        }
    }
    None
}

/// Scalar observables recorded per snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord<T: Real> {
    pub time: T,
    pub p_left: T,
    pub p_right: T,
    pub p_barrier: T,
    pub purity: T,
    pub mean_energy: T,
    pub energy_dispersion: T,
    pub negativity_volume: T,
    pub fringe_visibility: Option<T>,
}

/// Evaluates every scalar observable; the Wigner function is computed only
/// when `wigner_spec` is given (otherwise negativity is reported as NaN).
pub fn observe<T: Real>(
    time: T,
    rho: &DensityMatrix<T>,
    eig: &EigenSystem<T>,
    x_min: T,
    wigner_spec: Option<&WignerSpec<T>>,
) -> Result<(ObservableRecord<T>, Option<WignerGrid<T>>), ObserveError> {
    let sigma = position_distribution(rho, eig)?;
    let wells = well_probabilities(&sigma, eig.grid(), x_min);
    let energy = energy_stats(rho, eig)?;
    let w = wigner_spec.map(|s| wigner(rho, eig, s)).transpose()?;
    let record = ObservableRecord {
        time,
        p_left: wells.left,
        p_right: wells.right,
        p_barrier: wells.barrier,
        purity: rho.purity(),
        mean_energy: energy.mean,
        energy_dispersion: energy.dispersion,
        negativity_volume: w.as_ref().map_or(lit(f64::NAN), negativity_volume),
        fringe_visibility: w.as_ref().map(fringe_visibility),
    };
    Ok((record, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decohered_time_interpolates() {
        let t = [0.0f64, 1.0, 2.0];
        let d = [1.0, 0.5, 0.0];
        let m = measured_decoherence_time(&t, &d, 0.05).unwrap();
        assert!((m - 1.9).abs() < 1e-12);
        assert!(measured_decoherence_time(&t, &[0.0, 0.0, 0.0], 0.05).is_none());
        assert!(measured_decoherence_time(&t, &[1.0, 0.9, 0.8], 0.05).is_none());
    }

    #[test]
    fn bounds_follow_formulas() {
        let b = decoherence_time_bound(&BathModel::new(5.0f64, 2000.0).unwrap());
        assert!((b.flat_potential - 0.025).abs() < 1e-15);
        assert!((b.cutoff - 5e-4).abs() < 1e-18);
        let off = decoherence_time_bound(&BathModel::new(0.0f64, 2000.0).unwrap());
        assert!(off.flat_potential.is_infinite());
    }
}
