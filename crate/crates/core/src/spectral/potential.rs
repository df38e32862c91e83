use crate::error::SpectralError;
use crate::num::{lit, to_f64, usize_to, Real};

/// Quartic double well `V(x) = -Ω²x²/4 + λx⁴`, parametrized by the well
/// frequency Ω and the barrier height V₀.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams<T: Real> {
    pub omega: T,
    pub v0: T,
    /// Quartic coupling, `Ω⁴ / (64 V₀)`.
    pub lambda: T,
    /// Position of the right minimum, `Ω / √(8λ)`.
    pub x_min: T,
    /// Euclidean action of the instanton, `(16/3) V₀/Ω`.
    pub s0: T,
}

impl<T: Real> PotentialParams<T> {
    pub fn new(omega: T, v0: T) -> Result<Self, SpectralError> {
        if !(omega > T::zero()) || !(v0 > T::zero()) {
            return Err(SpectralError::InvalidParameters(format!(
                "omega and v0 must be positive (got omega = {}, v0 = {})",
                to_f64(omega),
                to_f64(v0)
            )));
        }
        let lambda = omega.powi(4) / (lit::<T>(64.0) * v0);
        let x_min = omega / (lit::<T>(8.0) * lambda).sqrt();
        let s0 = lit::<T>(16.0 / 3.0) * v0 / omega;
        Ok(Self { omega, v0, lambda, x_min, s0 })
    }

    pub fn value(&self, x: T) -> T {
        let x2 = x * x;
        -lit::<T>(0.25) * self.omega * self.omega * x2 + self.lambda * x2 * x2
    }

    /// `V''(x)`; equals Ω² at the minima.
    pub fn curvature(&self, x: T) -> T {
        -lit::<T>(0.5) * self.omega * self.omega + lit::<T>(12.0) * self.lambda * x * x
    }

    /// Ground-state width `1/√(2Ω)` of a harmonic well with curvature Ω².
    pub fn well_width(&self) -> T {
        (lit::<T>(2.0) * self.omega).sqrt().recip()
    }

    /// Smallest half-width accepted for a grid resolving this potential.
    pub fn min_half_width(&self) -> T {
        lit::<T>(3.0) * self.x_min + lit::<T>(6.0) * self.well_width()
    }
}

/// Uniform grid on `[-L, L]` with an even number of nodes, so that the node set
/// is closed under reflection and contains no node at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid<T: Real> {
    half_width: T,
    spacing: T,
    nodes: Vec<T>,
}

impl<T: Real> SpatialGrid<T> {
    pub fn new(half_width: T, n_points: usize) -> Result<Self, SpectralError> {
        if n_points < 8 || !n_points.is_multiple_of(2) {
            return Err(SpectralError::InvalidGrid(format!(
                "n_points must be even and at least 8 (got {n_points})"
            )));
        }
        if !(half_width > T::zero()) {
            return Err(SpectralError::InvalidGrid("half_width must be positive".into()));
        }
        let spacing = lit::<T>(2.0) * half_width / usize_to::<T>(n_points - 1);
        let nodes = (0..n_points)
            .map(|i| {
                // build symmetrically so that x[i] == -x[n-1-i] exactly
                let k = usize_to::<T>(n_points - 1) * lit(0.5);
                (usize_to::<T>(i) - k) * spacing
            })
            .collect();
        Ok(Self { half_width, spacing, nodes })
    }

    /// Default grid for a double well: `L = 3x₀ + 6/√(2Ω)`.
    pub fn for_potential(params: &PotentialParams<T>, n_points: usize) -> Result<Self, SpectralError> {
        Self::new(params.min_half_width(), n_points)
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    pub fn n_points(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    /// Index of the node mirrored through the origin.
    pub fn mirror(&self, i: usize) -> usize {
        self.nodes.len() - 1 - i
    }

    /// Trapezoidal quadrature weight of node `i`.
    pub fn weight(&self, i: usize) -> T {
        if i == 0 || i + 1 == self.nodes.len() {
            self.spacing * lit(0.5)
        } else {
            self.spacing
        }
    }

    pub fn weights(&self) -> Vec<T> {
        (0..self.nodes.len()).map(|i| self.weight(i)).collect()
    }

    /// Same interval with twice the resolution (`2n` nodes).
    pub fn refined(&self) -> Self {
        Self::new(self.half_width, 2 * self.nodes.len()).expect("refining a valid grid")
    }

    /// Trapezoidal integral of samples on this grid.
    pub fn integrate(&self, f: &[T]) -> T {
        debug_assert_eq!(f.len(), self.nodes.len());
        f.iter().enumerate().fold(T::zero(), |acc, (i, &v)| acc + self.weight(i) * v)
    }
}

/// Samples the double-well potential at every grid node.
///
/// Fails when the grid does not cover both wells plus the classically
/// forbidden tails (`L >= 3x₀ + 6/√(2Ω)`).
pub fn build_potential<T: Real>(params: &PotentialParams<T>, grid: &SpatialGrid<T>) -> Result<Vec<T>, SpectralError> {
    let needed = params.min_half_width();
    // tolerate rounding in a grid built from the same formula
    if grid.half_width() < needed * (T::one() - lit(1e-12)) {
        return Err(SpectralError::GridTooNarrow {
            half_width: to_f64(grid.half_width()),
            required: to_f64(needed),
            x_min: to_f64(params.x_min),
        });
    }
    Ok(grid.nodes().iter().map(|&x| params.value(x)).collect())
}
