//! Ohmic environment with a Drude cutoff at zero temperature and the
//! time-dependent coefficients of the second-order master equation.
//!
//! With `I(ω) = (2/π) γ₀ ω Λ²/(Λ²+ω²)` the two bath kernels are
//!
//! * noise `ν(s) = ∫ I(ω) cos(ωs) dω = (γ₀Λ²/π) [e^{Λs} E1(Λs) - e^{-Λs} Ei(Λs)]`,
//! * dissipation `η(s) = ∫ I(ω) sin(ωs) dω = γ₀ Λ² e^{-Λs}`,
//!
//! and the pair coefficients are their one-sided transforms over `[0, t]`:
//! `D_{αβ} = ∫ ν(s) e^{-iΔs} ds = D + iΔf` and
//! `γ_{αβ} = ∫ η(s) e^{-iΔs} ds = -Ω̃²/2 - iΔγ`, with `Δ = ω_α - ω_β`.
//! Both transforms are evaluated in closed form.

use nalgebra::DMatrix;

use crate::error::BathError;
use crate::num::{cexp, cexpm1, cplx, euler_gamma, expm1, lit, real, to_f64, Complex, Real};
use crate::special::{e1_plus_log, e1_scaled, ei_scaled};
use crate::spectral::EigenSystem;

/// Ohmic bath with Drude cutoff. Only the zero-temperature case is supported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathModel<T: Real> {
    gamma0: T,
    cutoff: T,
}

impl<T: Real> BathModel<T> {
    pub fn new(gamma0: T, cutoff: T) -> Result<Self, BathError> {
        Self::with_temperature(gamma0, cutoff, T::zero())
    }

    /// Accepts a temperature argument for interface completeness; anything
    /// other than zero is rejected.
    pub fn with_temperature(gamma0: T, cutoff: T, temperature: T) -> Result<Self, BathError> {
        if !(gamma0 >= T::zero()) || !gamma0.is_finite() {
            return Err(BathError::InvalidParameters(format!("gamma0 must be >= 0 (got {})", to_f64(gamma0))));
        }
        if !(cutoff > T::zero()) || !cutoff.is_finite() {
            return Err(BathError::InvalidParameters(format!("cutoff must be > 0 (got {})", to_f64(cutoff))));
        }
        if temperature != T::zero() {
            return Err(BathError::InvalidParameters(format!(
                "only zero temperature is supported (got {})",
                to_f64(temperature)
            )));
        }
        Ok(Self { gamma0, cutoff })
    }

    pub fn gamma0(&self) -> T {
        self.gamma0
    }

    pub fn cutoff(&self) -> T {
        self.cutoff
    }

    pub fn temperature(&self) -> T {
        T::zero()
    }

    pub fn is_decoupled(&self) -> bool {
        self.gamma0 == T::zero()
    }

    /// Noise kernel `ν(s)` for `s > 0`; logarithmically singular at the origin.
    pub fn noise_kernel(&self, s: T) -> T {
        let z = self.cutoff * s;
        self.gamma0 * self.cutoff * self.cutoff / T::pi() * (e1_scaled(z) - ei_scaled(z))
    }

    /// Dissipation kernel `η(s) = γ₀Λ² e^{-Λs}` for `s >= 0`.
    pub fn dissipation_kernel(&self, s: T) -> T {
        self.gamma0 * self.cutoff * self.cutoff * (-self.cutoff * s).exp()
    }
}

/// `I(ω) = (2/π) γ₀ ω Λ²/(Λ²+ω²)` for `ω >= 0`.
pub fn spectral_density<T: Real>(bath: &BathModel<T>, omega: T) -> Result<T, BathError> {
    if !(omega >= T::zero()) {
        return Err(BathError::InvalidParameters(format!(
            "spectral density is defined for omega >= 0 (got {})",
            to_f64(omega)
        )));
    }
    let l2 = bath.cutoff * bath.cutoff;
    Ok(lit::<T>(2.0) / T::pi() * bath.gamma0 * omega * l2 / (l2 + omega * omega))
}

/// The four real coefficients at one frequency difference and time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSet<T: Real> {
    pub delta: T,
    pub time: T,
    /// Normal diffusion `D(Δ,t)`.
    pub d_normal: T,
    /// Anomalous diffusion `f(Δ,t)`.
    pub f_anomalous: T,
    /// Dissipation `γ(Δ,t)`.
    pub gamma_dissipation: T,
    /// Frequency shift `Ω̃²(Δ,t)`.
    pub omega_shift_sq: T,
}

impl<T: Real> CoefficientSet<T> {
    fn zero(delta: T, time: T) -> Self {
        Self {
            delta,
            time,
            d_normal: T::zero(),
            f_anomalous: T::zero(),
            gamma_dissipation: T::zero(),
            omega_shift_sq: T::zero(),
        }
    }

    /// `D_{αβ} = D + iΔf` for a pair with signed gap `delta`.
    pub fn diffusion_pair(&self, delta: T) -> Complex<T> {
        cplx(self.d_normal, delta * self.f_anomalous)
    }

    /// `γ_{αβ} = -Ω̃²/2 - iΔγ` for a pair with signed gap `delta`.
    pub fn dissipation_pair(&self, delta: T) -> Complex<T> {
        cplx(-self.omega_shift_sq * lit(0.5), -delta * self.gamma_dissipation)
    }

    fn is_finite(&self) -> bool {
        self.d_normal.is_finite()
            && self.f_anomalous.is_finite()
            && self.gamma_dissipation.is_finite()
            && self.omega_shift_sq.is_finite()
    }
}

/// Whether coefficients follow their transient or sit at their `t -> ∞` values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientMode {
    #[default]
    TimeDependent,
    FrozenAsymptotic,
}

/// Gaps below this fraction of the cutoff use the `Δ -> 0` limits.
fn small_gap<T: Real>(delta: T, cutoff: T) -> bool {
    delta <= T::eps().sqrt() * cutoff
}

/// Coefficients at gap `delta` (sign irrelevant) and time `t >= 0`.
pub fn compute_coefficients<T: Real>(bath: &BathModel<T>, delta: T, t: T) -> Result<CoefficientSet<T>, BathError> {
    if !(t >= T::zero()) {
        return Err(BathError::InvalidParameters(format!("time must be >= 0 (got {})", to_f64(t))));
    }
    let d = crate::num::abs(delta);
    if t == T::zero() || bath.is_decoupled() {
        return Ok(CoefficientSet::zero(delta, t));
    }
    let g0 = bath.gamma0;
    let lam = bath.cutoff;
    let big_t = lam * t;
    let a = ei_scaled(big_t);
    let b = e1_scaled(big_t);
    let set = if small_gap(d, lam) {
        let decay = (-big_t).exp();
        CoefficientSet {
            delta,
            time: t,
            d_normal: g0 * lam / T::pi() * (a + b),
            f_anomalous: -g0 / T::pi()
                * (big_t * (a + b) + a - b - lit::<T>(2.0) * (euler_gamma::<T>() + big_t.ln())),
            gamma_dissipation: g0 * (T::one() - (T::one() + big_t) * decay),
            omega_shift_sq: lit::<T>(2.0) * g0 * lam * expm1(-big_t),
        }
    } else {
        let noise = noise_transform(g0, lam, d, big_t, a, b);
        let diss = dissipation_transform(g0, lam, d, t);
        CoefficientSet {
            delta,
            time: t,
            d_normal: noise.re,
            // the pair coefficient is the conjugate transform, so Δf = -Im
            f_anomalous: -noise.im / d,
            gamma_dissipation: -diss.im / d,
            omega_shift_sq: -lit::<T>(2.0) * diss.re,
        }
    };
    if !set.is_finite() {
        return Err(BathError::NonFinite { t: to_f64(t), gap: to_f64(delta) });
    }
    Ok(set)
}

/// `∫₀^t ν(s) e^{iΔs} ds` for `Δ > 0`.
fn noise_transform<T: Real>(g0: T, lam: T, d: T, big_t: T, a: T, b: T) -> Complex<T> {
    let one = real(T::one());
    let c = cplx(T::zero(), d / lam);
    let log_part = e1_plus_log(-c * big_t) - real(big_t.ln());
    let front = c * lit::<T>(2.0) / (one - c * c) * log_part;
    let tail = cexp(c * big_t) * (real(a) / (one - c) + real(b) / (one + c));
    (front + tail) * (g0 * lam / T::pi())
}

/// `∫₀^t η(s) e^{-iΔs} ds = γ₀Λ² (1 - e^{-(Λ+iΔ)t}) / (Λ+iΔ)`.
fn dissipation_transform<T: Real>(g0: T, lam: T, d: T, t: T) -> Complex<T> {
    let z = cplx(lam, d);
    -cexpm1(-z * t) / z * (g0 * lam * lam)
}

/// Limits for `t -> ∞`. At `Δ = 0` the anomalous term diverges
/// logarithmically; it only enters multiplied by `Δ`, so it is reported as 0.
pub fn asymptotic_coefficients<T: Real>(bath: &BathModel<T>, delta: T) -> CoefficientSet<T> {
    let d = crate::num::abs(delta);
    let g0 = bath.gamma0;
    let lam = bath.cutoff;
    let lorentz = lam * lam / (lam * lam + d * d);
    let f = if d > T::zero() { lit::<T>(2.0) / T::pi() * g0 * lorentz * (lam / d).ln() } else { T::zero() };
    CoefficientSet {
        delta,
        time: lit(f64::INFINITY),
        d_normal: g0 * d * lorentz,
        f_anomalous: f,
        gamma_dissipation: g0 * lorentz,
        omega_shift_sq: -lit::<T>(2.0) * g0 * lam * lorentz,
    }
}

/// Distinct `|Δ_{αβ}|` values of an eigensystem and the pair-to-gap map.
#[derive(Debug, Clone)]
pub struct GapIndex<T: Real> {
    gaps: Vec<T>,
    /// `slot[a * n + b]` indexes `gaps` for pair `(a, b)`.
    slot: Vec<usize>,
    delta: DMatrix<T>,
}

impl<T: Real> GapIndex<T> {
    /// Groups gaps equal to within `1e-12` relative.
    pub fn new(eig: &EigenSystem<T>) -> Self {
        let n = eig.n_states();
        let delta = eig.delta_matrix();
        let mut order: Vec<(T, usize, usize)> = Vec::with_capacity(n * (n + 1) / 2);
        for a in 0..n {
            for b in a..n {
                order.push((crate::num::abs(delta[(a, b)]), a, b));
            }
        }
        order.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));
        let tol: T = lit(1e-12);
        let mut gaps: Vec<T> = Vec::new();
        let mut slot = vec![0usize; n * n];
        for (g, a, b) in order {
            let merge = gaps.last().is_some_and(|&last: &T| g - last <= tol * g.max(T::one()));
            if !merge {
                gaps.push(g);
            }
            let k = gaps.len() - 1;
            slot[a * n + b] = k;
            slot[b * n + a] = k;
        }
        Self { gaps, slot, delta }
    }

    pub fn gaps(&self) -> &[T] {
        &self.gaps
    }

    pub fn dim(&self) -> usize {
        self.delta.nrows()
    }
}

/// Pair matrices `D_{αβ}(t)` and `γ_{αβ}(t)` at one time.
#[derive(Debug, Clone)]
pub struct CoefficientTable<T: Real> {
    time: T,
    mode: CoefficientMode,
    diffusion: DMatrix<Complex<T>>,
    dissipation: DMatrix<Complex<T>>,
}

impl<T: Real> CoefficientTable<T> {
    /// All-zero table, the decoupled limit.
    pub fn zeros(n: usize) -> Self {
        Self {
            time: T::zero(),
            mode: CoefficientMode::TimeDependent,
            diffusion: DMatrix::zeros(n, n),
            dissipation: DMatrix::zeros(n, n),
        }
    }

    /// Builds a table from explicit pair matrices.
    pub fn from_matrices(time: T, diffusion: DMatrix<Complex<T>>, dissipation: DMatrix<Complex<T>>) -> Self {
        assert_eq!(diffusion.shape(), dissipation.shape());
        Self { time, mode: CoefficientMode::TimeDependent, diffusion, dissipation }
    }

    pub fn time(&self) -> T {
        self.time
    }

    pub fn mode(&self) -> CoefficientMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.diffusion.nrows()
    }

    pub fn diffusion(&self) -> &DMatrix<Complex<T>> {
        &self.diffusion
    }

    pub fn dissipation(&self) -> &DMatrix<Complex<T>> {
        &self.dissipation
    }

    /// Recomputes every entry for time `t`, one coefficient evaluation per
    /// distinct gap.
    pub fn refresh(
        &mut self,
        index: &GapIndex<T>,
        bath: &BathModel<T>,
        t: T,
        mode: CoefficientMode,
    ) -> Result<(), BathError> {
        let n = index.dim();
        if self.diffusion.nrows() != n {
            self.diffusion = DMatrix::zeros(n, n);
            self.dissipation = DMatrix::zeros(n, n);
        }
        let sets = index
            .gaps
            .iter()
            .map(|&g| match mode {
                CoefficientMode::TimeDependent => compute_coefficients(bath, g, t),
                CoefficientMode::FrozenAsymptotic => Ok(asymptotic_coefficients(bath, g)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        for a in 0..n {
            for b in 0..n {
                let set = &sets[index.slot[a * n + b]];
                let delta = index.delta[(a, b)];
                self.diffusion[(a, b)] = set.diffusion_pair(delta);
                self.dissipation[(a, b)] = set.dissipation_pair(delta);
            }
        }
        self.time = t;
        self.mode = mode;
        Ok(())
    }

    /// Largest relative violation of `M_{βα} = conj(M_{αβ})` over both matrices.
    pub fn conjugation_defect(&self) -> T {
        let mut worst = T::zero();
        for m in [&self.diffusion, &self.dissipation] {
            let scale = m.iter().fold(lit::<T>(1e-30), |s, z| s.max(crate::num::cabs(*z)));
            for a in 0..m.nrows() {
                for b in 0..m.ncols() {
                    let d = crate::num::cabs(m[(b, a)] - m[(a, b)].conj());
                    worst = worst.max(d / scale);
                }
            }
        }
        worst
    }
}

/// Builds the table for `eig` at time `t` with time-dependent coefficients.
pub fn assemble_pair_matrices<T: Real>(
    eig: &EigenSystem<T>,
    bath: &BathModel<T>,
    t: T,
) -> Result<CoefficientTable<T>, BathError> {
    let index = GapIndex::new(eig);
    let mut table = CoefficientTable::zeros(eig.n_states());
    table.refresh(&index, bath, t, CoefficientMode::TimeDependent)?;
    Ok(table)
}
