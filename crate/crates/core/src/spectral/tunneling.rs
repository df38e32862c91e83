use super::eigen::EigenSystem;
use super::potential::PotentialParams;
use crate::error::SpectralError;
use crate::num::{lit, to_f64, Real};

/// Empirical prefactor relating the doublet splitting to the tunneling time.
pub const TUNNELING_FACTOR: f64 = 3.0;

/// `τ = 3 / (ω_1 - ω_0)`.
///
/// Fails when the splitting is below `1e-12` of the spacing to the next
/// doublet, which is beyond what the eigensolver can resolve.
pub fn tunneling_time_numeric<T: Real>(eig: &EigenSystem<T>) -> Result<T, SpectralError> {
    if eig.n_states() < 2 {
        return Err(SpectralError::InvalidParameters("tunneling time needs at least two states".into()));
    }
    let e = eig.energies();
    let gap = e[1] - e[0];
    let scale = if e.len() > 2 { e[2] - e[0] } else { crate::num::abs(e[0]) };
    if !(gap > lit::<T>(1e-12) * scale) {
        return Err(SpectralError::DegenerateDoublet { gap: to_f64(gap) });
    }
    Ok(lit::<T>(TUNNELING_FACTOR) / gap)
}

/// Semiclassical estimate of the tunneling time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantonEstimate<T: Real> {
    pub tau: T,
    /// Instanton action `S₀ = (16/3) V₀/Ω`.
    pub action: T,
    /// False when `S₀ < 3`, where the dilute-instanton picture is unreliable.
    pub semiclassical: bool,
}

/// `τ = (3/8) √(π Ω / (2 V₀)) Ω⁻¹ exp(S₀)`.
pub fn tunneling_time_instanton<T: Real>(params: &PotentialParams<T>) -> InstantonEstimate<T> {
    let s0 = params.s0;
    let semiclassical = s0 >= lit(3.0);
    if !semiclassical {
        log::warn!("instanton action S0 = {:.3} is below 3; the semiclassical estimate is unreliable", to_f64(s0));
    }
    let prefactor = lit::<T>(3.0 / 8.0) * (T::pi() * params.omega / (lit::<T>(2.0) * params.v0)).sqrt() / params.omega;
    InstantonEstimate { tau: prefactor * s0.exp(), action: s0, semiclassical }
}
