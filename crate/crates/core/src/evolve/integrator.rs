use nalgebra::DMatrix;

use crate::bath::{BathModel, CoefficientMode, CoefficientTable, GapIndex};
use crate::error::EvolveError;
use crate::num::{cabs, lit, to_f64, Complex, Real};
use crate::spectral::EigenSystem;

use super::rhs::RhsWorkspace;
use super::state::{hermiticity_defect, hermitize, DensityMatrix};

/// When the coefficient table is recomputed during a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RefreshPolicy {
    /// At every stage time; the coefficients are then exact everywhere.
    PerStage,
    /// Once per step at its start, held across the stages.
    PerStep,
    /// Per step while `h` is below `threshold`, per stage above it.
    Adaptive { threshold: f64 },
}

/// Error control, step bounds and output times.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<T>,
    pub h_max: Option<T>,
    pub t_final: T,
    /// Times at which the state is recorded; must lie in `[0, t_final]`.
    pub snapshot_times: Vec<T>,
    pub refresh: RefreshPolicy,
    pub coefficient_mode: CoefficientMode,
    pub max_steps: usize,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(t_final: T, snapshot_times: Vec<T>) -> Self {
        Self {
            rel_tol: lit(1e-8),
            abs_tol: lit(1e-10),
            h_init: None,
            h_max: None,
            t_final,
            snapshot_times,
            refresh: RefreshPolicy::PerStage,
            coefficient_mode: CoefficientMode::TimeDependent,
            max_steps: 50_000_000,
        }
    }

    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: String| Err(EvolveError::InvalidSettings(m));
        if !(self.rel_tol > T::zero() && self.rel_tol <= lit(1e-3)) {
            return bad(format!("rel_tol must lie in (0, 1e-3] (got {})", to_f64(self.rel_tol)));
        }
        if !(self.abs_tol > T::zero()) {
            return bad("abs_tol must be positive".into());
        }
        if !(self.t_final >= T::zero()) || !self.t_final.is_finite() {
            return bad("t_final must be finite and >= 0".into());
        }
        if let Some(h) = self.h_init {
            if !(h > T::zero()) {
                return bad("h_init must be positive".into());
            }
        }
        if let Some(h) = self.h_max {
            if !(h > T::zero()) {
                return bad("h_max must be positive".into());
            }
        }
        for w in self.snapshot_times.windows(2) {
            if !(w[1] > w[0]) {
                return bad("snapshot times must be strictly increasing".into());
            }
        }
        if let (Some(&first), Some(&last)) = (self.snapshot_times.first(), self.snapshot_times.last()) {
            if first < T::zero() || last > self.t_final {
                return bad("snapshot times must lie in [0, t_final]".into());
            }
        }
        if let RefreshPolicy::Adaptive { threshold } = self.refresh {
            if !(threshold > 0.0) {
                return bad("adaptive refresh threshold must be positive".into());
            }
        }
        Ok(())
    }
}

/// Default output grid of about `count` points: a quarter log-spaced up to
/// `10/Λ`, a quarter log-spaced from `10/Λ` to `t_final/10` and the rest
/// linear up to `t_final`, merged with the figure times `{0, ¼, ½, 1}·τ`.
pub fn default_snapshot_times<T: Real>(cutoff: T, tau: T, t_final: T, count: usize) -> Vec<T> {
    let count = count.max(8);
    let n_log = count / 4;
    let n_bridge = count / 4;
    let n_lin = count - n_log - n_bridge;
    let early = lit::<T>(10.0) / cutoff;
    let mut times = vec![T::zero()];
    let log_segment = |from: T, to: T, n: usize, times: &mut Vec<T>| {
        for k in 0..n {
            let u = crate::num::usize_to::<T>(k) / crate::num::usize_to::<T>(n - 1);
            times.push(from * (to / from).powf(u));
        }
    };
    let mut begin = T::zero();
    if early < t_final {
        log_segment(early * lit(1e-3), early, n_log, &mut times);
        begin = early;
        let bridge = t_final * lit(0.1);
        if bridge > early {
            log_segment(early, bridge, n_bridge, &mut times);
            begin = bridge;
        }
    }
    for k in 1..n_lin {
        let u = crate::num::usize_to::<T>(k) / crate::num::usize_to::<T>(n_lin);
        times.push(begin + (t_final - begin) * u);
    }
    times.push(t_final);
    for f in [0.25, 0.5, 1.0] {
        let t = tau * lit(f);
        if t <= t_final {
            times.push(t);
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    // merge near-duplicates so that clipping never produces a vanishing step
    let tol = t_final * lit(1e-12);
    let mut out: Vec<T> = Vec::with_capacity(times.len());
    for t in times {
        match out.last_mut() {
            Some(l) if t - *l <= tol => *l = t,
            _ => out.push(t),
        }
    }
    out
}

/// State recorded at one output time.
#[derive(Debug, Clone)]
pub struct Snapshot<T: Real> {
    pub time: T,
    pub rho: DensityMatrix<T>,
    /// Smallest eigenvalue of `ρ`.
    pub min_eigenvalue: T,
}

/// Counters and invariant diagnostics of one integration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub coefficient_refreshes: usize,
    /// Largest `max |ρ_ij - conj ρ_ji|` seen before symmetrization.
    pub max_hermiticity_defect: f64,
    /// Largest `|Tr ρ - 1|` corrected by renormalization.
    pub max_trace_correction: f64,
    pub trace_corrections: usize,
    pub min_eigenvalue: f64,
    pub smallest_step: f64,
    pub largest_step: f64,
}

/// Ordered snapshots plus diagnostics and a configuration echo.
#[derive(Debug, Clone)]
pub struct Trajectory<T: Real> {
    pub snapshots: Vec<Snapshot<T>>,
    pub stats: IntegrationStats,
    pub metadata: Vec<(String, String)>,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Snapshot whose time is closest to `t`.
    pub fn nearest(&self, t: T) -> Option<&Snapshot<T>> {
        self.snapshots.iter().min_by(|a, b| {
            let da = crate::num::abs(a.time - t);
            let db = crate::num::abs(b.time - t);
            da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal)
        })
    }
}

/// Drift in trace or hermiticity above which a state is corrected.
const DRIFT_TOLERANCE: f64 = 1e-10;
/// Smallest eigenvalue that triggers a warning.
const POSITIVITY_WARN: f64 = -1e-6;
/// Smallest eigenvalue that aborts the run.
const POSITIVITY_ABORT: f64 = -1e-2;

// Dormand-Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const ALPHA: f64 = 0.2 - 0.75 * BETA;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

/// Supplies the derivative at arbitrary times, refreshing bath coefficients
/// as the policy requires.
struct Dynamics<'a, T: Real> {
    ws: RhsWorkspace<T>,
    bath: Option<&'a BathModel<T>>,
    index: Option<GapIndex<T>>,
    table: CoefficientTable<T>,
    loaded_at: Option<T>,
    mode: CoefficientMode,
    rhs_evaluations: usize,
    refreshes: usize,
}

impl<'a, T: Real> Dynamics<'a, T> {
    fn new(eig: &EigenSystem<T>, bath: Option<&'a BathModel<T>>, mode: CoefficientMode) -> Self {
        let bath = bath.filter(|b| !b.is_decoupled());
        let mut ws = RhsWorkspace::new(eig);
        ws.decouple();
        Self {
            ws,
            bath,
            index: bath.map(|_| GapIndex::new(eig)),
            table: CoefficientTable::zeros(eig.n_states()),
            loaded_at: None,
            mode,
            rhs_evaluations: 0,
            refreshes: 0,
        }
    }

    /// True when the loaded coefficients are valid at `t`.
    fn is_current(&self, t: T) -> bool {
        self.bath.is_none()
            || self.loaded_at == Some(t)
            || (self.mode == CoefficientMode::FrozenAsymptotic && self.loaded_at.is_some())
    }

    fn refresh(&mut self, t: T) -> Result<(), EvolveError> {
        if self.is_current(t) {
            return Ok(());
        }
        let (Some(bath), Some(index)) = (self.bath, self.index.as_ref()) else {
            return Ok(());
        };
        self.table.refresh(index, bath, t, self.mode)?;
        self.ws.load(&self.table)?;
        self.loaded_at = Some(t);
        self.refreshes += 1;
        Ok(())
    }

    fn eval(&mut self, rho: &DMatrix<Complex<T>>, out: &mut DMatrix<Complex<T>>) {
        self.rhs_evaluations += 1;
        self.ws.eval(rho, out);
    }
}

/// `dst += a * src`.
fn add_scaled<T: Real>(dst: &mut DMatrix<Complex<T>>, a: T, src: &DMatrix<Complex<T>>) {
    dst.zip_apply(src, |d, s| *d += s * a);
}

fn scaled_max_norm<T: Real>(v: &DMatrix<Complex<T>>, y: &DMatrix<Complex<T>>, y2: &DMatrix<Complex<T>>, atol: T, rtol: T) -> T {
    v.iter()
        .zip(y.iter().zip(y2.iter()))
        .fold(T::zero(), |m, (e, (a, b))| m.max(cabs(*e) / (atol + rtol * cabs(*a).max(cabs(*b)))))
}

/// Integrates the master equation from `rho0` at `t = 0`.
///
/// `bath = None` or a decoupled bath gives closed (von Neumann) evolution.
pub fn integrate<T: Real>(
    rho0: &DensityMatrix<T>,
    eig: &EigenSystem<T>,
    bath: Option<&BathModel<T>>,
    config: &IntegratorConfig<T>,
) -> Result<Trajectory<T>, EvolveError> {
    config.validate()?;
    let n = eig.n_states();
    if rho0.dim() != n {
        return Err(EvolveError::Dimension(format!("initial state is {}x{}, basis has {n} states", rho0.dim(), rho0.dim())));
    }
    let tr0 = rho0.trace();
    if crate::num::abs(tr0.re - T::one()) > lit(1e-8) || rho0.hermiticity_defect() > lit(1e-9) {
        return Err(EvolveError::InvalidState("initial state must be Hermitian with unit trace".into()));
    }

    let mut dynamics = Dynamics::new(eig, bath, config.coefficient_mode);
    let mut stats = IntegrationStats { min_eigenvalue: f64::INFINITY, smallest_step: f64::INFINITY, ..Default::default() };
    let mut snapshots = Vec::with_capacity(config.snapshot_times.len());
    let t_final = config.t_final;
    let mut y = rho0.matrix().clone();
    let mut t = T::zero();
    let mut next_snap = 0usize;

    let mut record = |time: T, y: &DMatrix<Complex<T>>, stats: &mut IntegrationStats| -> Result<(), EvolveError> {
        let rho = DensityMatrix::from_matrix(y.clone())?;
        let min_eig = rho.min_eigenvalue();
        let m = to_f64(min_eig);
        stats.min_eigenvalue = stats.min_eigenvalue.min(m);
        if m < POSITIVITY_ABORT {
            return Err(EvolveError::PositivityLost { t: to_f64(time), min_eigenvalue: m });
        }
        if m < POSITIVITY_WARN {
            log::warn!("transient negativity at t = {:.6e}: smallest eigenvalue {m:.3e}", to_f64(time));
        }
        snapshots.push(Snapshot { time, rho, min_eigenvalue: min_eig });
        Ok(())
    };

    while next_snap < config.snapshot_times.len() && config.snapshot_times[next_snap] <= t {
        record(t, &y, &mut stats)?;
        next_snap += 1;
    }
    if t_final == T::zero() {
        return Ok(Trajectory { snapshots, stats, metadata: Vec::new() });
    }

    let zero = DMatrix::<Complex<T>>::zeros(n, n);
    let mut k: Vec<DMatrix<Complex<T>>> = vec![zero.clone(); 7];
    let mut stage = zero.clone();
    let mut y_new = zero.clone();
    let mut err = zero.clone();

    dynamics.refresh(t)?;
    dynamics.eval(&y, &mut k[0]);

    let atol = config.abs_tol;
    let rtol = config.rel_tol;
    let h_max = config.h_max.unwrap_or(t_final);
    let h_min = t_final * lit(1e-14);
    let mut h = match config.h_init {
        Some(h) => h,
        None => initial_step(&mut dynamics, &y, &k[0], atol, rtol)?,
    }
    .min(h_max);
    let mut err_prev: T = lit(1e-4);
    let mut rejected_last = false;
    let mut steps = 0usize;

    while t < t_final {
        steps += 1;
        if steps > config.max_steps {
            return Err(EvolveError::Stiffness { t: to_f64(t), dt: to_f64(h) });
        }
        // clip to the next output time or the horizon
        let target = config.snapshot_times.get(next_snap).copied().unwrap_or(t_final).min(t_final);
        let h_proposed = h;
        let mut clipped = false;
        if t + h >= target {
            h = target - t;
            clipped = true;
        }
        if h < h_min {
            if clipped && h > T::zero() {
                // a tiny remainder before an output time is taken as-is
            } else {
                log::error!("step size collapsed at t = {:.6e}: h = {:.3e}, state trace {:?}", to_f64(t), to_f64(h), to_f64(y.trace().re));
                return Err(EvolveError::Stiffness { t: to_f64(t), dt: to_f64(h) });
            }
        }

        let per_stage = match config.refresh {
            RefreshPolicy::PerStage => true,
            RefreshPolicy::PerStep => false,
            RefreshPolicy::Adaptive { threshold } => to_f64(h) > threshold / to_f64(dynamics.bath.map_or(T::one(), |b| b.cutoff())),
        };
        for s in 1..7 {
            stage.copy_from(&y);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    add_scaled(&mut stage, h * lit(a), kj);
                }
            }
            if per_stage {
                dynamics.refresh(t + h * lit(C[s]))?;
            }
            dynamics.eval(&stage, &mut k[s]);
        }
        // stage 7 was evaluated at the fifth-order solution (FSAL)
        y_new.copy_from(&stage);
        err.fill(Complex::new(T::zero(), T::zero()));
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                add_scaled(&mut err, h * lit(E[j]), kj);
            }
        }
        let en = scaled_max_norm(&err, &y, &y_new, atol, rtol);
        if !en.is_finite() {
            h *= lit(MIN_FACTOR);
            stats.rejected_steps += 1;
            rejected_last = true;
            if !per_stage {
                dynamics.refresh(t)?;
            }
            continue;
        }
        if en <= T::one() {
            let hf = to_f64(h);
            t = if clipped { target } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            stats.accepted_steps += 1;
            stats.smallest_step = stats.smallest_step.min(hf);
            stats.largest_step = stats.largest_step.max(hf);

            let herm = to_f64(hermiticity_defect(&y));
            stats.max_hermiticity_defect = stats.max_hermiticity_defect.max(herm);
            hermitize(&mut y);
            let tr = y.trace().re;
            let drift = to_f64(crate::num::abs(tr - T::one()));
            if drift > DRIFT_TOLERANCE {
                y /= Complex::new(tr, T::zero());
                stats.trace_corrections += 1;
                stats.max_trace_correction = stats.max_trace_correction.max(drift);
                log::debug!("trace renormalized at t = {:.6e} (drift {drift:.3e})", to_f64(t));
            }
            if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(EvolveError::NonFinite { t: to_f64(t) });
            }

            k.swap(0, 6);
            if !dynamics.is_current(t) {
                dynamics.refresh(t)?;
                dynamics.eval(&y, &mut k[0]);
            }

            while next_snap < config.snapshot_times.len() && config.snapshot_times[next_snap] <= t {
                record(t, &y, &mut stats)?;
                next_snap += 1;
            }

            let mut factor = SAFETY * to_f64(en).max(1e-10).powf(-ALPHA) * to_f64(err_prev).powf(BETA);
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if rejected_last {
                factor = factor.min(1.0);
            }
            err_prev = en.max(lit(1e-4));
            rejected_last = false;
            // a clipped step says nothing about the natural step size
            let grown = h * lit(factor);
            h = if clipped { h_proposed.max(grown) } else { grown }.min(h_max);
        } else {
            let factor = (SAFETY * to_f64(en).powf(-ALPHA)).max(MIN_FACTOR);
            h *= lit(factor);
            stats.rejected_steps += 1;
            rejected_last = true;
            if !per_stage {
                dynamics.refresh(t)?;
            }
        }
    }
    stats.rhs_evaluations = dynamics.rhs_evaluations;
    stats.coefficient_refreshes = dynamics.refreshes;
    if stats.min_eigenvalue == f64::INFINITY {
        stats.min_eigenvalue = f64::NAN;
    }
    Ok(Trajectory { snapshots, stats, metadata: Vec::new() })
}

/// Starting step from the size of the derivative and of a trial step.
fn initial_step<T: Real>(
    dynamics: &mut Dynamics<'_, T>,
    y: &DMatrix<Complex<T>>,
    f0: &DMatrix<Complex<T>>,
    atol: T,
    rtol: T,
) -> Result<T, EvolveError> {
    let d0 = scaled_max_norm(y, y, y, atol, rtol);
    let d1 = scaled_max_norm(f0, y, y, atol, rtol);
    let h0 = if d0 < lit(1e-5) || d1 < lit(1e-5) { lit(1e-6) } else { lit::<T>(0.01) * d0 / d1 };
    let mut y1 = y.clone();
    add_scaled(&mut y1, h0, f0);
    dynamics.refresh(h0)?;
    let mut f1 = y.clone();
    dynamics.eval(&y1, &mut f1);
    dynamics.refresh(T::zero())?;
    let diff = &f1 - f0;
    let d2 = scaled_max_norm(&diff, y, y, atol, rtol) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= lit(1e-15) { (h0 * lit(1e-3)).max(lit(1e-6)) } else { (lit::<T>(0.01) / dm).powf(lit(0.2)) };
    Ok((h0 * lit(100.0)).min(h1))
}
