//! Run orchestration behind the command-line tool: spectrum caching, closed
//! and open evolutions with artifact emission, and cutoff sweeps.

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::bath::{compute_coefficients, BathModel, CoefficientMode, CoefficientSet, GapIndex};
use crate::config::{Quantity, RunConfig, RunMode, Scales, SchemeChoice};
use crate::error::{Error, IoError};
use crate::evolve::{
    default_snapshot_times, integrate, prepare_state, InitialStateSpec, IntegrationStats, IntegratorConfig,
    RefreshPolicy, StateKind, Trajectory,
};
use crate::io;
use crate::observe::{
    decoherence_time_bound, measured_decoherence_time, observe, ObservableRecord, WignerSpec,
    DECOHERENCE_THRESHOLD,
};
use crate::spectral::{
    check_coverage, minimal_coverage, solve_converged, tunneling_time_instanton, tunneling_time_numeric,
    ConvergenceReport, EigenSystem, InstantonEstimate, KineticScheme, PotentialParams, SpatialGrid,
};

/// Environment variable capping the number of sweep workers.
pub const WORKERS_ENV: &str = "DWELL_WORKERS";

pub const EIGENSYSTEM_FILE: &str = "eigensystem.txt";
pub const EIGENFUNCTIONS_FILE: &str = "eigenfunctions.bin";
pub const OBSERVABLES_FILE: &str = "observables.csv";
pub const METADATA_FILE: &str = "metadata.txt";
pub const COEFFICIENTS_FILE: &str = "coefficients.csv";
pub const SWEEP_FILE: &str = "energy_sweep.csv";
pub const DISPERSION_FILE: &str = "dispersion_largest_cutoff.csv";
pub const FAILURES_FILE: &str = "failures.txt";

/// Solved spectrum together with the derived model scales.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eig: EigenSystem<f64>,
    /// `None` for the harmonic oracle potential.
    pub potential: Option<PotentialParams<f64>>,
    pub tau: f64,
    pub instanton: Option<InstantonEstimate<f64>>,
    /// `None` when the spectrum was read from the cache.
    pub convergence: Option<ConvergenceReport>,
    /// Position of the well minima used to partition `x`.
    pub x_min: f64,
    pub scales: Scales,
}

impl Spectrum {
    pub fn gap(&self) -> f64 {
        self.eig.doublet_gap()
    }
}

/// Hash of the settings that determine the spectrum.
pub fn spectral_hash(config: &RunConfig) -> String {
    let subset: String = config
        .canonical()
        .lines()
        .filter(|l| l.starts_with("potential.") || l.starts_with("grid.") || l.starts_with("basis."))
        .map(|l| format!("{l}\n"))
        .collect();
    Sha256::digest(subset.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn scheme(config: &RunConfig) -> KineticScheme {
    match config.scheme {
        SchemeChoice::Sinc => KineticScheme::Sinc,
        SchemeChoice::FiniteDifference(order) => KineticScheme::FiniteDifference { order },
    }
}

fn ensure_dir(dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)
        .map_err(|source| IoError::File { path: dir.display().to_string(), source })?;
    Ok(())
}

fn finish_spectrum(
    config: &RunConfig,
    eig: EigenSystem<f64>,
    potential: Option<PotentialParams<f64>>,
    convergence: Option<ConvergenceReport>,
) -> Result<Spectrum, Error> {
    let tau = tunneling_time_numeric(&eig)?;
    let instanton = potential.as_ref().map(tunneling_time_instanton);
    let x_min = potential.as_ref().map_or(1.0 / config.omega.sqrt(), |p| p.x_min);
    let scales = Scales { tau, gap: eig.doublet_gap(), v0: config.v0, omega: config.omega };
    Ok(Spectrum { eig, potential, tau, instanton, convergence, x_min, scales })
}

/// Solves the spectrum described by `config`.
pub fn solve_spectrum(config: &RunConfig) -> Result<Spectrum, Error> {
    if config.harmonic {
        let omega = config.omega;
        let half_width = config.half_width.unwrap_or(10.0 / omega.sqrt());
        let grid = SpatialGrid::new(half_width, config.n_points)?;
        let (eig, report) = solve_converged(
            move |x: f64| 0.5 * omega * omega * x * x,
            &grid,
            config.n_states,
            scheme(config),
            config.convergence_tolerance,
        )?;
        return finish_spectrum(config, eig, None, Some(report));
    }
    let params = PotentialParams::new(config.omega, config.v0)?;
    let grid = match config.half_width {
        Some(l) => {
            if l < params.min_half_width() {
                return Err(crate::error::SpectralError::GridTooNarrow {
                    half_width: l,
                    required: params.min_half_width(),
                    x_min: params.x_min,
                }
                .into());
            }
            SpatialGrid::new(l, config.n_points)?
        }
        None => SpatialGrid::for_potential(&params, config.n_points)?,
    };
    let p = params;
    let (eig, report) =
        solve_converged(move |x: f64| p.value(x), &grid, config.n_states, scheme(config), config.convergence_tolerance)?;
    if let Err(e) = check_coverage(&eig, config.v0) {
        if let Some(k) = minimal_coverage(&eig, config.v0) {
            log::info!("coverage would first hold at {k} states");
        }
        return Err(e.into());
    }
    finish_spectrum(config, eig, Some(params), Some(report))
}

/// Loads the cached spectrum in `dir` when it matches `config`, otherwise
/// solves it and refreshes the cache.
pub fn cached_spectrum(config: &RunConfig, dir: &Path) -> Result<Spectrum, Error> {
    let hash = config.hash();
    let spectral = spectral_hash(config);
    let (eig_path, phi_path) = (dir.join(EIGENSYSTEM_FILE), dir.join(EIGENFUNCTIONS_FILE));
    if eig_path.exists() && phi_path.exists() {
        match load_spectrum(config, &eig_path, &phi_path, &spectral) {
            Ok(Some(s)) => {
                log::info!("reusing cached spectrum from {}", eig_path.display());
                return Ok(s);
            }
            Ok(None) => log::info!("cached spectrum in {} belongs to other settings; re-solving", dir.display()),
            Err(e) => log::warn!("ignoring unreadable spectrum cache: {e}"),
        }
    }
    let spectrum = solve_spectrum(config)?;
    ensure_dir(dir)?;
    io::write_eigensystem(&eig_path, &hash, &[("spectral_hash", spectral.as_str())], &spectrum.eig)?;
    io::write_eigenfunctions(&phi_path, &hash, &spectrum.eig)?;
    Ok(spectrum)
}

fn load_spectrum(config: &RunConfig, eig_path: &Path, phi_path: &Path, spectral: &str) -> Result<Option<Spectrum>, Error> {
    let stored = io::read_eigensystem::<f64>(eig_path)?;
    if stored.tag("spectral_hash") != Some(spectral) {
        return Ok(None);
    }
    let phi = io::read_eigenfunctions::<f64>(phi_path)?;
    let eig = stored.into_eigensystem(Some(phi))?;
    let potential = if config.harmonic { None } else { Some(PotentialParams::new(config.omega, config.v0)?) };
    finish_spectrum(config, eig, potential, None).map(Some)
}

/// Summary printed by `eigen`.
#[derive(Debug, Clone)]
pub struct EigenSummary {
    pub config_hash: String,
    pub energies: Vec<f64>,
    pub parities: Vec<char>,
    pub gap: f64,
    pub tau_numeric: f64,
    pub instanton: Option<InstantonEstimate<f64>>,
    pub convergence: Option<ConvergenceReport>,
}

impl fmt::Display for EigenSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "config_hash      {}", self.config_hash)?;
        if let Some(c) = &self.convergence {
            writeln!(f, "grid points      {} (relative drift {:.2e})", c.n_points, c.drift)?;
        }
        writeln!(f, "doublet gap      {:.10e}", self.gap)?;
        writeln!(f, "tau_numeric      {:.6}", self.tau_numeric)?;
        if let Some(i) = &self.instanton {
            writeln!(f, "tau_instanton    {:.6}", i.tau)?;
            writeln!(f, "instanton S0     {:.6}", i.action)?;
        }
        writeln!(f, "{:>5} {:>22} {:>7}", "index", "energy", "parity")?;
        for (k, (e, p)) in self.energies.iter().zip(&self.parities).enumerate() {
            writeln!(f, "{k:>5} {e:>22.12} {p:>7}")?;
        }
        Ok(())
    }
}

/// Solves (or reuses) the spectrum and writes it to `out`.
pub fn cmd_eigen(config: &RunConfig, out: &Path) -> Result<EigenSummary, Error> {
    ensure_dir(out)?;
    let s = cached_spectrum(config, out)?;
    Ok(EigenSummary {
        config_hash: config.hash(),
        energies: s.eig.energies().to_vec(),
        parities: s.eig.parities().iter().map(|p| p.symbol()).collect(),
        gap: s.gap(),
        tau_numeric: s.tau,
        instanton: s.instanton,
        convergence: s.convergence,
    })
}

/// Outcome of one closed or open evolution.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub label: String,
    pub config_hash: String,
    pub directory: PathBuf,
    pub gamma0: f64,
    pub cutoff: f64,
    pub tau: f64,
    pub records: Vec<ObservableRecord<f64>>,
    pub stats: IntegrationStats,
    /// First time negativity drops below 5% of its initial value.
    pub decoherence_time: Option<f64>,
    /// `1/(8γ₀)`, infinite for a closed run.
    pub decoherence_bound: f64,
    /// Figure snapshots as `(requested time, recorded time)`.
    pub figures: Vec<(f64, f64)>,
}

impl RunSummary {
    /// Record closest in time to `t`.
    pub fn at(&self, t: f64) -> Option<&ObservableRecord<f64>> {
        self.records.iter().min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
    }
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let first = self.records.first();
        let last = self.records.last();
        writeln!(f, "[{}] config_hash {} -> {}", self.label, self.config_hash, self.directory.display())?;
        writeln!(f, "  gamma0 {:.6e}  cutoff {:.6e}  tau {:.4}", self.gamma0, self.cutoff, self.tau)?;
        writeln!(
            f,
            "  steps {} accepted, {} rejected; min eigenvalue {:.3e}",
            self.stats.accepted_steps, self.stats.rejected_steps, self.stats.min_eigenvalue
        )?;
        if let (Some(a), Some(b)) = (first, last) {
            writeln!(f, "  negativity   {:.4e} -> {:.4e}", a.negativity_volume, b.negativity_volume)?;
            writeln!(f, "  purity       {:.6} -> {:.6}", a.purity, b.purity)?;
            writeln!(f, "  mean energy  {:.4} -> {:.4}", a.mean_energy, b.mean_energy)?;
            writeln!(f, "  dispersion   {:.4} -> {:.4}", a.energy_dispersion, b.energy_dispersion)?;
            writeln!(f, "  p_barrier    {:.4e} -> {:.4e}", a.p_barrier, b.p_barrier)?;
        }
        match self.decoherence_time {
            Some(t) => writeln!(f, "  decoherence time {:.6} (bound 1/(8 gamma0) = {:.6})", t, self.decoherence_bound),
            None => writeln!(f, "  decoherence time: not reached (bound {:.6})", self.decoherence_bound),
        }
    }
}

/// Snapshot grid: the default grid merged with the figure times.
fn snapshot_times(config: &RunConfig, scales: &Scales, cutoff: f64, t_final: f64) -> Vec<f64> {
    let mut times = match &config.snapshot_times {
        Some(list) => list.iter().map(|q| q.resolve(scales)).collect(),
        None => default_snapshot_times(cutoff, scales.tau, t_final, config.snapshot_count),
    };
    times.extend(config.figure_times.iter().map(|q| q.resolve(scales)).filter(|&t| t >= 0.0 && t <= t_final));
    times.sort_by(f64::total_cmp);
    let tol = t_final * 1e-12;
    let mut out: Vec<f64> = Vec::with_capacity(times.len());
    for t in times {
        match out.last_mut() {
            Some(l) if t - *l <= tol => *l = t,
            _ => out.push(t),
        }
    }
    out
}

fn initial_state(config: &RunConfig, spectrum: &Spectrum) -> InitialStateSpec<f64> {
    let center = config.state_center.unwrap_or(spectrum.x_min);
    let width = config.state_width.unwrap_or(1.0 / (2.0 * config.omega).sqrt());
    let mut spec = if config.state_kind == "localized" {
        InitialStateSpec::localized(center, width)
    } else {
        InitialStateSpec::cat(center, width)
    };
    if spec.kind == StateKind::Cat {
        spec.weights = config.state_weights;
    }
    spec.with_phase(config.state_phase)
}

fn integrator_config(config: &RunConfig, times: Vec<f64>, t_final: f64) -> IntegratorConfig<f64> {
    let mut ic = IntegratorConfig::new(t_final, times);
    ic.rel_tol = config.rel_tol;
    ic.abs_tol = config.abs_tol;
    ic.h_init = config.h_init;
    ic.h_max = config.h_max;
    ic.refresh = match config.refresh.as_str() {
        "per_step" => RefreshPolicy::PerStep,
        "adaptive" => RefreshPolicy::Adaptive { threshold: config.refresh_threshold },
        _ => RefreshPolicy::PerStage,
    };
    ic.coefficient_mode =
        if config.frozen_coefficients { CoefficientMode::FrozenAsymptotic } else { CoefficientMode::TimeDependent };
    ic
}

/// Runs one evolution, closed when `open` is false, and writes its artifacts
/// to `dir`.
pub fn run_single(config: &RunConfig, spectrum: &Spectrum, open: bool, dir: &Path) -> Result<RunSummary, Error> {
    ensure_dir(dir)?;
    let hash = config.hash();
    let scales = &spectrum.scales;
    let gamma0 = config.gamma0.resolve(scales);
    let cutoff = config.cutoff.resolve(scales);
    let t_final = config.t_final.resolve(scales);
    let bath = if open { Some(BathModel::with_temperature(gamma0, cutoff, config.temperature)?) } else { None };
    let times = snapshot_times(config, scales, cutoff, t_final);
    let ic = integrator_config(config, times, t_final);

    let prepared = prepare_state(&initial_state(config, spectrum), &spectrum.eig)?;
    let label = if open { "open" } else { "closed" };
    log::info!("{label} run: {} states, t_final {t_final:.4}, {} snapshots", spectrum.eig.n_states(), ic.snapshot_times.len());
    let trajectory = integrate(&prepared.rho, &spectrum.eig, bath.as_ref(), &ic)?;

    let wspec = WignerSpec { x_stride: config.wigner_stride, p_max: config.wigner_p_max, dp: config.wigner_dp };
    let figure_times: Vec<f64> = config.figure_times.iter().map(|q| q.resolve(scales)).collect();
    let mut records = Vec::with_capacity(trajectory.snapshots.len());
    let mut figures = Vec::new();
    for (k, snap) in trajectory.snapshots.iter().enumerate() {
        let (record, w) = observe(snap.time, &snap.rho, &spectrum.eig, spectrum.x_min, Some(&wspec))?;
        records.push(record);
        if config.write_density {
            io::write_density(&dir.join(format!("rho_{k:04}.bin")), &hash, &snap.rho)?;
        }
        let w = w.expect("wigner requested");
        for (j, &tf) in figure_times.iter().enumerate() {
            if nearest_index(&trajectory, tf) == Some(k) {
                io::write_wigner_csv(&dir.join(format!("wigner_{j}.csv")), &hash, snap.time, &w)?;
                io::write_wigner_pgm(&dir.join(format!("wigner_{j}.pgm")), &hash, snap.time, &w)?;
                figures.push((tf, snap.time));
            }
        }
    }
    io::write_observables(&dir.join(OBSERVABLES_FILE), &hash, &records)?;

    if open && config.write_coefficients {
        let b = bath.as_ref().expect("open run has a bath");
        let gaps = GapIndex::new(&spectrum.eig);
        let mut sets: Vec<CoefficientSet<f64>> = Vec::new();
        for &t in trajectory.times().iter() {
            for &d in gaps.gaps() {
                sets.push(compute_coefficients(b, d, t)?);
            }
        }
        io::write_coefficients(&dir.join(COEFFICIENTS_FILE), &hash, &sets)?;
    }

    let times: Vec<f64> = records.iter().map(|r| r.time).collect();
    let neg: Vec<f64> = records.iter().map(|r| r.negativity_volume).collect();
    let decoherence_time = measured_decoherence_time(&times, &neg, DECOHERENCE_THRESHOLD);
    let decoherence_bound = bath.as_ref().map_or(f64::INFINITY, |b| decoherence_time_bound(b).flat_potential);

    let summary = RunSummary {
        label: label.to_string(),
        config_hash: hash.clone(),
        directory: dir.to_path_buf(),
        gamma0: if open { gamma0 } else { 0.0 },
        cutoff,
        tau: spectrum.tau,
        records,
        stats: trajectory.stats.clone(),
        decoherence_time,
        decoherence_bound,
        figures,
    };
    io::write_metadata(&dir.join(METADATA_FILE), &hash, &metadata(config, spectrum, &summary, &trajectory))?;
    Ok(summary)
}

fn nearest_index(trajectory: &Trajectory<f64>, t: f64) -> Option<usize> {
    trajectory
        .snapshots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.time - t).abs().total_cmp(&(b.1.time - t).abs()))
        .map(|(k, _)| k)
}

fn metadata(config: &RunConfig, spectrum: &Spectrum, s: &RunSummary, trajectory: &Trajectory<f64>) -> Vec<(String, String)> {
    let mut m: Vec<(String, String)> = vec![
        ("run.label".into(), s.label.clone()),
        ("run.config_hash".into(), s.config_hash.clone()),
        ("spectrum.tau".into(), format!("{:e}", spectrum.tau)),
        ("spectrum.gap".into(), format!("{:e}", spectrum.gap())),
        ("spectrum.n_states".into(), spectrum.eig.n_states().to_string()),
        ("spectrum.n_points".into(), spectrum.eig.grid().n_points().to_string()),
        ("bath.gamma0_resolved".into(), format!("{:e}", s.gamma0)),
        ("bath.cutoff_resolved".into(), format!("{:e}", s.cutoff)),
        ("stats.accepted_steps".into(), s.stats.accepted_steps.to_string()),
        ("stats.rejected_steps".into(), s.stats.rejected_steps.to_string()),
        ("stats.rhs_evaluations".into(), s.stats.rhs_evaluations.to_string()),
        ("stats.coefficient_refreshes".into(), s.stats.coefficient_refreshes.to_string()),
        ("stats.max_hermiticity_defect".into(), format!("{:e}", s.stats.max_hermiticity_defect)),
        ("stats.max_trace_correction".into(), format!("{:e}", s.stats.max_trace_correction)),
        ("stats.min_eigenvalue".into(), format!("{:e}", s.stats.min_eigenvalue)),
        ("stats.smallest_step".into(), format!("{:e}", s.stats.smallest_step)),
        ("stats.largest_step".into(), format!("{:e}", s.stats.largest_step)),
        ("decoherence.threshold".into(), format!("{DECOHERENCE_THRESHOLD:e}")),
        ("decoherence.measured".into(), s.decoherence_time.map_or("none".into(), |t| format!("{t:e}"))),
        ("decoherence.bound_flat".into(), format!("{:e}", s.decoherence_bound)),
        ("decoherence.bound_cutoff".into(), format!("{:e}", 1.0 / s.cutoff)),
    ];
    for (k, v) in &trajectory.metadata {
        m.push((format!("integrator.{k}"), v.clone()));
    }
    for (j, (want, got)) in s.figures.iter().enumerate() {
        m.push((format!("figure.{j}.requested_time"), format!("{want:e}")));
        m.push((format!("figure.{j}.time"), format!("{got:e}")));
    }
    if config.write_density {
        m.push(("snapshots.layout".into(), "rho_NNNN.bin, index matches observables row".into()));
    }
    for (k, snap) in trajectory.snapshots.iter().enumerate() {
        m.push((format!("snapshot.{k:04}.time"), format!("{:e}", snap.time)));
    }
    for line in config.canonical().lines() {
        if let Some((k, v)) = line.split_once(" = ") {
            m.push((format!("config.{k}"), v.to_string()));
        }
    }
    m
}

/// Closed and/or open evolutions sharing one spectrum.
#[derive(Debug, Clone)]
pub struct EvolveSummary {
    pub closed: Option<RunSummary>,
    pub open: Option<RunSummary>,
}

impl fmt::Display for EvolveSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in [&self.closed, &self.open].into_iter().flatten() {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

pub fn cmd_evolve(config: &RunConfig, out: &Path) -> Result<EvolveSummary, Error> {
    ensure_dir(out)?;
    let spectrum = cached_spectrum(config, out)?;
    let closed = matches!(config.mode, RunMode::Closed | RunMode::Both)
        .then(|| run_single(config, &spectrum, false, &out.join("closed")))
        .transpose()?;
    let open = matches!(config.mode, RunMode::Open | RunMode::Both)
        .then(|| run_single(config, &spectrum, true, &out.join("open")))
        .transpose()?;
    Ok(EvolveSummary { closed, open })
}

/// One member of a sweep.
#[derive(Debug, Clone)]
pub struct SweepMember {
    pub gamma0: f64,
    pub cutoff: f64,
    pub directory: PathBuf,
    pub outcome: Result<RunSummary, String>,
}

/// Outcome of a cutoff sweep.
#[derive(Debug, Clone)]
pub struct SweepSummary {
    pub config_hash: String,
    pub members: Vec<SweepMember>,
}

impl SweepSummary {
    pub fn failures(&self) -> usize {
        self.members.iter().filter(|m| m.outcome.is_err()).count()
    }

    /// Late-time mean energy per successful member, in member order.
    pub fn late_energies(&self) -> Vec<(f64, f64, f64)> {
        self.members
            .iter()
            .filter_map(|m| {
                let s = m.outcome.as_ref().ok()?;
                Some((m.gamma0, m.cutoff, s.records.last()?.mean_energy))
            })
            .collect()
    }
}

impl fmt::Display for SweepSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sweep config_hash {}", self.config_hash)?;
        writeln!(f, "{:>14} {:>14} {:>16} {:>16}  status", "gamma0", "cutoff", "late <E>", "late dE")?;
        for m in &self.members {
            match &m.outcome {
                Ok(s) => {
                    let last = s.records.last();
                    writeln!(
                        f,
                        "{:>14.6e} {:>14.6e} {:>16.6} {:>16.6}  ok",
                        m.gamma0,
                        m.cutoff,
                        last.map_or(f64::NAN, |r| r.mean_energy),
                        last.map_or(f64::NAN, |r| r.energy_dispersion)
                    )?;
                }
                Err(e) => writeln!(f, "{:>14.6e} {:>14.6e} {:>16} {:>16}  failed: {e}", m.gamma0, m.cutoff, "-", "-")?,
            }
        }
        Ok(())
    }
}

/// Number of sweep workers: available parallelism capped by
/// [`WORKERS_ENV`] and by the job count.
pub fn worker_count(jobs: usize) -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let cap = std::env::var(WORKERS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|&n| n > 0);
    cap.unwrap_or(available).min(available.max(1)).min(jobs).max(1)
}

/// Open runs over the configured cutoffs (and optional `γ₀` list), sharing
/// one spectrum. Member failures are recorded and do not stop the sweep.
pub fn cmd_sweep_cutoff(config: &RunConfig, out: &Path) -> Result<SweepSummary, Error> {
    ensure_dir(out)?;
    let hash = config.hash();
    let spectrum = cached_spectrum(config, out)?;
    let scales = spectrum.scales;
    let gammas: Vec<Quantity> = if config.sweep_gamma0.is_empty() { vec![config.gamma0] } else { config.sweep_gamma0.clone() };
    let multi_gamma = gammas.len() > 1;

    let mut jobs: Vec<(RunConfig, f64, f64, PathBuf)> = Vec::new();
    for (gi, g) in gammas.iter().enumerate() {
        for (ci, c) in config.sweep_cutoffs.iter().enumerate() {
            let mut member = config.clone();
            member.gamma0 = *g;
            member.cutoff = *c;
            member.mode = RunMode::Open;
            let name = if multi_gamma { format!("gamma_{gi}_cutoff_{ci}") } else { format!("cutoff_{ci}") };
            jobs.push((member, g.resolve(&scales), c.resolve(&scales), out.join(name)));
        }
    }

    let results: Mutex<Vec<Option<Result<RunSummary, String>>>> = Mutex::new(vec![None; jobs.len()]);
    let next = AtomicUsize::new(0);
    let workers = worker_count(jobs.len());
    log::info!("sweep: {} runs on {workers} worker(s)", jobs.len());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some((member, _, _, dir)) = jobs.get(k) else { break };
                let outcome = run_single(member, &spectrum, true, dir)
                    .map_err(|e| format!("{e} [config_hash={}]", member.hash()));
                if let Err(e) = &outcome {
                    log::error!("sweep member {k} failed: {e}");
                }
                results.lock().expect("results lock")[k] = Some(outcome);
            });
        }
    });
    let results = results.into_inner().expect("results lock");

    let members: Vec<SweepMember> = jobs
        .into_iter()
        .zip(results)
        .map(|((_, gamma0, cutoff, directory), r)| SweepMember {
            gamma0,
            cutoff,
            directory,
            outcome: r.unwrap_or_else(|| Err("run did not execute".into())),
        })
        .collect();

    write_sweep_outputs(out, &hash, &members)?;
    Ok(SweepSummary { config_hash: hash, members })
}

fn write_sweep_outputs(out: &Path, hash: &str, members: &[SweepMember]) -> Result<(), Error> {
    let mut rows = Vec::new();
    for m in members {
        if let Ok(s) = &m.outcome {
            rows.extend(s.records.iter().map(|r| vec![m.gamma0, m.cutoff, r.time, r.mean_energy, r.energy_dispersion]));
        }
    }
    io::write_csv(
        &out.join(SWEEP_FILE),
        hash,
        "",
        &["gamma0", "cutoff", "t", "mean_energy", "energy_dispersion"],
        rows,
    )?;

    let largest = members
        .iter()
        .filter_map(|m| m.outcome.as_ref().ok().map(|s| (m, s)))
        .max_by(|a, b| (a.0.cutoff, a.0.gamma0).partial_cmp(&(b.0.cutoff, b.0.gamma0)).unwrap_or(std::cmp::Ordering::Equal));
    if let Some((m, s)) = largest {
        let e0 = s.records.first().map_or(0.0, |r| r.mean_energy);
        let rows = s.records.iter().map(|r| vec![r.time, r.energy_dispersion, r.mean_energy - e0]);
        io::write_csv(
            &out.join(DISPERSION_FILE),
            hash,
            &format!("cutoff={:e} gamma0={:e}", m.cutoff, m.gamma0),
            &["t", "energy_dispersion", "mean_energy_gain"],
            rows,
        )?;
    }

    let mut entries: Vec<(String, String)> = vec![("sweep.members".into(), members.len().to_string())];
    for (k, m) in members.iter().enumerate() {
        entries.push((format!("member.{k}.gamma0"), format!("{:e}", m.gamma0)));
        entries.push((format!("member.{k}.cutoff"), format!("{:e}", m.cutoff)));
        entries.push((format!("member.{k}.directory"), m.directory.display().to_string()));
        entries.push((
            format!("member.{k}.status"),
            match &m.outcome {
                Ok(s) => format!("ok config_hash={}", s.config_hash),
                Err(e) => format!("failed: {e}"),
            },
        ));
    }
    io::write_metadata(&out.join(METADATA_FILE), hash, &entries)?;
    let failures: Vec<(String, String)> = members
        .iter()
        .enumerate()
        .filter_map(|(k, m)| m.outcome.as_ref().err().map(|e| (format!("member.{k}"), e.clone())))
        .collect();
    if !failures.is_empty() {
        io::write_metadata(&out.join(FAILURES_FILE), hash, &failures)?;
    }
    Ok(())
}
