//! Run configuration in flat `section.key = value` text.
//!
//! Blank lines and lines starting with `#` are ignored. Values that denote
//! times may carry the suffix `tau` (multiples of the numeric tunneling time);
//! values that denote frequencies may carry `gap` (the ground doublet
//! splitting), `v0` or `omega`. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{ConfigError, IoError};

/// A number optionally scaled by a named model quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Quantity {
    Absolute(f64),
    /// Multiple of the tunneling time.
    Tau(f64),
    /// Multiple of the doublet splitting `ω_1 - ω_0`.
    Gap(f64),
    /// Multiple of the barrier height.
    V0(f64),
    /// Multiple of the well frequency.
    Omega(f64),
}

impl Quantity {
    fn parse(key: &str, raw: &str, allowed: &[&str]) -> Result<Self, ConfigError> {
        let s = raw.trim();
        let lower = s.to_ascii_lowercase();
        for unit in allowed {
            if let Some(num) = lower.strip_suffix(unit) {
                let num = num.trim().trim_end_matches('*').trim();
                let factor = if num.is_empty() { 1.0 } else { parse_f64(key, num)? };
                return Ok(match *unit {
                    "tau" => Quantity::Tau(factor),
                    "gap" => Quantity::Gap(factor),
                    "v0" => Quantity::V0(factor),
                    _ => Quantity::Omega(factor),
                });
            }
        }
        Ok(Quantity::Absolute(parse_f64(key, s)?))
    }

    /// Numeric value given the model scales.
    pub fn resolve(&self, scales: &Scales) -> f64 {
        match *self {
            Quantity::Absolute(v) => v,
            Quantity::Tau(f) => f * scales.tau,
            Quantity::Gap(f) => f * scales.gap,
            Quantity::V0(f) => f * scales.v0,
            Quantity::Omega(f) => f * scales.omega,
        }
    }

    fn render(&self) -> String {
        match *self {
            Quantity::Absolute(v) => format!("{v:?}"),
            Quantity::Tau(f) => format!("{f:?}tau"),
            Quantity::Gap(f) => format!("{f:?}gap"),
            Quantity::V0(f) => format!("{f:?}v0"),
            Quantity::Omega(f) => format!("{f:?}omega"),
        }
    }
}

/// Model scales used to resolve relative quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scales {
    pub tau: f64,
    pub gap: f64,
    pub v0: f64,
    pub omega: f64,
}

const TIME_UNITS: &[&str] = &["tau"];
const FREQUENCY_UNITS: &[&str] = &["gap", "v0", "omega"];

fn parse_f64(key: &str, s: &str) -> Result<f64, ConfigError> {
    let v: f64 = s.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        message: format!("`{s}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(ConfigError::InvalidValue { key: key.to_string(), message: "value must be finite".into() });
    }
    Ok(v)
}

fn is_auto(s: &str) -> bool {
    s.trim().eq_ignore_ascii_case("auto")
}

fn parse_optional(key: &str, s: &str) -> Result<Option<f64>, ConfigError> {
    if is_auto(s) {
        Ok(None)
    } else {
        parse_f64(key, s).map(Some)
    }
}

fn parse_usize(key: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim().parse().map_err(|_| ConfigError::InvalidValue {
        key: key.to_string(),
        message: format!("`{s}` is not a non-negative integer"),
    })
}

fn parse_bool(key: &str, s: &str) -> Result<bool, ConfigError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(ConfigError::InvalidValue { key: key.to_string(), message: format!("`{other}` is not a boolean") }),
    }
}

fn choice<'a>(key: &str, s: &str, options: &[&'a str]) -> Result<&'a str, ConfigError> {
    let v = s.trim().to_ascii_lowercase();
    options.iter().copied().find(|o| *o == v).ok_or_else(|| ConfigError::InvalidValue {
        key: key.to_string(),
        message: format!("`{s}` is not one of {}", options.join(", ")),
    })
}

fn list(s: &str) -> Vec<&str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).collect()
}

/// Eigensolver discretization selected in the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeChoice {
    Sinc,
    FiniteDifference(usize),
}

/// Which evolutions `evolve` performs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Closed,
    Open,
    Both,
}

/// Fully parsed configuration with defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega: f64,
    pub v0: f64,
    /// Replace the double well with `½ω²x²` (oracle runs).
    pub harmonic: bool,
    pub n_points: usize,
    pub half_width: Option<f64>,
    pub scheme: SchemeChoice,
    pub convergence_tolerance: f64,
    pub n_states: usize,

    pub gamma0: Quantity,
    pub cutoff: Quantity,
    pub temperature: f64,
    pub frozen_coefficients: bool,

    pub state_kind: String,
    pub state_center: Option<f64>,
    pub state_width: Option<f64>,
    pub state_phase: f64,
    pub state_weights: (f64, f64),

    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub t_final: Quantity,
    pub snapshot_count: usize,
    pub snapshot_times: Option<Vec<Quantity>>,
    pub refresh: String,
    pub refresh_threshold: f64,

    pub mode: RunMode,
    pub wigner_stride: usize,
    pub wigner_p_max: Option<f64>,
    pub wigner_dp: Option<f64>,
    pub figure_times: Vec<Quantity>,
    pub write_density: bool,
    pub write_coefficients: bool,

    pub sweep_cutoffs: Vec<Quantity>,
    pub sweep_gamma0: Vec<Quantity>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega: 100.0,
            v0: 200.0,
            harmonic: false,
            n_points: 512,
            half_width: None,
            scheme: SchemeChoice::Sinc,
            convergence_tolerance: 1e-6,
            n_states: 20,
            gamma0: Quantity::Absolute(0.2),
            cutoff: Quantity::V0(10.0),
            temperature: 0.0,
            frozen_coefficients: false,
            state_kind: "cat".into(),
            state_center: None,
            state_width: None,
            state_phase: 0.0,
            state_weights: (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: None,
            h_max: None,
            t_final: Quantity::Tau(1.5),
            snapshot_count: 200,
            snapshot_times: None,
            refresh: "per_stage".into(),
            refresh_threshold: 0.2,
            mode: RunMode::Both,
            wigner_stride: 2,
            wigner_p_max: None,
            wigner_dp: None,
            figure_times: vec![Quantity::Tau(0.0), Quantity::Tau(0.25), Quantity::Tau(0.5), Quantity::Tau(1.0)],
            write_density: true,
            write_coefficients: false,
            sweep_cutoffs: vec![Quantity::Gap(1.0), Quantity::V0(0.1), Quantity::V0(1.0), Quantity::V0(10.0)],
            sweep_gamma0: Vec::new(),
        }
    }
}

/// Every accepted key, in canonical order.
pub const KEYS: &[&str] = &[
    "potential.omega",
    "potential.v0",
    "potential.harmonic",
    "grid.n_points",
    "grid.half_width",
    "grid.scheme",
    "grid.tolerance",
    "basis.n_states",
    "bath.gamma0",
    "bath.cutoff",
    "bath.temperature",
    "bath.coefficients",
    "state.kind",
    "state.center",
    "state.width",
    "state.phase",
    "state.weight_plus",
    "state.weight_minus",
    "integrator.rel_tol",
    "integrator.abs_tol",
    "integrator.h_init",
    "integrator.h_max",
    "integrator.t_final",
    "integrator.snapshots",
    "integrator.snapshot_times",
    "integrator.refresh",
    "integrator.refresh_threshold",
    "run.mode",
    "output.wigner_stride",
    "output.wigner_p_max",
    "output.wigner_dp",
    "output.figure_times",
    "output.density",
    "output.coefficients",
    "sweep.cutoffs",
    "sweep.gamma0",
];

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IoError::File { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses configuration text; `origin` names the source in messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let location = format!("{origin}:{}", lineno + 1);
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
                location: location.clone(),
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            if !KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey(key));
            }
            if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(ConfigError::Parse { location, message: format!("duplicate key `{key}`") });
            }
        }
        Self::from_entries(&entries)
    }

    fn from_entries(e: &BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut c = RunConfig::default();
        for (key, v) in e {
            let k = key.as_str();
            match k {
                "potential.omega" => c.omega = parse_f64(k, v)?,
                "potential.v0" => c.v0 = parse_f64(k, v)?,
                "potential.harmonic" => c.harmonic = parse_bool(k, v)?,
                "grid.n_points" => c.n_points = parse_usize(k, v)?,
                "grid.half_width" => c.half_width = parse_optional(k, v)?,
                "grid.scheme" => {
                    c.scheme = match choice(k, v, &["sinc", "fd2", "fd4", "fd6", "fd8"])? {
                        "sinc" => SchemeChoice::Sinc,
                        other => SchemeChoice::FiniteDifference(other[2..].parse().unwrap_or(2)),
                    }
                }
                "grid.tolerance" => c.convergence_tolerance = parse_f64(k, v)?,
                "basis.n_states" => c.n_states = parse_usize(k, v)?,
                "bath.gamma0" => c.gamma0 = Quantity::parse(k, v, FREQUENCY_UNITS)?,
                "bath.cutoff" => c.cutoff = Quantity::parse(k, v, FREQUENCY_UNITS)?,
                "bath.temperature" => c.temperature = parse_f64(k, v)?,
                "bath.coefficients" => {
                    c.frozen_coefficients = choice(k, v, &["time_dependent", "frozen"])? == "frozen";
                }
                "state.kind" => c.state_kind = choice(k, v, &["cat", "localized"])?.to_string(),
                "state.center" => c.state_center = parse_optional(k, v)?,
                "state.width" => c.state_width = parse_optional(k, v)?,
                "state.phase" => c.state_phase = parse_f64(k, v)?,
                "state.weight_plus" => c.state_weights.0 = parse_f64(k, v)?,
                "state.weight_minus" => c.state_weights.1 = parse_f64(k, v)?,
                "integrator.rel_tol" => c.rel_tol = parse_f64(k, v)?,
                "integrator.abs_tol" => c.abs_tol = parse_f64(k, v)?,
                "integrator.h_init" => c.h_init = parse_optional(k, v)?,
                "integrator.h_max" => c.h_max = parse_optional(k, v)?,
                "integrator.t_final" => c.t_final = Quantity::parse(k, v, TIME_UNITS)?,
                "integrator.snapshots" => c.snapshot_count = parse_usize(k, v)?,
                "integrator.snapshot_times" => {
                    c.snapshot_times = if is_auto(v) {
                        None
                    } else {
                        Some(list(v).into_iter().map(|s| Quantity::parse(k, s, TIME_UNITS)).collect::<Result<_, _>>()?)
                    }
                }
                "integrator.refresh" => {
                    c.refresh = choice(k, v, &["per_stage", "per_step", "adaptive"])?.to_string();
                }
                "integrator.refresh_threshold" => c.refresh_threshold = parse_f64(k, v)?,
                "run.mode" => {
                    c.mode = match choice(k, v, &["closed", "open", "both"])? {
                        "closed" => RunMode::Closed,
                        "open" => RunMode::Open,
                        _ => RunMode::Both,
                    }
                }
                "output.wigner_stride" => c.wigner_stride = parse_usize(k, v)?,
                "output.wigner_p_max" => c.wigner_p_max = parse_optional(k, v)?,
                "output.wigner_dp" => c.wigner_dp = parse_optional(k, v)?,
                "output.figure_times" => {
                    c.figure_times =
                        list(v).into_iter().map(|s| Quantity::parse(k, s, TIME_UNITS)).collect::<Result<_, _>>()?;
                }
                "output.density" => c.write_density = parse_bool(k, v)?,
                "output.coefficients" => c.write_coefficients = parse_bool(k, v)?,
                "sweep.cutoffs" => {
                    c.sweep_cutoffs =
                        list(v).into_iter().map(|s| Quantity::parse(k, s, FREQUENCY_UNITS)).collect::<Result<_, _>>()?;
                }
                "sweep.gamma0" => {
                    c.sweep_gamma0 =
                        list(v).into_iter().map(|s| Quantity::parse(k, s, FREQUENCY_UNITS)).collect::<Result<_, _>>()?;
                }
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks ranges that do not depend on the solved spectrum.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, message: &str| {
            Err(ConfigError::InvalidValue { key: key.to_string(), message: message.to_string() })
        };
        if !(self.omega > 0.0) {
            return bad("potential.omega", "must be positive");
        }
        if !(self.v0 > 0.0) {
            return bad("potential.v0", "must be positive");
        }
        if self.n_states < 2 {
            return bad("basis.n_states", "need at least two states");
        }
        if !(self.convergence_tolerance > 0.0) {
            return bad("grid.tolerance", "must be positive");
        }
        if self.temperature != 0.0 {
            return bad("bath.temperature", "only zero temperature is supported");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-3) {
            return bad("integrator.rel_tol", "must lie in (0, 1e-3]");
        }
        if !(self.abs_tol > 0.0) {
            return bad("integrator.abs_tol", "must be positive");
        }
        if self.snapshot_count < 8 && self.snapshot_times.is_none() {
            return bad("integrator.snapshots", "need at least 8 snapshots");
        }
        if self.wigner_stride == 0 {
            return bad("output.wigner_stride", "must be at least 1");
        }
        if self.sweep_cutoffs.is_empty() {
            return bad("sweep.cutoffs", "list must not be empty");
        }
        if !(self.refresh_threshold > 0.0) {
            return bad("integrator.refresh_threshold", "must be positive");
        }
        Ok(())
    }

    /// Canonical `key = value` rendering of every setting, defaults included.
    pub fn canonical(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let qs = |v: &[Quantity]| v.iter().map(Quantity::render).collect::<Vec<_>>().join(", ");
        let scheme = match self.scheme {
            SchemeChoice::Sinc => "sinc".to_string(),
            SchemeChoice::FiniteDifference(o) => format!("fd{o}"),
        };
        let mode = match self.mode {
            RunMode::Closed => "closed",
            RunMode::Open => "open",
            RunMode::Both => "both",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("potential.omega", format!("{:?}", self.omega)),
            ("potential.v0", format!("{:?}", self.v0)),
            ("potential.harmonic", self.harmonic.to_string()),
            ("grid.n_points", self.n_points.to_string()),
            ("grid.half_width", opt(self.half_width)),
            ("grid.scheme", scheme),
            ("grid.tolerance", format!("{:?}", self.convergence_tolerance)),
            ("basis.n_states", self.n_states.to_string()),
            ("bath.gamma0", self.gamma0.render()),
            ("bath.cutoff", self.cutoff.render()),
            ("bath.temperature", format!("{:?}", self.temperature)),
            ("bath.coefficients", if self.frozen_coefficients { "frozen" } else { "time_dependent" }.into()),
            ("state.kind", self.state_kind.clone()),
            ("state.center", opt(self.state_center)),
            ("state.width", opt(self.state_width)),
            ("state.phase", format!("{:?}", self.state_phase)),
            ("state.weight_plus", format!("{:?}", self.state_weights.0)),
            ("state.weight_minus", format!("{:?}", self.state_weights.1)),
            ("integrator.rel_tol", format!("{:?}", self.rel_tol)),
            ("integrator.abs_tol", format!("{:?}", self.abs_tol)),
            ("integrator.h_init", opt(self.h_init)),
            ("integrator.h_max", opt(self.h_max)),
            ("integrator.t_final", self.t_final.render()),
            ("integrator.snapshots", self.snapshot_count.to_string()),
            ("integrator.snapshot_times", self.snapshot_times.as_deref().map_or("auto".into(), qs)),
            ("integrator.refresh", self.refresh.clone()),
            ("integrator.refresh_threshold", format!("{:?}", self.refresh_threshold)),
            ("run.mode", mode.into()),
            ("output.wigner_stride", self.wigner_stride.to_string()),
            ("output.wigner_p_max", opt(self.wigner_p_max)),
            ("output.wigner_dp", opt(self.wigner_dp)),
            ("output.figure_times", qs(&self.figure_times)),
            ("output.density", self.write_density.to_string()),
            ("output.coefficients", self.write_coefficients.to_string()),
            ("sweep.cutoffs", qs(&self.sweep_cutoffs)),
            ("sweep.gamma0", qs(&self.sweep_gamma0)),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical rendering.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
