use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("invalid potential parameters: {0}")]
    InvalidParameters(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(
        "grid too narrow: half-width {half_width} is below the bound L >= 3x0 + 6/sqrt(2*omega) = {required} (x0 = {x_min}); increase grid.half_width"
    )]
    GridTooNarrow { half_width: f64, required: f64, x_min: f64 },
    #[error("requested {n_states} states but the bound n_states <= n_points/4 allows at most {max} on {n_points} points; increase grid.n_points or reduce basis.n_states")]
    TooManyStates { n_states: usize, n_points: usize, max: usize },
    #[error("basis does not reach E0 + 5*V0: highest retained level is {highest}, need at least {required}; increase basis.n_states")]
    InsufficientCoverage { highest: f64, required: f64 },
    #[error("eigenvalues did not converge under two grid doublings: worst relative shift {drift:e} (tolerance {tolerance:e}); increase grid.n_points, widen grid.half_width or use grid.scheme = sinc")]
    NotConverged { drift: f64, tolerance: f64 },
    #[error("degenerate ground doublet: gap {gap:e} is below the resolvable threshold")]
    DegenerateDoublet { gap: f64 },
    #[error("eigensolver failed: {0}")]
    Solver(String),
}

#[derive(Debug, Error)]
pub enum BathError {
    #[error("invalid bath parameters: {0}")]
    InvalidParameters(String),
    #[error("non-finite bath coefficient at t = {t} for gap {gap}")]
    NonFinite { t: f64, gap: f64 },
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid initial state: {0}")]
    InvalidState(String),
    #[error("invalid integrator settings: {0}")]
    InvalidSettings(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("step size collapsed to {dt:e} at t = {t} (stiff regime; reduce the coupling or the cutoff)")]
    Stiffness { t: f64, dt: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("positivity lost at t = {t}: smallest eigenvalue {min_eigenvalue:e}")]
    PositivityLost { t: f64, min_eigenvalue: f64 },
    #[error(transparent)]
    Bath(#[from] BathError),
}

#[derive(Debug, Error)]
pub enum ObserveError {
    #[error("invalid observable settings: {0}")]
    InvalidSettings(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: String, source: std::io::Error },
    #[error("{path}: malformed input: {message}")]
    Format { path: String, message: String },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Top-level error for the pipeline and the command-line tool.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Bath(#[from] BathError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Observe(#[from] ObserveError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Broad classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad input: configuration, parameters or files.
    Input,
    /// Numerical failure during a run.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) | Error::Io(_) => ErrorKind::Input,
            Error::Spectral(e) => match e {
                SpectralError::InvalidParameters(_)
                | SpectralError::InvalidGrid(_)
                | SpectralError::GridTooNarrow { .. }
                | SpectralError::TooManyStates { .. }
                | SpectralError::InsufficientCoverage { .. } => ErrorKind::Input,
                _ => ErrorKind::Numerical,
            },
            Error::Bath(BathError::InvalidParameters(_)) => ErrorKind::Input,
            Error::Bath(_) => ErrorKind::Numerical,
            Error::Evolve(e) => match e {
                EvolveError::InvalidState(_) | EvolveError::InvalidSettings(_) | EvolveError::Dimension(_) => {
                    ErrorKind::Input
                }
                EvolveError::Bath(BathError::InvalidParameters(_)) => ErrorKind::Input,
                _ => ErrorKind::Numerical,
            },
            Error::Observe(_) => ErrorKind::Input,
        }
    }
}
