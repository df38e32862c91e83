//! Isolated double-well Hamiltonian: potential, grid eigensolver and
//! tunneling-time estimates.

mod eigen;
mod potential;
mod tunneling;

pub use eigen::{
    check_coverage, minimal_coverage, solve_converged, solve_eigensystem, ConvergenceReport, EigenSystem,
    KineticScheme, Parity,
};
pub use potential::{build_potential, PotentialParams, SpatialGrid};
pub use tunneling::{tunneling_time_instanton, tunneling_time_numeric, InstantonEstimate, TUNNELING_FACTOR};
