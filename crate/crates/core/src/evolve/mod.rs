//! Initial states, the master-equation right-hand side and its adaptive
//! integration.

mod integrator;
mod rhs;
mod state;

pub use integrator::{
    default_snapshot_times, integrate, IntegrationStats, IntegratorConfig, RefreshPolicy, Snapshot, Trajectory,
};
pub use rhs::{master_rhs, RhsWorkspace};
pub use state::{prepare_state, DensityMatrix, InitialStateSpec, PreparedState, StateKind, COMPLETENESS_TOLERANCE};
