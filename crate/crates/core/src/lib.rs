//! Macroscopic quantum tunneling in a double well coupled to an Ohmic bath at
//! zero temperature.

pub mod bath;
pub mod config;
pub mod error;
pub mod evolve;
pub mod io;
pub mod num;
pub mod observe;
pub mod run;
pub mod special;
pub mod spectral;

pub use error::{Error, ErrorKind};
pub use num::{Complex, Real};

pub type PotentialParamsF64 = spectral::PotentialParams<f64>;
pub type PotentialParamsF32 = spectral::PotentialParams<f32>;
pub type SpatialGridF64 = spectral::SpatialGrid<f64>;
pub type SpatialGridF32 = spectral::SpatialGrid<f32>;
pub type EigenSystemF64 = spectral::EigenSystem<f64>;
pub type EigenSystemF32 = spectral::EigenSystem<f32>;
pub type BathModelF64 = bath::BathModel<f64>;
pub type BathModelF32 = bath::BathModel<f32>;
pub type CoefficientTableF64 = bath::CoefficientTable<f64>;
pub type CoefficientTableF32 = bath::CoefficientTable<f32>;
pub type DensityMatrixF64 = evolve::DensityMatrix<f64>;
pub type DensityMatrixF32 = evolve::DensityMatrix<f32>;
pub type TrajectoryF64 = evolve::Trajectory<f64>;
pub type TrajectoryF32 = evolve::Trajectory<f32>;
pub type WignerGridF64 = observe::WignerGrid<f64>;
pub type WignerGridF32 = observe::WignerGrid<f32>;
pub type ObservableRecordF64 = observe::ObservableRecord<f64>;
pub type ObservableRecordF32 = observe::ObservableRecord<f32>;
