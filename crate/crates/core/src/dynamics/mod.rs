//! Time integration of the lattice SDEs and trajectory plumbing: seeded
//! runs, ensembles, the memory-kernel single-particle equation, and
//! zero-temperature relaxation.

mod gle;
mod integrator;
mod record;
mod rng;
mod simulate;

pub use gle::{simulate_gle, GleConfig};
pub use integrator::{
    diffusion_amplitudes, drift, step, suggested_dt, Drift, IntegratorSpec, NoiseCoordinate,
    Scheme, Stepper,
};
pub use record::TrajectoryRecord;
pub use rng::{splitmix64, trajectory_seed, NormalSource};
pub use simulate::{
    relax_deterministic, sample_energy_shell, simulate, simulate_ensemble, RelaxationReport,
    StateSampler,
};

use thiserror::Error;

use crate::model::ModelError;
use crate::observables::ObservableError;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid integrator or run specification: {0}")]
    InvalidSpec(String),
    #[error("non-finite coordinate at t = {t}")]
    NonFinite { t: f64 },
    #[error("energy cap exceeded at t = {t}: G = {g:.3e} > {cap:.3e}")]
    EnergyCap { t: f64, g: f64, cap: f64 },
    #[error("{0}")]
    Model(#[from] ModelError),
    #[error("{0}")]
    Observable(#[from] ObservableError),
    #[error("{} trajectories failed; first: index {}: {}", failures.len(), failures[0].0, failures[0].1)]
    Ensemble { failures: Vec<(u64, String)> },
}
