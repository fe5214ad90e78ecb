//! Domain types: potentials, lattice topologies, reservoirs, and assembled
//! systems, plus the structural assumption checkers.
//!
//! Everything here is immutable after construction and cheap to clone;
//! configs are shared freely across trajectory workers. `SystemState` is a
//! value type owned by one worker at a time.

mod assumptions;
mod config;
mod potential;
mod topology;

pub use assumptions::{check_h1, check_h2, GrowthReport, NondegeneracyReport};
pub use config::{
    build_chain, build_graph, build_hypercube, diamond_fixture, potential_energy,
    potential_gradient, potential_gradient_into, total_energy_g, ConfigWarning, ReservoirKind,
    ReservoirSpec, SystemConfig, SystemState, DEFAULT_VERTEX_CAP,
};
pub use potential::PolynomialPotential;
pub use topology::{BathAttachment, LatticeTopology, TopologyKind};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid topology: {0}")]
    InvalidTopology(String),
    #[error("invalid reservoir: {0}")]
    InvalidReservoir(String),
    #[error("hypercube vertex count exceeds the cap of {cap}")]
    VertexCountCap { cap: usize },
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
    #[error("state contains non-finite coordinates")]
    NonFiniteState,
    #[error("unsupported topology: {0}")]
    UnsupportedTopology(String),
}
