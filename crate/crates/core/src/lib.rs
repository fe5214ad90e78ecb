//! Simulation and analysis of nonequilibrium steady states of anharmonic
//! oscillator lattices driven at their boundaries by heat reservoirs.
//!
//! The crate covers, at desk scale:
//!
//! * chains with auxiliary-variable (reduced Hamiltonian) reservoirs,
//!   hypercubes and general graphs with Langevin thermostats ([`model`]);
//! * seeded, reproducible SDE integration, a single-particle generalized
//!   Langevin equation with exponential memory, and deterministic
//!   zero-temperature relaxation ([`dynamics`]);
//! * local energies, heat flows, entropy production, two-temperature Gibbs
//!   weights, and exponential Lyapunov weights ([`observables`]);
//! * steady-state estimation, entropy-production large deviations and the
//!   fluctuation-theorem symmetry, Green–Kubo response, Lyapunov and
//!   dissipation probes, mixing rates ([`analysis`]);
//! * exact stationary statistics for quadratic potentials via the matrix
//!   Lyapunov equation, used as ground truth throughout ([`linear_oracle`]).

pub mod analysis;
pub mod dynamics;
pub mod linear_oracle;
pub mod model;
pub mod observables;
pub mod report;
