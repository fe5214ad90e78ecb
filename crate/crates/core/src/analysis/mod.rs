//! Steady-state estimation with error bars and the quantitative-law
//! analyses: entropy-production large deviations with the
//! fluctuation-theorem symmetry, Green–Kubo response, dissipation and
//! Lyapunov-weight probes, mixing-rate fits, and the n-nondegeneracy
//! probe. All estimators are pure functions of records or configs; the
//! ensemble runners inherit trajectory parallelism from `dynamics`.

mod green_kubo;
mod ldp;
mod mixing;
mod nondegeneracy;
mod probes;
mod steady;

pub use green_kubo::{green_kubo, GreenKuboReport, GreenKuboSpec, ProbeResult};
pub use ldp::{
    alpha_domain, entropy_integral_ensemble, gc_symmetry_check, harvest_stationary_states,
    legendre_rate, mgf_cumulant, CumulantCurve, GcPair, GcSymmetryReport, LdpSpec, RateFunction,
};
pub use mixing::{autocorrelation, fit_exponential_envelope, mixing_rate, MixingReport};
pub use nondegeneracy::{nondegeneracy_probe, NondegeneracyProbeReport};
pub use probes::{
    dissipation_scaling, lyapunov_probe, DissipationScalingReport, EnergyDropSample,
    LyapunovProbeReport, ShellEstimate,
};
pub use steady::{
    batch_means, batch_means_pooled, stationary_second_moments, steady_state, CovarianceEstimate,
    MomentEstimate, ObservableReport, SteadyStateReport,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid analysis parameters: {0}")]
    Invalid(String),
    #[error("record too short: {0}")]
    RecordTooShort(String),
    #[error("alpha = {alpha} outside the analyticity domain ({lo}, {hi})")]
    AlphaOutOfDomain { alpha: f64, lo: f64, hi: f64 },
    #[error("cumulant curve not concave: adjustment {max_adjustment:.3e} exceeds tolerance {allowed:.3e}")]
    NonConvex { max_adjustment: f64, allowed: f64 },
    #[error("alpha grid not symmetric about 1/2: no mirror for alpha = {alpha}")]
    GridNotSymmetric { alpha: f64 },
    #[error("{0}")]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error("{0}")]
    Observable(#[from] crate::observables::ObservableError),
    #[error("{0}")]
    Oracle(#[from] crate::linear_oracle::OracleError),
}
