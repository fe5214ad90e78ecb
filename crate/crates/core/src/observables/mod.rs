//! Local energies, heat flows, entropy production, two-temperature Gibbs
//! weights, and exponential Lyapunov weights.
//!
//! Sign conventions. Positive flow means energy moving from the "left"
//! reservoir (reservoir 0) toward the "right" one (reservoir 1): the bath
//! exchange term `Φ_0 = −λ r_1 p_1` is positive when the left bath injects,
//! and the bond flow `Φ_i = (p_i+p_{i+1})/2 · U2'(q_i − q_{i+1})` is positive
//! when energy moves toward higher site index. Entropy production is
//! oriented so that its stationary mean is nonnegative,
//! `σ_j = (1/T_right − 1/T_left) Φ_j`, which vanishes identically at
//! equilibrium and is positive when heat flows from hot to cold.
//!
//! Column naming for records and CSV output: site-indexed observables are
//! 1-based (`p_1`, `q_1`, `H_1` refer to the first site, `r_1` to the first
//! reservoir attachment); flow and weight indices are used verbatim
//! (`Phi_0` is the left bath flow, `R_0` the split with no site in the left
//! group). `W_theta(0.25)` is the exponential weight at θ = 0.25.

mod names;

pub use names::Observable;

use serde::Serialize;
use thiserror::Error;

use crate::model::{
    potential_energy, total_energy_g, ReservoirKind, SystemConfig, SystemState, TopologyKind,
};

#[derive(Debug, Error)]
pub enum ObservableError {
    #[error("unsupported topology for this observable: {0}")]
    UnsupportedTopology(String),
    #[error("entropy production is undefined at zero reservoir temperature")]
    ZeroTemperature,
    #[error("unknown observable name `{0}`")]
    UnknownObservable(String),
    #[error("record has no `{0}` column")]
    MissingObservable(String),
    #[error("flow index {index} out of range ({count} flows)")]
    FlowIndex { index: usize, count: usize },
    #[error("observable index {index} out of range ({count})")]
    IndexRange { index: usize, count: usize },
}

/// Heat flows of one state, ordered left-to-right:
///
/// * chain (reduced reservoirs): `[Φ_0, Φ_1, …, Φ_{n−1}, Φ_n]` — left bath
///   exchange, bond flows, right bath exchange;
/// * hypercube (Langevin): left-face injection, the interplane flows for
///   `k = −N..N−1`, right-face extraction;
/// * general graph: one flow per reservoir, positive into the reservoir.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSet {
    pub values: Vec<f64>,
}

/// Number of flow entries `heat_flows` produces for this config.
pub fn flow_count(config: &SystemConfig) -> usize {
    match (config.reservoir_kind(), &config.topology.kind) {
        (ReservoirKind::MarkovianAux, TopologyKind::Chain) => config.vertex_count() + 1,
        (ReservoirKind::Langevin, TopologyKind::Hypercube { n_side, .. }) => 2 * n_side + 2,
        _ => config.topology.boundary.len(),
    }
}

pub fn heat_flows(config: &SystemConfig, state: &SystemState) -> FlowSet {
    let n = config.vertex_count();
    let mut values = Vec::with_capacity(flow_count(config));
    match (config.reservoir_kind(), &config.topology.kind) {
        (ReservoirKind::MarkovianAux, TopologyKind::Chain) => {
            let left = config.attachment_reservoir(0);
            values.push(-left.coupling * state.r[0] * state.p[0]);
            for j in 1..n {
                let u = config.pair.eval_deriv(state.q[j - 1] - state.q[j]);
                values.push(0.5 * (state.p[j - 1] + state.p[j]) * u);
            }
            let right = config.attachment_reservoir(1);
            values.push(right.coupling * state.r[1] * state.p[n - 1]);
        }
        (ReservoirKind::Langevin, TopologyKind::Hypercube { n_side, dim }) => {
            let side = 2 * n_side + 1;
            let stride = side.pow(*dim as u32 - 1);
            let mut left = 0.0;
            let mut right = 0.0;
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                let p = state.p[att.vertex];
                if att.reservoir == 0 {
                    left += res.coupling * (res.temperature - p * p);
                } else {
                    right += res.coupling * (p * p - res.temperature);
                }
            }
            values.push(left);
            for k in 0..side - 1 {
                let mut phi = 0.0;
                for v in 0..n {
                    if (v / stride) % side == k {
                        let w = v + stride;
                        let u = config.pair.eval_deriv(state.q[v] - state.q[w]);
                        phi += 0.5 * (state.p[v] + state.p[w]) * u;
                    }
                }
                values.push(phi);
            }
            values.push(right);
        }
        _ => {
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                let p = state.p[att.vertex];
                values.push(res.coupling * (p * p - res.temperature));
            }
        }
    }
    FlowSet { values }
}

/// Local energies `H_1..H_n`: each site carries its kinetic and onsite
/// terms plus half of every incident pair term, so `Σ_i H_i = H` exactly.
/// Hypercube configs use `hyperplane_energies` instead.
pub fn local_energies(
    config: &SystemConfig,
    state: &SystemState,
) -> Result<Vec<f64>, ObservableError> {
    if matches!(config.topology.kind, TopologyKind::Hypercube { .. }) {
        return Err(ObservableError::UnsupportedTopology(
            "per-site local energies are defined for chains and general graphs; \
             use hyperplane_energies for hypercubes"
                .into(),
        ));
    }
    let mut h: Vec<f64> = state
        .p
        .iter()
        .zip(&state.q)
        .map(|(&p, &q)| 0.5 * p * p + config.onsite.eval(q))
        .collect();
    for &(a, b) in &config.topology.edges {
        let pair = 0.5 * config.pair.eval(state.q[a] - state.q[b]);
        h[a] += pair;
        h[b] += pair;
    }
    Ok(h)
}

/// Hyperplane energies `H_k` for `k = −N..N`: kinetic and onsite terms of
/// the plane plus half of each intra-plane pair term. Cross-plane pair
/// terms belong to the flow bookkeeping, so
/// `Σ_k H_k + Σ_{cross edges} U2 = H`.
pub fn hyperplane_energies(
    config: &SystemConfig,
    state: &SystemState,
) -> Result<Vec<f64>, ObservableError> {
    let TopologyKind::Hypercube { n_side, dim } = config.topology.kind else {
        return Err(ObservableError::UnsupportedTopology(
            "hyperplane energies are defined for hypercubes".into(),
        ));
    };
    let side = 2 * n_side + 1;
    let stride = side.pow(dim as u32 - 1);
    let plane_of = |v: usize| (v / stride) % side;
    let mut h = vec![0.0; side];
    for v in 0..config.vertex_count() {
        h[plane_of(v)] += 0.5 * state.p[v] * state.p[v] + config.onsite.eval(state.q[v]);
    }
    for &(a, b) in &config.topology.edges {
        if plane_of(a) == plane_of(b) {
            h[plane_of(a)] += config.pair.eval(state.q[a] - state.q[b]);
        }
    }
    Ok(h)
}

fn boundary_temperatures(config: &SystemConfig) -> Result<(f64, f64), ObservableError> {
    if config.reservoirs.len() < 2 {
        return Err(ObservableError::UnsupportedTopology(
            "directional entropy production needs two reservoirs".into(),
        ));
    }
    let t_left = config.reservoirs[0].temperature;
    let t_right = config.reservoirs[1].temperature;
    if t_left <= 0.0 || t_right <= 0.0 {
        return Err(ObservableError::ZeroTemperature);
    }
    Ok((t_left, t_right))
}

/// `σ_j = (1/T_right − 1/T_left) Φ_j` for chains and hypercubes; exactly
/// zero at equal temperatures.
pub fn entropy_production(
    config: &SystemConfig,
    state: &SystemState,
    j: usize,
) -> Result<f64, ObservableError> {
    let (t_left, t_right) = boundary_temperatures(config)?;
    let flows = heat_flows(config, state);
    let phi = flows
        .values
        .get(j)
        .ok_or(ObservableError::FlowIndex { index: j, count: flows.values.len() })?;
    Ok((1.0 / t_right - 1.0 / t_left) * phi)
}

/// Total entropy production into the reservoirs of a Langevin config:
/// `σ = Σ_b (λ_b/T_b)(p_b² − T_b)`, the graph form of the flow balance.
pub fn total_bath_entropy_production(
    config: &SystemConfig,
    state: &SystemState,
) -> Result<f64, ObservableError> {
    if config.reservoir_kind() != ReservoirKind::Langevin {
        return Err(ObservableError::UnsupportedTopology(
            "total bath entropy production is defined for Langevin reservoirs".into(),
        ));
    }
    let mut sigma = 0.0;
    for (b, att) in config.topology.boundary.iter().enumerate() {
        let res = config.attachment_reservoir(b);
        if res.temperature <= 0.0 {
            return Err(ObservableError::ZeroTemperature);
        }
        let p = state.p[att.vertex];
        sigma += res.coupling / res.temperature * (p * p - res.temperature);
    }
    Ok(sigma)
}

/// Boundary entropy production `Φ_n/T_right − Φ_0/T_left` (entropy flux
/// into the two reservoirs). With `alt` the first bond flow `Φ_1` replaces
/// `Φ_0` on the left side; the two variants share their stationary mean.
pub fn boundary_entropy_production(
    config: &SystemConfig,
    state: &SystemState,
    alt: bool,
) -> Result<f64, ObservableError> {
    if !matches!(config.topology.kind, TopologyKind::Chain) {
        return Err(ObservableError::UnsupportedTopology(
            "boundary entropy production is defined for chains".into(),
        ));
    }
    let (t_left, t_right) = boundary_temperatures(config)?;
    let flows = heat_flows(config, state);
    let n = flows.values.len() - 1;
    let left_index = if alt { 1.min(n) } else { 0 };
    Ok(flows.values[n] / t_right - flows.values[left_index] / t_left)
}

/// Exponent of the two-temperature Gibbs weight:
/// `R_j = (r_left²/2 + Σ_{k≤j} H_k)/T_left + (Σ_{k>j} H_k + r_right²/2)/T_right`
/// for a split after the first `j` sites, `j = 0..=n`.
pub fn two_temperature_weight(
    config: &SystemConfig,
    state: &SystemState,
    j: usize,
) -> Result<f64, ObservableError> {
    if !matches!(config.topology.kind, TopologyKind::Chain)
        || config.reservoir_kind() != ReservoirKind::MarkovianAux
    {
        return Err(ObservableError::UnsupportedTopology(
            "two-temperature weight is defined for reduced-reservoir chains".into(),
        ));
    }
    let n = config.vertex_count();
    if j > n {
        return Err(ObservableError::IndexRange { index: j, count: n + 1 });
    }
    let (t_left, t_right) = boundary_temperatures(config)?;
    let h = local_energies(config, state)?;
    let left_sum: f64 = h[..j].iter().sum();
    let right_sum: f64 = h[j..].iter().sum();
    Ok((0.5 * state.r[0] * state.r[0] + left_sum) / t_left
        + (right_sum + 0.5 * state.r[1] * state.r[1]) / t_right)
}

/// Whether θ lies inside the contraction range `0 < θ < 1/max T_b`.
pub fn theta_in_range(config: &SystemConfig, theta: f64) -> bool {
    let t_max = config.max_temperature();
    theta > 0.0 && (t_max == 0.0 || theta < 1.0 / t_max)
}

/// `W_θ = exp(θ G)`. Saturates to `+∞` on overflow; use the log form for
/// high shells.
pub fn lyapunov_weight(config: &SystemConfig, state: &SystemState, theta: f64) -> f64 {
    log_lyapunov_weight(config, state, theta).exp()
}

/// `log W_θ = θ G`, the overflow-safe accumulator.
pub fn log_lyapunov_weight(config: &SystemConfig, state: &SystemState, theta: f64) -> f64 {
    theta * total_energy_g(config, state)
}

/// Running entropy integral along a sampled trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyAccumulation {
    pub flow_index: usize,
    pub times: Vec<f64>,
    /// `∫_0^{t_s} σ_j ds`, trapezoidal at the record's own stride.
    pub integral: Vec<f64>,
    /// Running average `integral / t` (first entry: the pointwise value).
    pub average: Vec<f64>,
}

/// Trapezoidal accumulation of `∫ σ_j ds` over a record that sampled
/// `sigma_j` (preferred) or `Phi_j`.
pub fn accumulate_entropy(
    config: &SystemConfig,
    record: &crate::dynamics::TrajectoryRecord,
    j: usize,
) -> Result<EntropyAccumulation, ObservableError> {
    let sigma_name = format!("sigma_{j}");
    let phi_name = format!("Phi_{j}");
    let (series, scale) = if let Some(s) = record.series_for(&sigma_name) {
        (s, 1.0)
    } else if let Some(s) = record.series_for(&phi_name) {
        let (t_left, t_right) = boundary_temperatures(config)?;
        (s, 1.0 / t_right - 1.0 / t_left)
    } else {
        return Err(ObservableError::MissingObservable(sigma_name));
    };
    let times = record.sample_times.clone();
    let mut integral = Vec::with_capacity(times.len());
    let mut average = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for i in 0..times.len() {
        if i > 0 {
            let dt = times[i] - times[i - 1];
            acc += 0.5 * dt * (series[i] + series[i - 1]) * scale;
        }
        integral.push(acc);
        average.push(if times[i] > 0.0 { acc / times[i] } else { series[i] * scale });
    }
    Ok(EntropyAccumulation { flow_index: j, times, integral, average })
}

/// Convenience: `G` as an observable function.
pub fn total_energy(config: &SystemConfig, state: &SystemState) -> f64 {
    total_energy_g(config, state)
}

/// Hamiltonian part `H = Σ p²/2 + V(q)` (no auxiliary energy).
pub fn hamiltonian(config: &SystemConfig, state: &SystemState) -> f64 {
    let kinetic: f64 = state.p.iter().map(|p| 0.5 * p * p).sum();
    kinetic + potential_energy(config, &state.q)
}
