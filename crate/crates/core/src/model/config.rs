//! System assembly: topology + potentials + reservoirs, and the phase point.
//!
//! A `SystemConfig` fully determines the SDE. Two reservoir kinds exist:
//!
//! * `MarkovianAux` — each attachment adds one auxiliary coordinate `r` with
//!   `dr = (−γ r + λ p) dt + √(2Tγ) dω`, and the force `−λ r` acts on the
//!   attached momentum. This is the reduced form of a Hamiltonian field
//!   reservoir with exponential memory kernel.
//! * `Langevin` — friction `−λ p` and noise `√(2λT) dω` act directly on the
//!   attached momentum; no auxiliary coordinate.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt;

use super::potential::PolynomialPotential;
use super::topology::{BathAttachment, LatticeTopology};
use super::ModelError;

pub const DEFAULT_VERTEX_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReservoirKind {
    MarkovianAux,
    Langevin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    /// Temperature in energy units; 0 is allowed (deterministic relaxation).
    pub temperature: f64,
    /// Coupling λ.
    pub coupling: f64,
    /// Rate γ of the auxiliary variable. For `Langevin` baths the drift is
    /// `−λ p`, so the rate is identified with the coupling.
    pub rate: f64,
    pub kind: ReservoirKind,
}

impl ReservoirSpec {
    pub fn markovian(temperature: f64, coupling: f64, rate: f64) -> Self {
        Self { temperature, coupling, rate, kind: ReservoirKind::MarkovianAux }
    }

    pub fn langevin(temperature: f64, coupling: f64) -> Self {
        Self { temperature, coupling, rate: coupling, kind: ReservoirKind::Langevin }
    }

    fn validate(&self) -> Result<(), ModelError> {
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(ModelError::InvalidReservoir(format!(
                "temperature must be finite and >= 0, got {}",
                self.temperature
            )));
        }
        if !(self.rate > 0.0) || !self.rate.is_finite() {
            return Err(ModelError::InvalidReservoir(format!(
                "rate must be finite and > 0, got {}",
                self.rate
            )));
        }
        if !self.coupling.is_finite() {
            return Err(ModelError::InvalidReservoir("coupling must be finite".into()));
        }
        Ok(())
    }
}

/// Non-fatal structural findings attached to a config at build time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConfigWarning {
    /// Pair degree below onsite degree: the breather regime, where the
    /// interaction is softer than the pinning.
    DegreeOrdering { onsite_degree: usize, pair_degree: usize },
    /// The interaction graph is disconnected; components evolve independently.
    Disconnected,
}

impl fmt::Display for ConfigWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigWarning::DegreeOrdering { onsite_degree, pair_degree } => write!(
                f,
                "pair potential degree {pair_degree} is below onsite degree {onsite_degree}; \
                 energy transport may be obstructed (breather regime)"
            ),
            ConfigWarning::Disconnected => {
                write!(f, "interaction graph is disconnected; components evolve independently")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub topology: LatticeTopology,
    pub onsite: PolynomialPotential,
    pub pair: PolynomialPotential,
    /// Reservoirs referenced by `topology.boundary[*].reservoir`.
    pub reservoirs: Vec<ReservoirSpec>,
    pub warnings: Vec<ConfigWarning>,
}

impl SystemConfig {
    pub fn new(
        topology: LatticeTopology,
        onsite: PolynomialPotential,
        pair: PolynomialPotential,
        reservoirs: Vec<ReservoirSpec>,
    ) -> Result<Self, ModelError> {
        onsite.require_confining("onsite")?;
        if !topology.edges.is_empty() {
            pair.require_confining("pair")?;
        }
        if reservoirs.is_empty() {
            return Err(ModelError::InvalidReservoir("no reservoirs".into()));
        }
        for r in &reservoirs {
            r.validate()?;
        }
        let kind = reservoirs[0].kind;
        if reservoirs.iter().any(|r| r.kind != kind) {
            return Err(ModelError::InvalidReservoir(
                "all reservoirs in one config must share the same kind".into(),
            ));
        }
        for att in &topology.boundary {
            if att.reservoir >= reservoirs.len() {
                return Err(ModelError::InvalidReservoir(format!(
                    "attachment references reservoir {} but only {} are defined",
                    att.reservoir,
                    reservoirs.len()
                )));
            }
        }
        let mut warnings = Vec::new();
        if pair.degree() < onsite.degree() {
            warnings.push(ConfigWarning::DegreeOrdering {
                onsite_degree: onsite.degree(),
                pair_degree: pair.degree(),
            });
        }
        if !topology.connected {
            warnings.push(ConfigWarning::Disconnected);
        }
        Ok(Self { topology, onsite, pair, reservoirs, warnings })
    }

    pub fn reservoir_kind(&self) -> ReservoirKind {
        self.reservoirs[0].kind
    }

    pub fn vertex_count(&self) -> usize {
        self.topology.vertex_count
    }

    /// Number of auxiliary `r` coordinates (one per attachment for
    /// `MarkovianAux`, none for `Langevin`).
    pub fn aux_count(&self) -> usize {
        match self.reservoir_kind() {
            ReservoirKind::MarkovianAux => self.topology.boundary.len(),
            ReservoirKind::Langevin => 0,
        }
    }

    /// Full phase-space dimension with the documented ordering (q, p, r).
    pub fn state_dim(&self) -> usize {
        2 * self.vertex_count() + self.aux_count()
    }

    pub fn max_temperature(&self) -> f64 {
        self.reservoirs.iter().map(|r| r.temperature).fold(0.0, f64::max)
    }

    pub fn min_temperature(&self) -> f64 {
        self.reservoirs
            .iter()
            .map(|r| r.temperature)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn is_equilibrium(&self) -> bool {
        let t0 = self.reservoirs[0].temperature;
        self.reservoirs.iter().all(|r| r.temperature == t0)
    }

    /// The reservoir spec felt through attachment `b`.
    pub fn attachment_reservoir(&self, b: usize) -> &ReservoirSpec {
        &self.reservoirs[self.topology.boundary[b].reservoir]
    }

    /// SHA-256 digest of the canonical JSON form; embedded in every emitted
    /// artifact so outputs can be traced back to their exact inputs.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialization cannot fail");
        let mut hasher = Sha256::new();
        hasher.update(&bytes);
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Chain of `n` oscillators with auxiliary-variable reservoirs at both ends.
pub fn build_chain(
    n: usize,
    onsite: PolynomialPotential,
    pair: PolynomialPotential,
    t_left: f64,
    t_right: f64,
    lambda: f64,
    gamma: f64,
) -> Result<SystemConfig, ModelError> {
    let topology = LatticeTopology::chain(n)?;
    let reservoirs = vec![
        ReservoirSpec::markovian(t_left, lambda, gamma),
        ReservoirSpec::markovian(t_right, lambda, gamma),
    ];
    SystemConfig::new(topology, onsite, pair, reservoirs)
}

/// Hypercube `{|i|_∞ ≤ n_side}` in `dim` dimensions with Langevin baths on
/// the two opposite faces `i_1 = ∓n_side`.
pub fn build_hypercube(
    n_side: usize,
    dim: usize,
    onsite: PolynomialPotential,
    pair: PolynomialPotential,
    t_left: f64,
    t_right: f64,
    lambda: f64,
) -> Result<SystemConfig, ModelError> {
    let topology = LatticeTopology::hypercube(n_side, dim, DEFAULT_VERTEX_CAP)?;
    let reservoirs = vec![
        ReservoirSpec::langevin(t_left, lambda),
        ReservoirSpec::langevin(t_right, lambda),
    ];
    SystemConfig::new(topology, onsite, pair, reservoirs)
}

/// General graph with Langevin baths on the listed vertices.
pub fn build_graph(
    vertex_count: usize,
    edges: &[(usize, usize)],
    baths: &BTreeMap<usize, ReservoirSpec>,
    onsite: PolynomialPotential,
    pair: PolynomialPotential,
) -> Result<SystemConfig, ModelError> {
    let mut boundary = Vec::new();
    let mut reservoirs = Vec::new();
    for (idx, (&vertex, spec)) in baths.iter().enumerate() {
        if spec.kind != ReservoirKind::Langevin {
            return Err(ModelError::InvalidReservoir(
                "graph reservoirs must be of langevin kind".into(),
            ));
        }
        boundary.push(BathAttachment { vertex, reservoir: idx });
        reservoirs.push(*spec);
    }
    let topology = LatticeTopology::general(vertex_count, edges, boundary)?;
    SystemConfig::new(topology, onsite, pair, reservoirs)
}

/// The four-oscillator diamond with baths on two opposite vertices: the
/// canonical example of a linear system whose stationary state is not
/// unique (the antisymmetric mode decouples from noise and dissipation).
pub fn diamond_fixture(temperature_a: f64, temperature_b: f64, lambda: f64) -> SystemConfig {
    let mut baths = BTreeMap::new();
    baths.insert(0, ReservoirSpec::langevin(temperature_a, lambda));
    baths.insert(2, ReservoirSpec::langevin(temperature_b, lambda));
    build_graph(
        4,
        &[(0, 1), (1, 2), (2, 3), (3, 0)],
        &baths,
        PolynomialPotential::harmonic(),
        PolynomialPotential::harmonic(),
    )
    .expect("diamond fixture is valid")
}

/// Phase point `(p, q, r)` at time `t`. The `r` entries follow the order of
/// `topology.boundary`; empty for Langevin reservoirs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
    pub t: f64,
}

impl SystemState {
    pub fn zero(config: &SystemConfig) -> Self {
        Self {
            p: vec![0.0; config.vertex_count()],
            q: vec![0.0; config.vertex_count()],
            r: vec![0.0; config.aux_count()],
            t: 0.0,
        }
    }

    pub fn validate(&self, config: &SystemConfig) -> Result<(), ModelError> {
        let n = config.vertex_count();
        let m = config.aux_count();
        if self.p.len() != n || self.q.len() != n || self.r.len() != m {
            return Err(ModelError::ShapeMismatch {
                expected: format!("p,q of length {n} and r of length {m}"),
                got: format!("p:{} q:{} r:{}", self.p.len(), self.q.len(), self.r.len()),
            });
        }
        if !self.is_finite() || !self.t.is_finite() {
            return Err(ModelError::NonFiniteState);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(&self.q).chain(&self.r).all(|x| x.is_finite())
    }

    /// Flat vector in the documented ordering (q, p, r).
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.q.len() + self.p.len() + self.r.len());
        v.extend_from_slice(&self.q);
        v.extend_from_slice(&self.p);
        v.extend_from_slice(&self.r);
        v
    }

    pub fn from_flat(config: &SystemConfig, flat: &[f64], t: f64) -> Result<Self, ModelError> {
        let n = config.vertex_count();
        let m = config.aux_count();
        if flat.len() != 2 * n + m {
            return Err(ModelError::ShapeMismatch {
                expected: format!("flat vector of length {}", 2 * n + m),
                got: format!("{}", flat.len()),
            });
        }
        Ok(Self {
            q: flat[..n].to_vec(),
            p: flat[n..2 * n].to_vec(),
            r: flat[2 * n..].to_vec(),
            t,
        })
    }
}

/// `V(q) = Σ_i U1(q_i) + Σ_{(a,b)∈E} U2(q_a − q_b)`, each undirected edge
/// counted once with its stored orientation.
pub fn potential_energy(config: &SystemConfig, q: &[f64]) -> f64 {
    debug_assert_eq!(q.len(), config.vertex_count());
    let mut v = 0.0;
    for &qi in q {
        v += config.onsite.eval(qi);
    }
    for &(a, b) in &config.topology.edges {
        v += config.pair.eval(q[a] - q[b]);
    }
    v
}

/// `∇V(q)`, assembled per vertex by exact polynomial differentiation.
pub fn potential_gradient(config: &SystemConfig, q: &[f64]) -> Vec<f64> {
    let mut grad = vec![0.0; q.len()];
    potential_gradient_into(config, q, &mut grad);
    grad
}

/// In-place gradient for integrator hot loops.
pub fn potential_gradient_into(config: &SystemConfig, q: &[f64], grad: &mut [f64]) {
    debug_assert_eq!(q.len(), config.vertex_count());
    debug_assert_eq!(grad.len(), q.len());
    for (g, &qi) in grad.iter_mut().zip(q) {
        *g = config.onsite.eval_deriv(qi);
    }
    for &(a, b) in &config.topology.edges {
        let u = config.pair.eval_deriv(q[a] - q[b]);
        grad[a] += u;
        grad[b] -= u;
    }
}

/// `G(p, q, r) = Σ r²/2 + Σ p²/2 + V(q)`; for Langevin reservoirs the `r`
/// sum is empty and `G` reduces to the Hamiltonian.
pub fn total_energy_g(config: &SystemConfig, state: &SystemState) -> f64 {
    let kinetic: f64 = state.p.iter().map(|p| 0.5 * p * p).sum();
    let aux: f64 = state.r.iter().map(|r| 0.5 * r * r).sum();
    kinetic + aux + potential_energy(config, &state.q)
}
