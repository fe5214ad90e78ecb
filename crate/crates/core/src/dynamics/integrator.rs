//! Time discretization of the lattice SDEs.
//!
//! Two schemes:
//!
//! * `Splitting` (default) — a Strang composition O(½) B(½) A B(½) O(½).
//!   The dissipative-stochastic part O is linear and exactly solvable per
//!   coordinate: for an auxiliary-variable bath it is the OU update of `r`
//!   with the attached momentum frozen, for a Langevin bath the OU update
//!   of the boundary momentum. B is the momentum kick (including the `−λr`
//!   coupling), A the position drift; B-A-B alone is plain leapfrog.
//! * `EulerMaruyama` — full-drift Euler plus Gaussian increments, kept as a
//!   cross-check integrator.

use serde::{Deserialize, Serialize};

use crate::model::{
    potential_gradient_into, total_energy_g, ReservoirKind, SystemConfig, SystemState,
};

use super::rng::NormalSource;
use super::DynamicsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerMaruyama,
    Splitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSpec {
    pub scheme: Scheme,
    pub dt: f64,
    /// Abort threshold on the total energy `G`; `None` selects the default
    /// of `10⁶ · max(G(x₀), 1)` at simulation start.
    pub cap_g: Option<f64>,
}

impl IntegratorSpec {
    pub fn splitting(dt: f64) -> Self {
        Self { scheme: Scheme::Splitting, dt, cap_g: None }
    }

    pub fn euler_maruyama(dt: f64) -> Self {
        Self { scheme: Scheme::EulerMaruyama, dt, cap_g: None }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(DynamicsError::InvalidSpec(format!("dt must be positive, got {}", self.dt)));
        }
        if let Some(cap) = self.cap_g {
            if !(cap > 0.0) {
                return Err(DynamicsError::InvalidSpec("cap_g must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Step-size heuristic: `0.1 / ω_max` with
/// `ω_max² = λ_max(Hessian V(0)) + γ_max²`.
pub fn suggested_dt(config: &SystemConfig) -> f64 {
    let n = config.vertex_count();
    let c_on = config.onsite.nth_derivative(2).eval(0.0);
    let c_pair = config.pair.nth_derivative(2).eval(0.0);
    let mut hess = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        hess[(i, i)] = c_on;
    }
    for &(a, b) in &config.topology.edges {
        hess[(a, a)] += c_pair;
        hess[(b, b)] += c_pair;
        hess[(a, b)] -= c_pair;
        hess[(b, a)] -= c_pair;
    }
    let lam_max = hess
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    let gamma_max = config.reservoirs.iter().map(|r| r.rate).fold(0.0, f64::max);
    let omega_max = (lam_max + gamma_max * gamma_max).sqrt().max(1e-8);
    (0.1 / omega_max).min(0.1)
}

/// Drift field `(q̇, ṗ, ṙ)` at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Drift {
    pub q_dot: Vec<f64>,
    pub p_dot: Vec<f64>,
    pub r_dot: Vec<f64>,
}

impl Drift {
    /// Flat vector in the (q, p, r) ordering used by the linear oracle.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.q_dot.len() + self.p_dot.len() + self.r_dot.len());
        v.extend_from_slice(&self.q_dot);
        v.extend_from_slice(&self.p_dot);
        v.extend_from_slice(&self.r_dot);
        v
    }
}

/// Full drift: `q̇ = p`, `ṗ = −∇V − bath forces`, `ṙ_b = −γ r_b + λ p`.
pub fn drift(config: &SystemConfig, state: &SystemState) -> Drift {
    let n = config.vertex_count();
    let mut p_dot = vec![0.0; n];
    potential_gradient_into(config, &state.q, &mut p_dot);
    for f in p_dot.iter_mut() {
        *f = -*f;
    }
    let mut r_dot = vec![0.0; config.aux_count()];
    match config.reservoir_kind() {
        ReservoirKind::MarkovianAux => {
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                p_dot[att.vertex] -= res.coupling * state.r[b];
                r_dot[b] = -res.rate * state.r[b] + res.coupling * state.p[att.vertex];
            }
        }
        ReservoirKind::Langevin => {
            for (b, att) in config.topology.boundary.iter().enumerate() {
                let res = config.attachment_reservoir(b);
                p_dot[att.vertex] -= res.coupling * state.p[att.vertex];
            }
        }
    }
    Drift { q_dot: state.p.clone(), p_dot, r_dot }
}

/// A coordinate that receives white noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseCoordinate {
    /// Boundary momentum `p_i` (Langevin kind).
    Momentum(usize),
    /// Auxiliary variable `r_b` (reduced-reservoir kind).
    Auxiliary(usize),
}

/// Nonzero noise amplitudes: `√(2Tγ)` on each auxiliary coordinate, or
/// `√(2λT)` on each thermostatted boundary momentum. All other coordinates
/// are noiseless; the noise enters the bulk only through the coupling.
pub fn diffusion_amplitudes(config: &SystemConfig) -> Vec<(NoiseCoordinate, f64)> {
    let mut out = Vec::new();
    for (b, att) in config.topology.boundary.iter().enumerate() {
        let res = config.attachment_reservoir(b);
        match res.kind {
            ReservoirKind::MarkovianAux => {
                let amp = (2.0 * res.temperature * res.rate).sqrt();
                if amp > 0.0 {
                    out.push((NoiseCoordinate::Auxiliary(b), amp));
                }
            }
            ReservoirKind::Langevin => {
                let amp = (2.0 * res.coupling * res.temperature).sqrt();
                if amp > 0.0 {
                    out.push((NoiseCoordinate::Momentum(att.vertex), amp));
                }
            }
        }
    }
    out
}

/// Exactly solvable OU channel of the splitting scheme, over `dt/2`.
#[derive(Debug, Clone, Copy)]
struct OuChannel {
    /// Attachment index (markovian) or boundary vertex (langevin).
    target: usize,
    /// Attached vertex for the frozen-momentum push (markovian only).
    site: usize,
    decay: f64,
    push: f64,
    noise_std: f64,
}

/// Reusable stepper holding the per-config precomputation and scratch
/// buffers. `step` advances one `dt` and checks finiteness and the energy
/// cap; the cap value is fixed by the caller (see `simulate`).
pub struct Stepper<'a> {
    pub config: &'a SystemConfig,
    pub spec: IntegratorSpec,
    grad: Vec<f64>,
    ou: Vec<OuChannel>,
    /// (coordinate, amplitude·√dt) pairs for Euler–Maruyama.
    em_noise: Vec<(NoiseCoordinate, f64)>,
    kind: ReservoirKind,
}

impl<'a> Stepper<'a> {
    pub fn new(config: &'a SystemConfig, spec: IntegratorSpec) -> Result<Self, DynamicsError> {
        spec.validate()?;
        let h = 0.5 * spec.dt;
        let mut ou = Vec::new();
        for (b, att) in config.topology.boundary.iter().enumerate() {
            let res = config.attachment_reservoir(b);
            match res.kind {
                ReservoirKind::MarkovianAux => {
                    let decay = (-res.rate * h).exp();
                    ou.push(OuChannel {
                        target: b,
                        site: att.vertex,
                        decay,
                        push: res.coupling / res.rate * (1.0 - decay),
                        noise_std: (res.temperature * (1.0 - decay * decay)).sqrt(),
                    });
                }
                ReservoirKind::Langevin => {
                    let decay = (-res.coupling * h).exp();
                    ou.push(OuChannel {
                        target: att.vertex,
                        site: att.vertex,
                        decay,
                        push: 0.0,
                        noise_std: (res.temperature * (1.0 - decay * decay)).sqrt(),
                    });
                }
            }
        }
        let em_noise = diffusion_amplitudes(config)
            .into_iter()
            .map(|(c, a)| (c, a * spec.dt.sqrt()))
            .collect();
        Ok(Self {
            config,
            spec,
            grad: vec![0.0; config.vertex_count()],
            ou,
            em_noise,
            kind: config.reservoir_kind(),
        })
    }

    #[inline]
    fn ou_half(&self, state: &mut SystemState, rng: &mut NormalSource) {
        match self.kind {
            ReservoirKind::MarkovianAux => {
                for ch in &self.ou {
                    let r = &mut state.r[ch.target];
                    *r = ch.decay * *r + ch.push * state.p[ch.site] + ch.noise_std * rng.next_normal();
                }
            }
            ReservoirKind::Langevin => {
                for ch in &self.ou {
                    let p = &mut state.p[ch.target];
                    *p = ch.decay * *p + ch.noise_std * rng.next_normal();
                }
            }
        }
    }

    #[inline]
    fn kick_half(&mut self, state: &mut SystemState) {
        potential_gradient_into(self.config, &state.q, &mut self.grad);
        let h = 0.5 * self.spec.dt;
        for (p, g) in state.p.iter_mut().zip(&self.grad) {
            *p -= h * g;
        }
        if self.kind == ReservoirKind::MarkovianAux {
            for (b, att) in self.config.topology.boundary.iter().enumerate() {
                let res = self.config.attachment_reservoir(b);
                state.p[att.vertex] -= h * res.coupling * state.r[b];
            }
        }
    }

    /// One step of the chosen scheme; advances `state.t` by `dt`.
    pub fn step(
        &mut self,
        state: &mut SystemState,
        rng: &mut NormalSource,
        cap_g: f64,
    ) -> Result<(), DynamicsError> {
        match self.spec.scheme {
            Scheme::Splitting => {
                self.ou_half(state, rng);
                self.kick_half(state);
                let dt = self.spec.dt;
                for (q, p) in state.q.iter_mut().zip(&state.p) {
                    *q += dt * p;
                }
                self.kick_half(state);
                self.ou_half(state, rng);
            }
            Scheme::EulerMaruyama => {
                let d = drift(self.config, state);
                let dt = self.spec.dt;
                for (q, dq) in state.q.iter_mut().zip(&d.q_dot) {
                    *q += dt * dq;
                }
                for (p, dp) in state.p.iter_mut().zip(&d.p_dot) {
                    *p += dt * dp;
                }
                for (r, dr) in state.r.iter_mut().zip(&d.r_dot) {
                    *r += dt * dr;
                }
                for &(coord, amp_sqrt_dt) in &self.em_noise {
                    let z = rng.next_normal();
                    match coord {
                        NoiseCoordinate::Momentum(i) => state.p[i] += amp_sqrt_dt * z,
                        NoiseCoordinate::Auxiliary(b) => state.r[b] += amp_sqrt_dt * z,
                    }
                }
            }
        }
        state.t += self.spec.dt;

        if !state.is_finite() {
            return Err(DynamicsError::NonFinite { t: state.t });
        }
        let g = total_energy_g(self.config, state);
        if g > cap_g {
            return Err(DynamicsError::EnergyCap { t: state.t, g, cap: cap_g });
        }
        Ok(())
    }
}

/// Single-step convenience wrapper around a fresh `Stepper`.
pub fn step(
    config: &SystemConfig,
    state: &mut SystemState,
    spec: IntegratorSpec,
    rng: &mut NormalSource,
) -> Result<(), DynamicsError> {
    state.validate(config)?;
    let cap = spec
        .cap_g
        .unwrap_or_else(|| 1e6 * total_energy_g(config, state).max(1.0));
    Stepper::new(config, spec)?.step(state, rng, cap)
}
