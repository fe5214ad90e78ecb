//! Named observables: the stable string identifiers that appear as CSV
//! column headers and in run configs, and their evaluation.

use crate::model::{SystemConfig, SystemState};

use super::{
    boundary_entropy_production, entropy_production, flow_count, heat_flows, hyperplane_energies,
    lyapunov_weight, local_energies, total_bath_entropy_production, total_energy,
    two_temperature_weight, ObservableError,
};

/// A compiled observable. Site-indexed variants store 0-based indices; the
/// public names are 1-based for sites and attachments (`p_1`, `H_1`, `r_1`)
/// and verbatim for flow/split indices (`Phi_0`, `sigma_1`, `R_0`).
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    /// `G` — total energy including auxiliary variables.
    TotalEnergy,
    /// `H_i` — local energy of site i (hyperplane energy on hypercubes).
    LocalEnergy(usize),
    /// `Phi_j` — j-th entry of the flow set.
    Flow(usize),
    /// `sigma_j` — entropy production carried by flow j.
    EntropyProduction(usize),
    /// `sigma` — total bath entropy production (Langevin configs).
    TotalEntropyProduction,
    /// `sigma_b` — boundary variant using the bath exchange flows.
    BoundaryEntropy,
    /// `sigma_b_alt` — boundary variant with the first bond flow on the left.
    BoundaryEntropyAlt,
    /// `R_j` — two-temperature Gibbs exponent for the split after site j.
    TwoTemperatureWeight(usize),
    /// `W_theta(x)` — exponential Lyapunov weight at θ = x.
    LyapunovWeight(f64),
    /// `p_i`, `q_i`, `r_b`.
    Momentum(usize),
    Position(usize),
    Auxiliary(usize),
}

impl Observable {
    pub fn parse(name: &str, config: &SystemConfig) -> Result<Self, ObservableError> {
        let unknown = || ObservableError::UnknownObservable(name.to_string());
        let parsed = match name {
            "G" => Observable::TotalEnergy,
            "sigma" => Observable::TotalEntropyProduction,
            "sigma_b" => Observable::BoundaryEntropy,
            "sigma_b_alt" => Observable::BoundaryEntropyAlt,
            _ => {
                if let Some(rest) = name.strip_prefix("W_theta(").and_then(|r| r.strip_suffix(')')) {
                    let theta: f64 = rest.parse().map_err(|_| unknown())?;
                    Observable::LyapunovWeight(theta)
                } else if let Some(rest) = name.strip_prefix("H_") {
                    let i: usize = rest.parse().map_err(|_| unknown())?;
                    if i == 0 {
                        return Err(unknown());
                    }
                    Observable::LocalEnergy(i - 1)
                } else if let Some(rest) = name.strip_prefix("Phi_") {
                    Observable::Flow(rest.parse().map_err(|_| unknown())?)
                } else if let Some(rest) = name.strip_prefix("sigma_") {
                    Observable::EntropyProduction(rest.parse().map_err(|_| unknown())?)
                } else if let Some(rest) = name.strip_prefix("R_") {
                    Observable::TwoTemperatureWeight(rest.parse().map_err(|_| unknown())?)
                } else if let Some(rest) = name.strip_prefix("p_") {
                    let i: usize = rest.parse().map_err(|_| unknown())?;
                    if i == 0 {
                        return Err(unknown());
                    }
                    Observable::Momentum(i - 1)
                } else if let Some(rest) = name.strip_prefix("q_") {
                    let i: usize = rest.parse().map_err(|_| unknown())?;
                    if i == 0 {
                        return Err(unknown());
                    }
                    Observable::Position(i - 1)
                } else if let Some(rest) = name.strip_prefix("r_") {
                    let i: usize = rest.parse().map_err(|_| unknown())?;
                    if i == 0 {
                        return Err(unknown());
                    }
                    Observable::Auxiliary(i - 1)
                } else {
                    return Err(unknown());
                }
            }
        };
        parsed.check_range(config)?;
        Ok(parsed)
    }

    fn check_range(&self, config: &SystemConfig) -> Result<(), ObservableError> {
        let n = config.vertex_count();
        let range = |index: usize, count: usize| {
            if index < count {
                Ok(())
            } else {
                Err(ObservableError::IndexRange { index, count })
            }
        };
        match *self {
            Observable::LocalEnergy(i) | Observable::Momentum(i) | Observable::Position(i) => {
                range(i, n)
            }
            Observable::Flow(j) | Observable::EntropyProduction(j) => range(j, flow_count(config)),
            Observable::TwoTemperatureWeight(j) => range(j, n + 1),
            Observable::Auxiliary(b) => range(b, config.aux_count()),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Observable::TotalEnergy => "G".into(),
            Observable::LocalEnergy(i) => format!("H_{}", i + 1),
            Observable::Flow(j) => format!("Phi_{j}"),
            Observable::EntropyProduction(j) => format!("sigma_{j}"),
            Observable::TotalEntropyProduction => "sigma".into(),
            Observable::BoundaryEntropy => "sigma_b".into(),
            Observable::BoundaryEntropyAlt => "sigma_b_alt".into(),
            Observable::TwoTemperatureWeight(j) => format!("R_{j}"),
            Observable::LyapunovWeight(theta) => format!("W_theta({theta})"),
            Observable::Momentum(i) => format!("p_{}", i + 1),
            Observable::Position(i) => format!("q_{}", i + 1),
            Observable::Auxiliary(b) => format!("r_{}", b + 1),
        }
    }

    pub fn eval(
        &self,
        config: &SystemConfig,
        state: &SystemState,
    ) -> Result<f64, ObservableError> {
        Ok(match *self {
            Observable::TotalEnergy => total_energy(config, state),
            Observable::LocalEnergy(i) => {
                if matches!(config.topology.kind, crate::model::TopologyKind::Hypercube { .. }) {
                    hyperplane_energies(config, state)?[i]
                } else {
                    local_energies(config, state)?[i]
                }
            }
            Observable::Flow(j) => {
                let flows = heat_flows(config, state);
                *flows
                    .values
                    .get(j)
                    .ok_or(ObservableError::FlowIndex { index: j, count: flows.values.len() })?
            }
            Observable::EntropyProduction(j) => entropy_production(config, state, j)?,
            Observable::TotalEntropyProduction => total_bath_entropy_production(config, state)?,
            Observable::BoundaryEntropy => boundary_entropy_production(config, state, false)?,
            Observable::BoundaryEntropyAlt => boundary_entropy_production(config, state, true)?,
            Observable::TwoTemperatureWeight(j) => two_temperature_weight(config, state, j)?,
            Observable::LyapunovWeight(theta) => lyapunov_weight(config, state, theta),
            Observable::Momentum(i) => state.p[i],
            Observable::Position(i) => state.q[i],
            Observable::Auxiliary(b) => state.r[b],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_chain, PolynomialPotential};

    #[test]
    fn parse_and_roundtrip_names() {
        let c = build_chain(
            3,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            2.0,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        for name in ["G", "H_2", "Phi_0", "Phi_3", "sigma_1", "R_0", "R_3", "W_theta(0.25)", "p_1", "q_3", "r_2", "sigma_b", "sigma_b_alt"] {
            let obs = Observable::parse(name, &c).unwrap();
            assert_eq!(obs.name(), name, "round trip failed for {name}");
        }
        assert!(Observable::parse("bogus", &c).is_err());
        assert!(Observable::parse("H_0", &c).is_err());
        assert!(Observable::parse("H_4", &c).is_err());
        assert!(Observable::parse("Phi_4", &c).is_err());
        assert!(Observable::parse("r_3", &c).is_err());
    }

    #[test]
    fn eval_matches_direct_functions() {
        let c = build_chain(
            2,
            PolynomialPotential::harmonic(),
            PolynomialPotential::harmonic(),
            2.0,
            1.0,
            1.0,
            1.0,
        )
        .unwrap();
        let s = crate::model::SystemState {
            p: vec![0.5, -0.3],
            q: vec![0.2, 0.9],
            r: vec![0.1, -0.4],
            t: 0.0,
        };
        let g = Observable::parse("G", &c).unwrap().eval(&c, &s).unwrap();
        assert_eq!(g, crate::model::total_energy_g(&c, &s));
        let phi1 = Observable::parse("Phi_1", &c).unwrap().eval(&c, &s).unwrap();
        assert_eq!(phi1, heat_flows(&c, &s).values[1]);
        let p2 = Observable::parse("p_2", &c).unwrap().eval(&c, &s).unwrap();
        assert_eq!(p2, -0.3);
    }
}
