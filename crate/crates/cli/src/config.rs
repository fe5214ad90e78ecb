//! The single JSON experiment document: model + integrator + run +
//! analysis + output blocks. Unknown keys are rejected; the schema ships
//! in `docs/config-schema.json`. Vertex ids are 1-based in the document
//! and 0-based inside the library.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use nessim::dynamics::{GleConfig, IntegratorSpec, Scheme};
use nessim::model::{
    build_chain, build_graph, build_hypercube, PolynomialPotential, ReservoirSpec, SystemConfig,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelBlock,
    pub integrator: IntegratorBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub analysis: Option<AnalysisBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelBlock {
    Chain {
        n: usize,
        onsite: Vec<f64>,
        pair: Vec<f64>,
        t_left: f64,
        t_right: f64,
        lambda: f64,
        gamma: f64,
    },
    Hypercube {
        n_side: usize,
        dim: usize,
        onsite: Vec<f64>,
        pair: Vec<f64>,
        t_left: f64,
        t_right: f64,
        lambda: f64,
    },
    Graph {
        vertices: usize,
        /// 1-based vertex pairs.
        edges: Vec<(usize, usize)>,
        baths: Vec<GraphBath>,
        onsite: Vec<f64>,
        pair: Vec<f64>,
    },
    /// Single particle with a memory-kernel reservoir; only `gle-compare`
    /// accepts this kind.
    Gle {
        onsite: Vec<f64>,
        lambda: f64,
        gamma: f64,
        temperature: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphBath {
    /// 1-based vertex id.
    pub vertex: usize,
    pub temperature: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorBlock {
    #[serde(default = "default_scheme")]
    pub scheme: String,
    pub dt: f64,
    #[serde(default)]
    pub cap_g: Option<f64>,
}

fn default_scheme() -> String {
    "splitting".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub observers: Vec<String>,
    #[serde(default = "default_n_traj")]
    pub n_traj: usize,
    #[serde(default)]
    pub store_states: bool,
}

fn default_horizon() -> f64 {
    100.0
}
fn default_stride() -> usize {
    10
}
fn default_n_traj() -> usize {
    1
}

impl Default for RunBlock {
    fn default() -> Self {
        Self {
            horizon: default_horizon(),
            seed: 0,
            stride: default_stride(),
            observers: Vec::new(),
            n_traj: 1,
            store_states: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisBlock {
    Steady {
        #[serde(default = "default_burn_in")]
        burn_in_fraction: f64,
        #[serde(default = "default_batches")]
        batch_count: usize,
    },
    Ldp {
        flow_index: usize,
        alpha_grid: Vec<f64>,
        t_list: Vec<f64>,
        n_traj: usize,
        #[serde(default = "default_ldp_burn_in")]
        burn_in: f64,
        #[serde(default = "default_spacing")]
        spacing: f64,
        #[serde(default = "default_n_boot")]
        n_boot: usize,
        #[serde(default = "default_n_eff_floor")]
        n_eff_floor: f64,
        #[serde(default)]
        w_grid: Option<Vec<f64>>,
    },
    Greenkubo {
        flow_index: usize,
        mean_beta: f64,
        probes: Vec<f64>,
        response_horizon: f64,
        corr_horizon: f64,
        #[serde(default = "default_corr_runs")]
        corr_runs: usize,
        max_lag_time: f64,
        #[serde(default = "default_burn_in")]
        burn_in_fraction: f64,
        #[serde(default = "default_batches")]
        batch_count: usize,
        #[serde(default)]
        average_flows: bool,
        #[serde(default = "default_gk_tolerance")]
        tolerance: f64,
    },
    Lyapunov {
        theta: f64,
        #[serde(default = "default_probe_horizon")]
        horizon: f64,
        shells: Vec<f64>,
        #[serde(default = "default_states_per_shell")]
        states_per_shell: usize,
        #[serde(default = "default_noise_reps")]
        noise_reps: usize,
    },
    Scaling {
        energies: Vec<f64>,
        dt: f64,
        #[serde(default = "default_directions")]
        directions: usize,
    },
    Oracle {},
    GleCompare {
        #[serde(default = "default_gle_horizon")]
        horizon: f64,
        #[serde(default = "default_burn_in")]
        burn_in_fraction: f64,
        #[serde(default = "default_batches")]
        batch_count: usize,
    },
}

fn default_burn_in() -> f64 {
    0.1
}
fn default_batches() -> usize {
    32
}
fn default_ldp_burn_in() -> f64 {
    100.0
}
fn default_spacing() -> f64 {
    5.0
}
fn default_n_boot() -> usize {
    200
}
fn default_n_eff_floor() -> f64 {
    30.0
}
fn default_corr_runs() -> usize {
    4
}
fn default_gk_tolerance() -> f64 {
    0.15
}
fn default_probe_horizon() -> f64 {
    1.0
}
fn default_states_per_shell() -> usize {
    16
}
fn default_noise_reps() -> usize {
    8
}
fn default_directions() -> usize {
    16
}
fn default_gle_horizon() -> f64 {
    100_000.0
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub raw: bool,
}

impl ExperimentConfig {
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("config {} does not match the schema", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if !(self.integrator.dt > 0.0) {
            bail!("integrator.dt must be positive");
        }
        match self.integrator.scheme.as_str() {
            "splitting" | "euler_maruyama" => {}
            other => bail!("unknown integrator scheme `{other}`"),
        }
        if self.run.stride == 0 {
            bail!("run.stride must be >= 1");
        }
        if self.run.n_traj == 0 {
            bail!("run.n_traj must be >= 1");
        }
        Ok(())
    }

    pub fn integrator_spec(&self) -> IntegratorSpec {
        IntegratorSpec {
            scheme: match self.integrator.scheme.as_str() {
                "euler_maruyama" => Scheme::EulerMaruyama,
                _ => Scheme::Splitting,
            },
            dt: self.integrator.dt,
            cap_g: self.integrator.cap_g,
        }
    }

    /// Builds the lattice system; errors for the GLE model kind.
    pub fn system(&self) -> Result<SystemConfig> {
        match &self.model {
            ModelBlock::Chain { n, onsite, pair, t_left, t_right, lambda, gamma } => {
                build_chain(
                    *n,
                    PolynomialPotential::new(onsite.clone()),
                    PolynomialPotential::new(pair.clone()),
                    *t_left,
                    *t_right,
                    *lambda,
                    *gamma,
                )
                .map_err(|e| anyhow!("model: {e}"))
            }
            ModelBlock::Hypercube { n_side, dim, onsite, pair, t_left, t_right, lambda } => {
                build_hypercube(
                    *n_side,
                    *dim,
                    PolynomialPotential::new(onsite.clone()),
                    PolynomialPotential::new(pair.clone()),
                    *t_left,
                    *t_right,
                    *lambda,
                )
                .map_err(|e| anyhow!("model: {e}"))
            }
            ModelBlock::Graph { vertices, edges, baths, onsite, pair } => {
                let mut zero_based = Vec::with_capacity(edges.len());
                for &(a, b) in edges {
                    if a == 0 || b == 0 {
                        bail!("graph vertex ids are 1-based; found 0 in an edge");
                    }
                    zero_based.push((a - 1, b - 1));
                }
                let mut bath_map = BTreeMap::new();
                for bath in baths {
                    if bath.vertex == 0 {
                        bail!("graph vertex ids are 1-based; found bath on vertex 0");
                    }
                    bath_map.insert(
                        bath.vertex - 1,
                        ReservoirSpec::langevin(bath.temperature, bath.lambda),
                    );
                }
                build_graph(
                    *vertices,
                    &zero_based,
                    &bath_map,
                    PolynomialPotential::new(onsite.clone()),
                    PolynomialPotential::new(pair.clone()),
                )
                .map_err(|e| anyhow!("model: {e}"))
            }
            ModelBlock::Gle { .. } => {
                bail!("model kind `gle` is only valid for the gle-compare command")
            }
        }
    }

    pub fn gle(&self) -> Result<GleConfig> {
        match &self.model {
            ModelBlock::Gle { onsite, lambda, gamma, temperature } => GleConfig::new(
                PolynomialPotential::new(onsite.clone()),
                *lambda,
                *gamma,
                *temperature,
            )
            .map_err(|e| anyhow!("model: {e}")),
            _ => bail!("gle-compare requires a model block of kind `gle`"),
        }
    }
}
