//! Sampled trajectory output and its CSV / JSON serialization.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::model::{SystemConfig, SystemState};

use super::IntegratorSpec;

/// Time series of observable samples (and optionally full states) from one
/// seeded run. Reproducible from `(config, initial state, spec, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub sample_times: Vec<f64>,
    pub observable_names: Vec<String>,
    /// `series[k][s]`: observable `k` at sample `s`; all series share
    /// `sample_times.len()`.
    pub series: Vec<Vec<f64>>,
    pub states: Option<Vec<SystemState>>,
    pub seed: u64,
    pub config_digest: String,
    pub integrator: IntegratorSpec,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.sample_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample_times.is_empty()
    }

    pub fn series_for(&self, name: &str) -> Option<&[f64]> {
        self.observable_names
            .iter()
            .position(|n| n == name)
            .map(|k| self.series[k].as_slice())
    }

    /// CSV with a `time` column followed by one column per observable.
    /// Reals are written in shortest round-trip decimal form, so a rerun
    /// with the same seed is byte-identical.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("time");
        for name in &self.observable_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for s in 0..self.len() {
            let _ = write!(out, "{}", self.sample_times[s]);
            for k in 0..self.series.len() {
                let _ = write!(out, ",{}", self.series[k][s]);
            }
            out.push('\n');
        }
        out
    }

    /// JSON header embedding the resolved config, digest, seed, and
    /// integrator spec — everything needed to reproduce the CSV.
    pub fn header_json(&self, config: &SystemConfig) -> serde_json::Value {
        serde_json::json!({
            "config": config,
            "config_digest": self.config_digest,
            "seed": self.seed,
            "integrator": self.integrator,
            "observables": self.observable_names,
            "samples": self.len(),
            "t_end": self.sample_times.last().copied().unwrap_or(0.0),
        })
    }
}
