//! Shared JSON report envelope: every analysis emission carries its
//! experiment name, provenance (config digest, seed), and a pass flag.
//! No timestamps — emitted files must be byte-reproducible from inputs.

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ReportEnvelope<T: Serialize> {
    pub experiment: String,
    pub config_digest: String,
    pub seed: Option<u64>,
    /// `None` for purely descriptive reports.
    pub pass: Option<bool>,
    pub report: T,
}

impl<T: Serialize> ReportEnvelope<T> {
    pub fn new(experiment: &str, config_digest: String, report: T) -> Self {
        Self {
            experiment: experiment.to_string(),
            config_digest,
            seed: None,
            pass: None,
            report,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}
