use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::error::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Scalar and vector results; absent entries do not apply to the experiment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Metrics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_weights: Option<Vec<f64>>,
    /// `(w − w_oracle) / |w_oracle|` per weight.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_errors: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_p_train: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_p_test: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_sigma_p_train: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_sigma_p_test: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lse_per_output: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_lse_per_output: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_predictions: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<Vec<u8>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub open_loop_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solves: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_real_eigenvalue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settle_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub settled: Option<bool>,
    /// Relative distance of the transient end state from the steady state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transient_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clamped: Option<bool>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Seed-averaged result for one setting of a swept quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub label: String,
    pub mean_sigma_p_train: f64,
    pub mean_sigma_p_test: Option<f64>,
    pub max_relative_error: Option<f64>,
    pub runs: usize,
}

/// One repeat of a stochastic experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub label: String,
    pub seed: u64,
    pub sigma_p_train: Option<f64>,
    pub sigma_p_test: Option<f64>,
    pub max_relative_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    /// Backend that produced `metrics`.
    pub backend: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub metrics: Metrics,
    pub repeats: Vec<RepeatRecord>,
    pub artifacts: Vec<PathBuf>,
    pub wall_clock_s: f64,
}

impl ExperimentReport {
    /// Metrics, repeats and identity without timing, for comparisons.
    pub fn metrics_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&(
            &self.experiment,
            &self.backend,
            self.seed,
            &self.metrics,
            &self.repeats,
        ))?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
