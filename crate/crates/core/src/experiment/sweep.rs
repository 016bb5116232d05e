use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::report::ExperimentReport;
use super::runs::{resolve_output_dir, run, write_csv};
use crate::error::{Error, Result};

/// Short names accepted in place of full key paths.
const ALIASES: [(&str, &str); 7] = [
    ("train_size", "data.train_size"),
    ("r_segment", "circuit.wire_r"),
    ("wire_r", "circuit.wire_r"),
    ("sigma_mode", "device.sigma_mode"),
    ("g_max", "device.levels.g_max"),
    ("g_unit", "scaling.g_unit"),
    ("g_ti", "circuit.g_ti"),
];

pub fn resolve_parameter(name: &str) -> Result<String> {
    let key = ALIASES
        .iter()
        .find(|(a, _)| *a == name)
        .map_or(name, |(_, k)| *k);
    if ExperimentConfig::known_keys().contains(key) {
        Ok(key.to_string())
    } else {
        Err(Error::UnknownParameter(name.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub lambda_min: Option<f64>,
    pub settle_time: Option<f64>,
    pub sigma_p: Option<f64>,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepOutcome {
    pub parameter: String,
    pub rows: Vec<SweepRow>,
    /// Rank correlation between settle time and λ_min over the points
    /// that report both.
    pub spearman_settle_vs_lambda: Option<f64>,
    pub notes: Vec<String>,
    pub summary_path: Option<PathBuf>,
    #[serde(skip)]
    pub reports: Vec<ExperimentReport>,
}

/// Runs `cfg` once per value of `parameter`.
pub fn sweep<S: AsRef<str> + Sync>(cfg: &ExperimentConfig, parameter: &str, values: &[S]) -> Result<SweepOutcome> {
    let key = resolve_parameter(parameter)?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("sweep needs at least one value".into()));
    }
    let base = resolve_output_dir(cfg);
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut c = cfg.with_overrides(&[format!("{key}={}", v.as_ref())])?;
            c.output_dir = base.as_ref().map(|d| d.join(format!("point-{i:03}")));
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = configs
        .par_iter()
        .map(run)
        .collect::<Result<Vec<ExperimentReport>>>()?;
    let rows: Vec<SweepRow> = values
        .iter()
        .zip(&reports)
        .map(|(v, r)| SweepRow {
            value: v.as_ref().to_string(),
            lambda_min: r.metrics.lambda_min,
            settle_time: r.metrics.settle_time,
            sigma_p: r.metrics.sigma_p_train,
            accuracy: r.metrics.accuracy.or(r.metrics.training_accuracy),
        })
        .collect();
    let pairs: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.settle_time?, r.lambda_min?)))
        .collect();
    let mut notes = Vec::new();
    let rho = if pairs.len() >= 3 {
        let (s, l): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let rho = spearman(&s, &l);
        notes.push(format!(
            "settle time {} 1/lambda_min (Spearman rho vs lambda_min = {rho:.3})",
            if rho <= -0.8 { "tracks" } else { "does not track" }
        ));
        Some(rho)
    } else {
        None
    };
    let mut out = SweepOutcome {
        parameter: key,
        rows,
        spearman_settle_vs_lambda: rho,
        notes,
        summary_path: None,
        reports,
    };
    if let Some(d) = base {
        std::fs::create_dir_all(&d)?;
        let path = d.join("summary.csv");
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        write_csv(
            &path,
            &["value", "lambda_min", "settle_time", "sigma_p", "accuracy"],
            out.rows
                .iter()
                .map(|r| vec![r.value.clone(), fmt(r.lambda_min), fmt(r.settle_time), fmt(r.sigma_p), fmt(r.accuracy)])
                .collect(),
        )?;
        out.summary_path = Some(path);
        std::fs::write(d.join("sweep.json"), serde_json::to_string_pretty(&out)?)?;
    }
    Ok(out)
}

/// Average ranks, ties sharing the mean rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation (Pearson correlation of the ranks).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
