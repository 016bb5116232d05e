use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::circuit::{AmplifierModel, TransientOptions};
use crate::data::BOSTON_TRAIN_ROWS;
use crate::device::{ConductanceLevelSet, DeviceModel, SigmaMode};
use crate::error::{Error, Result};
use crate::learn::{Backend, CircuitBackend, TwoLayerConfig};
use crate::mapping::ScalingConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    FitLinear,
    FitLogistic,
    Predict,
    Boston,
    MnistTrain,
    NoiseSweep,
    WireSweep,
    Transient,
    Stability,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 9] = [
        ExperimentKind::FitLinear,
        ExperimentKind::FitLogistic,
        ExperimentKind::Predict,
        ExperimentKind::Boston,
        ExperimentKind::MnistTrain,
        ExperimentKind::NoiseSweep,
        ExperimentKind::WireSweep,
        ExperimentKind::Transient,
        ExperimentKind::Stability,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::FitLinear => "fit-linear",
            ExperimentKind::FitLogistic => "fit-logistic",
            ExperimentKind::Predict => "predict",
            ExperimentKind::Boston => "boston",
            ExperimentKind::MnistTrain => "mnist-train",
            ExperimentKind::NoiseSweep => "noise-sweep",
            ExperimentKind::WireSweep => "wire-sweep",
            ExperimentKind::Transient => "transient",
            ExperimentKind::Stability => "stability",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::ConfigInvalid {
                path: "experiment".into(),
                detail: format!("unknown experiment `{s}`"),
            })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Oracle,
    Circuit,
}

/// Where the regression problem of the generic experiments comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemSource {
    #[default]
    Inline,
    Synthetic,
    Boston,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n: usize,
    /// Polynomial coefficients, constant term first.
    pub w_true: Vec<f64>,
    pub noise_sd: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 20,
            w_true: vec![0.2, 0.1],
            noise_sd: 0.02,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub source: ProblemSource,
    /// Raw sample coordinates, one row per sample (inline source).
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub degree: usize,
    pub bias: bool,
    /// Coordinates of new points to predict.
    pub predict_at: Vec<Vec<f64>>,
    pub synthetic: SyntheticConfig,
    /// Boston CSV; the bundled copy when absent.
    pub boston_path: Option<PathBuf>,
    /// Leading rows of the Boston table used for training.
    pub train_size: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: ProblemSource::Inline,
            x: (1..=6).map(|v| vec![v as f64]).collect(),
            y: vec![0.3, 0.3, 0.5, 0.4, 0.5, 0.7],
            degree: 1,
            bias: true,
            predict_at: vec![vec![4.91]],
            synthetic: SyntheticConfig::default(),
            boston_path: None,
            train_size: BOSTON_TRAIN_ROWS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitConfig {
    /// Feedback conductance of the row amplifiers; `scaling.g_unit` when absent.
    pub g_ti: Option<f64>,
    pub nfa: AmplifierModel,
    pub pfa: AmplifierModel,
    /// Series resistance per wire segment (Ω).
    pub wire_r: f64,
    /// Uniform left/right mismatch injected after programming.
    pub mismatch: Option<f64>,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        Self {
            g_ti: None,
            nfa: AmplifierModel::default(),
            pfa: AmplifierModel::default(),
            wire_r: 0.0,
            mismatch: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LogisticConfig {
    pub a: f64,
    pub x: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
    /// Replaces the inline points with a random separable set.
    pub synthetic_n: Option<usize>,
    pub margin: f64,
    pub classify: Vec<Vec<f64>>,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            x: vec![
                vec![1.0, 1.0],
                vec![1.5, 3.0],
                vec![2.0, 2.0],
                vec![3.5, 1.0],
                vec![4.0, 3.0],
                vec![4.5, 2.0],
            ],
            labels: vec![0, 0, 0, 1, 1, 1],
            synthetic_n: None,
            margin: 0.2,
            classify: vec![vec![3.2, 2.0], vec![1.0, 3.0]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MnistConfig {
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub train_limit: usize,
    pub test_limit: Option<usize>,
    pub network: TwoLayerConfig,
    /// Also evaluate inference through open-loop arrays.
    pub open_loop: bool,
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self {
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            train_limit: crate::data::MNIST_TRAIN_SUBSET,
            test_limit: None,
            network: TwoLayerConfig::default(),
            open_loop: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sigma_modes: Vec<SigmaMode>,
    /// Wire resistances per segment (Ω).
    pub wire_r: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigma_modes: SigmaMode::ALL.to_vec(),
            wire_r: vec![0.0, 0.1, 1.0, 10.0],
        }
    }
}

/// A complete, self-describing experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub backend: BackendKind,
    pub seed: u64,
    #[serde(default = "one")]
    pub repeats: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub device: DeviceModel,
    #[serde(default)]
    pub scaling: ScalingConfig,
    #[serde(default)]
    pub circuit: CircuitConfig,
    #[serde(default)]
    pub transient: TransientOptions,
    #[serde(default)]
    pub logistic: LogisticConfig,
    #[serde(default)]
    pub mnist: MnistConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

fn one() -> usize {
    1
}

fn invalid(path: &str, detail: impl Into<String>) -> Error {
    Error::ConfigInvalid {
        path: path.into(),
        detail: detail.into(),
    }
}

fn at(path: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| match e {
        e @ Error::ConfigInvalid { .. } => e,
        e => invalid(path, e.to_string()),
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            experiment,
            backend: BackendKind::Oracle,
            seed,
            repeats: 1,
            output_dir: None,
            data: DataConfig::default(),
            device: DeviceModel::default(),
            scaling: ScalingConfig::default(),
            circuit: CircuitConfig::default(),
            transient: TransientOptions::default(),
            logistic: LogisticConfig::default(),
            mnist: MnistConfig::default(),
            sweep: SweepConfig::default(),
        }
    }

    /// Ready-to-run settings for each experiment.
    pub fn preset(experiment: ExperimentKind) -> Self {
        let mut c = Self::new(experiment, 0);
        match experiment {
            ExperimentKind::FitLinear | ExperimentKind::Predict | ExperimentKind::FitLogistic => {
                c.backend = BackendKind::Circuit;
            }
            ExperimentKind::Boston => c.boston_scale(),
            ExperimentKind::MnistTrain => {
                c.backend = BackendKind::Circuit;
                c.boston_scale();
                c.device.levels = ConductanceLevelSet::eight_bit(1e-4);
            }
            ExperimentKind::NoiseSweep => {
                c.boston_scale();
                c.data.source = ProblemSource::Boston;
                c.repeats = 20;
            }
            ExperimentKind::WireSweep | ExperimentKind::Transient | ExperimentKind::Stability => {
                c.boston_scale();
                c.data.source = ProblemSource::Boston;
                c.device.levels = ConductanceLevelSet::eight_bit(1e-4);
            }
        }
        c
    }

    /// 100 µS devices, 10 µS unit conductance, columns filled to 80 %.
    fn boston_scale(&mut self) {
        self.device.levels.g_max = 1e-4;
        self.scaling = ScalingConfig::fill_columns(1e-5, 1e-5);
        self.circuit.nfa = AmplifierModel::unclamped();
        self.circuit.pfa = AmplifierModel::unclamped();
    }

    /// Parses TOML text, reporting the offending field path on error.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid("<toml>", e.message()))?;
        Self::from_table(table)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::FileNotFound(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: Self = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            invalid(&path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| invalid("<toml>", e.to_string()))
    }

    fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| invalid("<toml>", e.to_string()))
    }

    /// Dotted key paths accepted by [`ExperimentConfig::with_overrides`].
    pub fn known_keys() -> BTreeSet<String> {
        let mut full = Self::new(ExperimentKind::FitLinear, 0);
        full.output_dir = Some(PathBuf::new());
        full.data.boston_path = Some(PathBuf::new());
        full.circuit.g_ti = Some(1.0);
        full.circuit.mismatch = Some(0.0);
        full.transient.t_end = Some(1.0);
        full.transient.dt = Some(1.0);
        full.logistic.synthetic_n = Some(1);
        full.mnist.train_images = Some(PathBuf::new());
        full.mnist.train_labels = Some(PathBuf::new());
        full.mnist.test_images = Some(PathBuf::new());
        full.mnist.test_labels = Some(PathBuf::new());
        full.mnist.test_limit = Some(1);
        let mut keys = BTreeSet::new();
        let table = full.to_table().expect("template config serializes");
        collect_keys(&table, "", &mut keys);
        // Optional sections that serialize as absent by default.
        for k in ["scaling.column_fill", "scaling.headroom_v", "circuit.nfa.clamp", "circuit.pfa.clamp"] {
            keys.insert(k.to_string());
        }
        keys
    }

    /// Applies `key=value` overrides. Values are read as TOML literals and
    /// fall back to plain strings.
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let known = Self::known_keys();
        let mut table = self.to_table()?;
        for o in overrides {
            let o = o.as_ref();
            let (key, value) = o
                .split_once('=')
                .ok_or_else(|| invalid(o, "override must have the form key=value"))?;
            let key = key.trim();
            if !known.contains(key) {
                return Err(Error::UnknownParameter(key.to_string()));
            }
            set_path(&mut table, key, parse_value(value.trim()))?;
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats == 0 {
            return Err(invalid("repeats", "must be at least 1"));
        }
        self.device.validate().map_err(at("device"))?;
        if !(self.device.pv_tolerance > 0.0) {
            return Err(invalid("device.pv_tolerance", "must be positive"));
        }
        if !(self.scaling.g_unit > 0.0) {
            return Err(invalid("scaling.g_unit", "must be positive"));
        }
        if !(self.scaling.i_unit > 0.0) {
            return Err(invalid("scaling.i_unit", "must be positive"));
        }
        if let Some(f) = self.scaling.column_fill {
            if !(f > 0.0 && f <= 1.0) {
                return Err(invalid("scaling.column_fill", "must lie in (0, 1]"));
            }
        }
        if let Some(h) = self.scaling.headroom_v {
            if !(h > 0.0) {
                return Err(invalid("scaling.headroom_v", "must be positive"));
            }
        }
        self.circuit.nfa.validate().map_err(at("circuit.nfa"))?;
        self.circuit.pfa.validate().map_err(at("circuit.pfa"))?;
        if let Some(g) = self.circuit.g_ti {
            if !(g > 0.0) {
                return Err(invalid("circuit.g_ti", "must be positive"));
            }
        }
        if !(self.circuit.wire_r >= 0.0) {
            return Err(invalid("circuit.wire_r", "must be nonnegative"));
        }
        if let Some(m) = self.circuit.mismatch {
            if !(0.0..1.0).contains(&m) {
                return Err(invalid("circuit.mismatch", "must lie in [0, 1)"));
            }
        }
        if !(self.transient.settle_band > 0.0 && self.transient.settle_band < 1.0) {
            return Err(invalid("transient.settle_band", "must lie in (0, 1)"));
        }
        if self.data.degree == 0 {
            return Err(invalid("data.degree", "must be at least 1"));
        }
        if self.data.source == ProblemSource::Inline && self.data.x.len() != self.data.y.len() {
            return Err(invalid(
                "data.y",
                format!("{} targets for {} samples", self.data.y.len(), self.data.x.len()),
            ));
        }
        if self.data.train_size == 0 {
            return Err(invalid("data.train_size", "must be at least 1"));
        }
        if !(self.logistic.a > 0.0) {
            return Err(invalid("logistic.a", "must be positive"));
        }
        if self.logistic.synthetic_n.is_none() && self.logistic.x.len() != self.logistic.labels.len() {
            return Err(invalid("logistic.labels", "one label per point required"));
        }
        if self.mnist.train_limit == 0 {
            return Err(invalid("mnist.train_limit", "must be at least 1"));
        }
        let net = &self.mnist.network;
        if net.fan_out == 0 || !(net.a > 0.0) || !(net.w1_range > 0.0) {
            return Err(invalid("mnist.network", "fan_out, a and w1_range must be positive"));
        }
        if self.sweep.wire_r.iter().any(|r| !(*r >= 0.0)) {
            return Err(invalid("sweep.wire_r", "resistances must be nonnegative"));
        }
        Ok(())
    }

    /// Circuit settings with an explicit seed.
    pub fn circuit_backend(&self, seed: u64) -> CircuitBackend {
        CircuitBackend {
            device: self.device,
            scaling: self.scaling.clone(),
            g_ti: self.circuit.g_ti,
            nfa: self.circuit.nfa,
            pfa: self.circuit.pfa,
            wire_r: self.circuit.wire_r,
            mismatch: self.circuit.mismatch,
            seed,
        }
    }

    pub fn backend(&self, seed: u64) -> Backend {
        match self.backend {
            BackendKind::Oracle => Backend::Oracle,
            BackendKind::Circuit => Backend::Circuit(self.circuit_backend(seed)),
        }
    }
}

fn collect_keys(t: &toml::Table, prefix: &str, out: &mut BTreeSet<String>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        if let toml::Value::Table(sub) = v {
            collect_keys(sub, &key, out);
        } else {
            out.insert(key);
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields at least one part");
    let mut cur = table;
    for p in parts {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(invalid(key, format!("`{p}` is not a section"))),
        };
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip() {
        for k in ExperimentKind::ALL {
            let c = ExperimentConfig::preset(k);
            c.validate().unwrap();
            let text = c.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text).unwrap(), c, "{k}");
        }
    }

    #[test]
    fn minimal_file() {
        let c = ExperimentConfig::from_toml_str("experiment = \"boston\"\nseed = 7\n").unwrap();
        assert_eq!(c.experiment, ExperimentKind::Boston);
        assert_eq!(c.seed, 7);
        assert_eq!(c.repeats, 1);
    }

    #[test]
    fn seed_is_required() {
        let e = ExperimentConfig::from_toml_str("experiment = \"boston\"\n").unwrap_err();
        assert!(e.to_string().contains("seed"), "{e}");
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::from_toml_str("experiment = \"boston\"\nseed = 1\n[device.levels]\ng_max = \"big\"\n")
            .unwrap_err();
        match e {
            Error::ConfigInvalid { path, .. } => assert_eq!(path, "device.levels.g_max"),
            e => panic!("{e}"),
        }
        let e = ExperimentConfig::from_toml_str("experiment = \"boston\"\nseed = 1\n[circuit]\nwire_r = -1.0\n")
            .unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid { ref path, .. } if path == "circuit.wire_r"), "{e}");
        let e = ExperimentConfig::from_toml_str("experiment = \"boston\"\nseed = 1\n[circuit]\nwires = 1.0\n")
            .unwrap_err();
        assert!(matches!(e, Error::ConfigInvalid { ref path, .. } if path == "circuit.wires"), "{e}");
    }

    #[test]
    fn overrides() {
        let c = ExperimentConfig::preset(ExperimentKind::Boston);
        let c2 = c
            .with_overrides(&["circuit.wire_r=0.5", "device.sigma_mode=dg/4", "backend=circuit", "circuit.g_ti=2e-5"])
            .unwrap();
        assert_eq!(c2.circuit.wire_r, 0.5);
        assert_eq!(c2.device.sigma_mode, SigmaMode::QuarterDeltaG);
        assert_eq!(c2.backend, BackendKind::Circuit);
        assert_eq!(c2.circuit.g_ti, Some(2e-5));
        assert!(matches!(c.with_overrides(&["circuit.wire=1"]), Err(Error::UnknownParameter(k)) if k == "circuit.wire"));
        assert!(c.with_overrides(&["repeats"]).is_err());
        assert!(matches!(
            c.with_overrides(&["repeats=0"]),
            Err(Error::ConfigInvalid { path, .. }) if path == "repeats"
        ));
    }

    #[test]
    fn known_keys_cover_optional_fields() {
        let keys = ExperimentConfig::known_keys();
        for k in ["seed", "data.train_size", "circuit.mismatch", "transient.dt", "mnist.network.fan_out", "scaling.column_fill"] {
            assert!(keys.contains(k), "{k}");
        }
    }
}
