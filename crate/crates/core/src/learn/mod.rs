//! Learning pipelines that run on either the analytical solver or the
//! simulated circuit.

mod linear;
mod logistic;
mod two_layer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{AmplifierModel, CrosspointCircuit};
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::mapping::{map_translated, translate_nonnegative, ScalingConfig};
use crate::numerics::{DenseMatrix, DenseVector};

pub use linear::{evaluate_prediction, fit_linear, population_sd, LinearFit, RegressionProblem};
pub use logistic::{binarize_labels, classify_point, fit_logistic, logit, ClassLabels, LogisticFit};
pub use two_layer::{
    infer_two_layer, sigmoid, train_two_layer, InferenceArrays, TwoLayerConfig, TwoLayerModel,
};

/// Everything needed to turn a matrix into a simulated circuit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CircuitBackend {
    pub device: DeviceModel,
    pub scaling: ScalingConfig,
    /// Feedback conductance of the row amplifiers; `None` uses `g_unit`.
    pub g_ti: Option<f64>,
    pub nfa: AmplifierModel,
    pub pfa: AmplifierModel,
    /// Series resistance per wire segment (Ω).
    pub wire_r: f64,
    /// Extra uniform left/right mismatch applied after programming.
    pub mismatch: Option<f64>,
    pub seed: u64,
}

impl Default for CircuitBackend {
    fn default() -> Self {
        Self {
            device: DeviceModel::default(),
            scaling: ScalingConfig::default(),
            g_ti: None,
            nfa: AmplifierModel::default(),
            pfa: AmplifierModel::default(),
            wire_r: 0.0,
            mismatch: None,
            seed: 0,
        }
    }
}

impl CircuitBackend {
    /// Unquantized, noiseless devices with unbounded amplifiers.
    pub fn ideal() -> Self {
        Self {
            device: DeviceModel::ideal(Default::default()),
            nfa: AmplifierModel::unclamped(),
            pfa: AmplifierModel::unclamped(),
            ..Self::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn g_ti(&self) -> f64 {
        self.g_ti.unwrap_or(self.scaling.g_unit)
    }

    /// Maps `x` (translated to nonnegative values if needed) with targets
    /// `targets[0]` and builds the circuit. Every target vector is taken
    /// into account when choosing the output scale.
    pub fn build(&self, x: &DenseMatrix, targets: &[&DenseVector]) -> Result<CrosspointCircuit> {
        let first = targets.first().ok_or(Error::EmptyDataset)?;
        let (shifted, _) = translate_nonnegative(x);
        let policy = self
            .scaling
            .policy(&shifted, targets, self.device.levels.g_max, self.g_ti())?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut mapped = map_translated(x, first, &policy, &self.device, &mut rng)?;
        if let Some(mm) = self.mismatch {
            mapped.inject_mismatch(mm, &mut rng);
        }
        let c = CrosspointCircuit::new(mapped)?
            .with_g_ti(self.g_ti())?
            .with_amplifiers(self.nfa, self.pfa)?;
        if self.wire_r > 0.0 {
            c.expand_with_wires(self.wire_r)
        } else {
            Ok(c)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Backend {
    /// Analytical pseudoinverse.
    Oracle,
    Circuit(CircuitBackend),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Oracle => "oracle",
            Backend::Circuit(_) => "circuit",
        }
    }
}
