use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::OpenLoopArray;
use crate::device::DeviceModel;
use crate::error::{Error, Result};
use crate::numerics::{residual_and_lse, DenseMatrix, DenseVector, LeastSquares};

use super::logistic::{binarize_labels, ClassLabels};
use super::Backend;

const CLASSES: usize = 10;
const MODEL_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoLayerConfig {
    /// Hidden neurons per input neuron.
    pub fan_out: usize,
    /// Binarization amplitude of the one-hot targets.
    pub a: f64,
    /// First-layer weights are uniform in `[−w1_range, w1_range]`.
    pub w1_range: f64,
    pub seed: u64,
}

impl Default for TwoLayerConfig {
    fn default() -> Self {
        Self {
            fan_out: 4,
            a: 0.05,
            w1_range: 0.5,
            seed: 0,
        }
    }
}

/// Random first layer, least-squares second layer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TwoLayerModel {
    pub format: u32,
    pub config: TwoLayerConfig,
    /// `inputs × hidden`, fixed after construction.
    pub w1: DenseMatrix,
    /// `(hidden + 1) × 10`; row 0 holds the per-output bias.
    pub w2: DenseMatrix,
    /// `‖X w2_k − s_k‖²` per output neuron on the training features.
    pub lse: Vec<f64>,
    /// Number of least-squares solves issued during training.
    pub solves: usize,
    pub backend: String,
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// `[1 | sigmoid(T W1)]`.
fn hidden_features(t: &DenseMatrix, w1: &DenseMatrix) -> Result<DenseMatrix> {
    let z = t.matmul(w1)?;
    let (n, h) = z.shape();
    Ok(DenseMatrix::from_fn(n, h + 1, |i, j| if j == 0 { 1.0 } else { sigmoid(z[(i, j - 1)]) }))
}

/// Trains the second layer with one least-squares solve per output neuron.
pub fn train_two_layer(
    t: &DenseMatrix,
    labels: &[u8],
    cfg: &TwoLayerConfig,
    backend: &Backend,
) -> Result<TwoLayerModel> {
    let (n, inputs) = t.shape();
    if labels.len() != n {
        return Err(Error::dims(format!("{} labels for {n} samples", labels.len())));
    }
    if let Some((index, &value)) = labels.iter().enumerate().find(|(_, v)| **v as usize >= CLASSES) {
        return Err(Error::LabelOutOfRange { index, value });
    }
    if cfg.fan_out == 0 || !(cfg.w1_range > 0.0) {
        return Err(Error::InvalidParameter("fan_out and w1_range must be positive".into()));
    }
    let hidden = cfg.fan_out * inputs;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let w1 = DenseMatrix::from_fn(inputs, hidden, |_, _| rng.random_range(-cfg.w1_range..=cfg.w1_range));
    let x = hidden_features(t, &w1)?;
    let targets: Vec<DenseVector> = (0..CLASSES)
        .map(|k| {
            let l = ClassLabels::new(labels.iter().map(|&d| u8::from(d as usize == k)).collect(), cfg.a)?;
            binarize_labels(&l)
        })
        .collect::<Result<_>>()?;

    let solves = AtomicUsize::new(0);
    let columns: Vec<DenseVector> = match backend {
        Backend::Oracle => {
            let ls = LeastSquares::factor(&x)?;
            targets
                .par_iter()
                .map(|s| {
                    solves.fetch_add(1, Ordering::Relaxed);
                    ls.solve(s)
                })
                .collect::<Result<_>>()?
        }
        Backend::Circuit(cb) => {
            let refs: Vec<&DenseVector> = targets.iter().collect();
            let circuit = cb.build(&x, &refs)?;
            let solver = circuit.solver()?;
            let mapped = circuit.mapped();
            targets
                .par_iter()
                .map(|s| {
                    solves.fetch_add(1, Ordering::Relaxed);
                    let currents = s.scaled(-mapped.policy.y_scale * mapped.policy.i_unit);
                    let state = solver.solve(&currents)?;
                    mapped.weights_from_voltages(&state.v)
                })
                .collect::<Result<_>>()?
        }
    };
    let lse = columns
        .iter()
        .zip(&targets)
        .map(|(w, s)| residual_and_lse(&x, s, w).map(|r| r.1))
        .collect::<Result<Vec<f64>>>()?;
    let mut w2 = DenseMatrix::zeros(hidden + 1, CLASSES);
    for (k, c) in columns.iter().enumerate() {
        w2.set_column(k, c.as_slice());
    }
    Ok(TwoLayerModel {
        format: MODEL_FORMAT,
        config: cfg.clone(),
        w1,
        w2,
        lse,
        solves: solves.into_inner(),
        backend: backend.name().to_string(),
    })
}

fn argmax(v: &DenseVector) -> u8 {
    let mut best = 0;
    for k in 1..v.len() {
        if v[k] > v[best] {
            best = k;
        }
    }
    best as u8
}

impl TwoLayerModel {
    pub fn inputs(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_sums(&self, t: &DenseVector) -> Result<DenseVector> {
        let z = self.w1.tmatvec(t)?;
        let row = hidden_row(&z);
        self.w2.tmatvec(&row)
    }

    pub fn infer(&self, t: &DenseVector) -> Result<u8> {
        Ok(argmax(&self.output_sums(t)?))
    }

    /// Fraction of rows of `images` classified as `labels`.
    pub fn accuracy(&self, images: &DenseMatrix, labels: &[u8]) -> Result<f64> {
        accuracy_with(images, labels, |t| self.infer(t))
    }

    /// Programs both weight matrices into open-loop arrays.
    pub fn program_arrays<R: Rng + ?Sized>(&self, device: &DeviceModel, rng: &mut R) -> Result<InferenceArrays> {
        Ok(InferenceArrays {
            layer1: OpenLoopArray::program(&self.w1, device, rng)?,
            layer2: OpenLoopArray::program(&self.w2, device, rng)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: TwoLayerModel = serde_json::from_str(s)?;
        if m.format != MODEL_FORMAT {
            return Err(Error::InvalidParameter(format!("unsupported model format {}", m.format)));
        }
        Ok(m)
    }
}

fn hidden_row(z: &DenseVector) -> DenseVector {
    let mut row = Vec::with_capacity(z.len() + 1);
    row.push(1.0);
    row.extend(z.iter().map(|v| sigmoid(*v)));
    DenseVector::from(row)
}

fn accuracy_with(images: &DenseMatrix, labels: &[u8], f: impl Fn(&DenseVector) -> Result<u8> + Sync) -> Result<f64> {
    if images.rows() != labels.len() {
        return Err(Error::dims(format!("{} images, {} labels", images.rows(), labels.len())));
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = (0..labels.len())
        .into_par_iter()
        .map(|i| f(&DenseVector::from(images.row(i))).map(|c| usize::from(c == labels[i])))
        .sum::<Result<usize>>()?;
    Ok(hits as f64 / labels.len() as f64)
}

/// Both layers stored in open-loop arrays.
#[derive(Clone, Debug)]
pub struct InferenceArrays {
    pub layer1: OpenLoopArray,
    pub layer2: OpenLoopArray,
}

impl InferenceArrays {
    pub fn infer(&self, t: &DenseVector) -> Result<u8> {
        let z = self.layer1.apply(t)?;
        Ok(argmax(&self.layer2.apply(&hidden_row(&z))?))
    }

    pub fn accuracy(&self, images: &DenseMatrix, labels: &[u8]) -> Result<f64> {
        accuracy_with(images, labels, |t| self.infer(t))
    }
}

/// Digit for one input; the circuit backend runs both products through
/// open-loop arrays programmed with its device model.
pub fn infer_two_layer(m: &TwoLayerModel, t: &DenseVector, backend: &Backend) -> Result<u8> {
    if t.len() != m.inputs() {
        return Err(Error::dims(format!("{} inputs for a {}-input network", t.len(), m.inputs())));
    }
    match backend {
        Backend::Oracle => m.infer(t),
        Backend::Circuit(cb) => {
            let mut rng = ChaCha8Rng::seed_from_u64(cb.seed);
            m.program_arrays(&cb.device, &mut rng)?.infer(t)
        }
    }
}
