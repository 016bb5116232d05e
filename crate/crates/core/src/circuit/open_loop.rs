//! Open-loop arrays for inference: inputs drive the rows, columns sum the
//! currents, so the array computes `Wᵀ x` in one read.

use rand::{Rng, SeedableRng};

use crate::device::{ConductanceLevelSet, DeviceModel};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};

/// A weight matrix stored as conductances.
///
/// Each output column is scaled on its own: its smallest weight maps to the
/// HRS level and its largest to `g_max`. The shift is removed digitally from
/// the column sums and the scale is the column's sense gain.
#[derive(Clone, Debug)]
pub struct OpenLoopArray {
    conductances: DenseMatrix,
    /// Conductance per weight unit for each column (S).
    g_w: Vec<f64>,
    /// `w = g / g_w − shift`, per column.
    shift: Vec<f64>,
}

impl OpenLoopArray {
    /// Maps `weights` (rows = inputs, columns = outputs) through `device`.
    pub fn program<R: Rng + ?Sized>(weights: &DenseMatrix, device: &DeviceModel, rng: &mut R) -> Result<Self> {
        device.validate()?;
        if !weights.is_finite() {
            return Err(Error::NonFinite("open-loop weights"));
        }
        let levels = &device.levels;
        let (rows, cols) = weights.shape();
        let mut g_w = Vec::with_capacity(cols);
        let mut shift = Vec::with_capacity(cols);
        for j in 0..cols {
            let (lo, hi) = (0..rows).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), i| {
                (a.min(weights[(i, j)]), b.max(weights[(i, j)]))
            });
            let span = if hi > lo { hi - lo } else { 1.0 };
            let unit = (levels.g_max - levels.hrs()) / span;
            g_w.push(unit);
            shift.push(levels.hrs() / unit - lo);
        }
        let mut conductances = DenseMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                let target = ((weights[(i, j)] + shift[j]) * g_w[j]).clamp(levels.hrs(), levels.g_max);
                conductances[(i, j)] = device.program(target, rng)?.programmed;
            }
        }
        Ok(Self {
            conductances,
            g_w,
            shift,
        })
    }

    pub fn conductances(&self) -> &DenseMatrix {
        &self.conductances
    }

    /// Conductance per weight unit of each column (S).
    pub fn weight_units(&self) -> &[f64] {
        &self.g_w
    }

    /// Weights as actually stored.
    pub fn effective_weights(&self) -> DenseMatrix {
        let c = &self.conductances;
        DenseMatrix::from_fn(c.rows(), c.cols(), |i, j| c[(i, j)] / self.g_w[j] - self.shift[j])
    }

    /// `Wᵀ x` from the column currents.
    pub fn apply(&self, x: &DenseVector) -> Result<DenseVector> {
        let currents = self.conductances.tmatvec(x)?;
        let total: f64 = x.iter().sum();
        Ok(DenseVector::from_fn(currents.len(), |j| {
            currents[j] / self.g_w[j] - self.shift[j] * total
        }))
    }
}

/// `Wᵀ x` through a noiseless, unquantized array.
pub fn open_loop_mvm(weights: &DenseMatrix, input: &DenseVector) -> Result<DenseVector> {
    if weights.rows() != input.len() {
        return Err(Error::dims(format!(
            "{} inputs for a {}x{} weight matrix",
            input.len(),
            weights.rows(),
            weights.cols()
        )));
    }
    let device = DeviceModel::ideal(ConductanceLevelSet::default());
    // A noiseless device never draws from the generator.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    OpenLoopArray::program(weights, &device, &mut rng)?.apply(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::SigmaMode;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_passes_input_through() {
        let x: DenseVector = vec![0.2, -0.7, 1.5].into();
        let y = open_loop_mvm(&DenseMatrix::identity(3), &x).unwrap();
        for (a, b) in y.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_equals_product() {
        let w = DenseMatrix::from_fn(5, 3, |i, j| ((i * 3 + j * 7) % 11) as f64 / 5.0 - 1.0);
        let x = DenseVector::from_fn(5, |i| 0.1 * i as f64 - 0.2);
        let got = open_loop_mvm(&w, &x).unwrap();
        let want = w.tmatvec(&x).unwrap();
        assert!(got.sub(&want).unwrap().norm_inf() < 1e-12);
        assert!(open_loop_mvm(&w, &DenseVector::zeros(4)).is_err());
    }

    #[test]
    fn eight_bit_error_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let levels = ConductanceLevelSet::eight_bit(1e-3);
        let device = DeviceModel { quantize: true, ..DeviceModel::ideal(levels) };
        let w = DenseMatrix::from_fn(10, 10, |_, _| rng.random_range(-1.0..1.0));
        let x = DenseVector::from_fn(10, |_| rng.random_range(-1.0..1.0));
        let arr = OpenLoopArray::program(&w, &device, &mut rng).unwrap();
        let got = arr.apply(&x).unwrap();
        let want = w.tmatvec(&x).unwrap();
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        for j in 0..10 {
            let bound = l1 * levels.delta_g() / (2.0 * arr.weight_units()[j]);
            assert!((got[j] - want[j]).abs() <= bound * (1.0 + 1e-9), "{j}");
        }
    }

    #[test]
    fn noise_perturbs_outputs() {
        let w = DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64);
        let device = DeviceModel {
            sigma_mode: SigmaMode::HalfDeltaG,
            ..DeviceModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let arr = OpenLoopArray::program(&w, &device, &mut rng).unwrap();
        assert!(arr.effective_weights().sub(&w).unwrap().max_abs() > 0.0);
    }
}
