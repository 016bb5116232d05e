use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector};

use super::linear::{fit_linear, LinearFit, RegressionProblem};
use super::Backend;

/// Binary labels with the amplitude used to encode them as `±a`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassLabels {
    pub labels: Vec<u8>,
    pub a: f64,
}

impl ClassLabels {
    pub fn new(labels: Vec<u8>, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("amplitude a = {a} must be positive")));
        }
        if let Some((index, &value)) = labels.iter().enumerate().find(|(_, v)| **v > 1) {
            return Err(Error::NonBinaryLabel { index, value });
        }
        Ok(Self { labels, a })
    }
}

/// `+a` for class 1, `−a` for class 0.
pub fn binarize_labels(l: &ClassLabels) -> Result<DenseVector> {
    if !(l.a > 0.0) {
        return Err(Error::InvalidParameter(format!("amplitude a = {} must be positive", l.a)));
    }
    l.labels
        .iter()
        .enumerate()
        .map(|(index, &v)| match v {
            1 => Ok(l.a),
            0 => Ok(-l.a),
            value => Err(Error::NonBinaryLabel { index, value }),
        })
        .collect::<Result<Vec<f64>>>()
        .map(DenseVector::from)
}

/// Inverse sigmoid for soft targets strictly inside `(0, 1)`.
pub fn logit(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("logit needs 0 < p < 1, got {p}")));
    }
    Ok((p / (1.0 - p)).ln())
}

#[derive(Clone, Debug)]
pub struct LogisticFit {
    /// `[w₀, w₁, …]`; the boundary is `w₀ + Σ w_j x_j = 0`.
    pub w: DenseVector,
    pub fit: LinearFit,
}

impl LogisticFit {
    /// Class of a point given by its coordinates (no bias entry), computed
    /// with the backend used for training.
    pub fn classify(&self, x_new: &DenseVector) -> Result<u8> {
        let row = with_bias(x_new);
        let s = self.fit.predict(&row)?;
        Ok(u8::from(s >= 0.0))
    }

    /// Boundary sum `w₀ + Σ w_j x_j`.
    pub fn score(&self, x_new: &DenseVector) -> Result<f64> {
        score(&self.w, x_new)
    }
}

/// Regression of `X` (bias in column 0) against the `±a` targets.
pub fn fit_logistic(x: &DenseMatrix, labels: &ClassLabels, backend: &Backend) -> Result<LogisticFit> {
    let s = binarize_labels(labels)?;
    let p = RegressionProblem::new(x.clone(), s)?;
    let fit = fit_linear(&p, backend)?;
    Ok(LogisticFit { w: fit.w.clone(), fit })
}

/// Class 1 iff `w₀ + Σ w_j x_j ≥ 0`.
pub fn classify_point(w: &DenseVector, x_new: &DenseVector) -> Result<u8> {
    Ok(u8::from(score(w, x_new)? >= 0.0))
}

fn score(w: &DenseVector, x_new: &DenseVector) -> Result<f64> {
    if w.len() != x_new.len() + 1 {
        return Err(Error::dims(format!(
            "{} coordinates for {} weights (bias included)",
            x_new.len(),
            w.len()
        )));
    }
    Ok(w[0] + w.as_slice()[1..].iter().zip(x_new.iter()).map(|(a, b)| a * b).sum::<f64>())
}

fn with_bias(x: &DenseVector) -> DenseVector {
    let mut v = Vec::with_capacity(x.len() + 1);
    v.push(1.0);
    v.extend_from_slice(x.as_slice());
    DenseVector::from(v)
}
