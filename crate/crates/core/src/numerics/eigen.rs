//! Eigenvalues of general real matrices via the real Schur form.

use nalgebra::{Complex, DMatrix};

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<Complex<f64>>,
    /// `min |Re λ|` over the spectrum.
    pub min_real_magnitude: f64,
}

impl Spectrum {
    pub fn from_eigenvalues(mut eigenvalues: Vec<Complex<f64>>) -> Self {
        eigenvalues.sort_by(|a, b| {
            b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im))
        });
        let min_real_magnitude = eigenvalues
            .iter()
            .map(|z| z.re.abs())
            .fold(f64::INFINITY, f64::min);
        Self {
            eigenvalues,
            min_real_magnitude,
        }
    }

    pub fn max_real(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// All poles strictly in the left half plane.
    pub fn is_stable(&self) -> bool {
        self.max_real() < 0.0
    }

    pub fn max_magnitude(&self) -> f64 {
        self.eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

pub fn eigenvalues(a: &DenseMatrix) -> Result<Spectrum> {
    let (n, m) = a.shape();
    if n != m {
        return Err(Error::dims(format!("eigenvalues of non-square {n}x{m} matrix")));
    }
    if n == 0 {
        return Ok(Spectrum::from_eigenvalues(Vec::new()));
    }
    // Amplifier poles put entries near 1e9; work on a unit-scale copy.
    let scale = a.max_abs();
    if !scale.is_finite() {
        return Err(Error::ConvergenceFailure);
    }
    if scale == 0.0 {
        return Ok(Spectrum::from_eigenvalues(vec![Complex::new(0.0, 0.0); n]));
    }
    let mat = DMatrix::from_row_slice(n, n, a.as_slice()) / scale;
    let schur = nalgebra::linalg::Schur::try_new(mat.clone(), f64::EPSILON, 200 * n)
        .or_else(|| nalgebra::linalg::Schur::try_new(mat, 4.0 * f64::EPSILON, 0))
        .ok_or(Error::ConvergenceFailure)?;
    let ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().map(|z| z * scale).collect();
    if ev.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::ConvergenceFailure);
    }
    Ok(Spectrum::from_eigenvalues(ev))
}
