use crate::circuit::{CrosspointCircuit, SteadyState};
use crate::error::{Error, Result};
use crate::numerics::{pseudoinverse_solve, residual_and_lse, DenseMatrix, DenseVector};

use super::Backend;

/// An overdetermined system `X w ≈ y`.
#[derive(Clone, Debug)]
pub struct RegressionProblem {
    pub x: DenseMatrix,
    pub y: DenseVector,
    pub feature_names: Vec<String>,
}

impl RegressionProblem {
    pub fn new(x: DenseMatrix, y: DenseVector) -> Result<Self> {
        let (n, m) = x.shape();
        if y.len() != n {
            return Err(Error::dims(format!("{n} rows but {} targets", y.len())));
        }
        // Square systems are accepted as the exactly determined limit.
        if n < m {
            return Err(Error::InsufficientSamples { needed: m, got: n });
        }
        Ok(Self {
            x,
            y,
            feature_names: (0..m).map(|j| format!("x{j}")).collect(),
        })
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.x.cols() {
            return Err(Error::dims(format!("{} names for {} columns", names.len(), self.x.cols())));
        }
        self.feature_names = names;
        Ok(self)
    }
}

#[derive(Clone, Debug)]
pub struct LinearFit {
    pub w: DenseVector,
    /// Population standard deviation of the training residuals.
    pub sigma_p: f64,
    /// `‖Xw − y‖²`.
    pub lse: f64,
    /// The simulated circuit and its equilibrium (circuit backend only).
    pub circuit: Option<(CrosspointCircuit, SteadyState)>,
}

impl LinearFit {
    /// `y*` for new coordinates (a full design-matrix row), read from the
    /// circuit's prediction row when available.
    pub fn predict(&self, row: &DenseVector) -> Result<f64> {
        match &self.circuit {
            Some((c, s)) => c.predict_with(row, &s.v),
            None => {
                if row.len() != self.w.len() {
                    return Err(Error::dims(format!("{} coordinates for {} weights", row.len(), self.w.len())));
                }
                Ok(row.dot(&self.w))
            }
        }
    }
}

pub fn fit_linear(p: &RegressionProblem, backend: &Backend) -> Result<LinearFit> {
    let (w, circuit) = match backend {
        Backend::Oracle => (pseudoinverse_solve(&p.x, &p.y)?, None),
        Backend::Circuit(cfg) => {
            let c = cfg.build(&p.x, &[&p.y])?;
            let s = c.steady_state()?;
            let w = c.mapped().weights_from_voltages(&s.v)?;
            (w, Some((c, s)))
        }
    };
    let (eps, lse) = residual_and_lse(&p.x, &p.y, &w)?;
    Ok(LinearFit {
        sigma_p: population_sd(eps.as_slice()),
        w,
        lse,
        circuit,
    })
}

/// Standard deviation of the test residuals `y − X w`.
pub fn evaluate_prediction(w: &DenseVector, x_test: &DenseMatrix, y_test: &DenseVector) -> Result<f64> {
    let (eps, _) = residual_and_lse(x_test, y_test, w)?;
    Ok(population_sd(eps.as_slice()))
}

/// `sqrt(mean((r − mean r)²))`.
pub fn population_sd(r: &[f64]) -> f64 {
    if r.is_empty() {
        return 0.0;
    }
    let n = r.len() as f64;
    let mean = r.iter().sum::<f64>() / n;
    (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::CircuitBackend;
    use crate::mapping::build_design_matrix;

    #[test]
    fn collinear_points() {
        let x = build_design_matrix(&[[1.0], [2.0], [3.0]], 1, true).unwrap();
        let p = RegressionProblem::new(x, vec![1.5, 2.0, 2.5].into()).unwrap();
        for backend in [Backend::Oracle, Backend::Circuit(CircuitBackend::ideal())] {
            let f = fit_linear(&p, &backend).unwrap();
            assert!((f.w[0] - 1.0).abs() < 1e-9 && (f.w[1] - 0.5).abs() < 1e-9, "{}", backend.name());
            assert!(f.sigma_p < 1e-9);
        }
    }

    #[test]
    fn sd_is_population_form() {
        assert!((population_sd(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert_eq!(population_sd(&[]), 0.0);
    }

    #[test]
    fn prediction_through_circuit_row() {
        let x = build_design_matrix(&[[1.0], [2.0], [3.0], [4.0]], 1, true).unwrap();
        let p = RegressionProblem::new(x, vec![0.3, 0.5, 0.4, 0.7].into()).unwrap();
        let oracle = fit_linear(&p, &Backend::Oracle).unwrap();
        let circuit = fit_linear(&p, &Backend::Circuit(CircuitBackend::ideal())).unwrap();
        let row: DenseVector = vec![1.0, 2.5].into();
        assert!((circuit.predict(&row).unwrap() - oracle.predict(&row).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn evaluation_of_exact_fit_is_zero() {
        let x = build_design_matrix(&[[1.0], [2.0], [3.0]], 1, true).unwrap();
        let w: DenseVector = vec![0.2, 0.1].into();
        let y = x.matvec(&w).unwrap();
        assert!(evaluate_prediction(&w, &x, &y).unwrap() < 1e-15);
        assert!(evaluate_prediction(&w, &x, &vec![1.0].into()).is_err());
    }

    #[test]
    fn underdetermined_rejected() {
        let x = DenseMatrix::zeros(1, 2);
        assert!(RegressionProblem::new(x, vec![1.0].into()).is_err());
    }
}
