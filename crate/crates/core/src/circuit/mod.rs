//! The paired-array feedback circuit.
//!
//! `N` transimpedance amplifiers (negative transfer) hold the left array's
//! rows at virtual ground and drive the right array's rows; `M` amplifiers
//! with positive transfer sense the right array's columns and drive the left
//! array's columns. At equilibrium the column voltages `v` satisfy
//! `G_Rᵀ (G_L v + i) = 0`.

mod dynamics;
mod open_loop;
mod ports;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{map_row, MappedProblem};
use crate::numerics::{DenseMatrix, DenseVector, LeastSquares, Lu};
use ports::{Admittance, PortModel};

pub use dynamics::{
    write_spectrum_csv, StateSpace, TransientOptions, TransientResult, DEFAULT_SETTLE_BAND,
};
pub use open_loop::{open_loop_mvm, OpenLoopArray};

/// Single-pole operational amplifier: `τ dV/dt = A₀ V_diff − V`, with
/// `τ = A₀ / (2π · gbw)` and optional hard output saturation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AmplifierModel {
    pub dc_gain: f64,
    /// Gain-bandwidth product (Hz).
    pub gbw: f64,
    /// Output saturation (V); `None` leaves the output unbounded. A
    /// serialized model without this key is unclamped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clamp: Option<f64>,
}

impl Default for AmplifierModel {
    fn default() -> Self {
        Self {
            dc_gain: 1e5,
            gbw: 10e6,
            clamp: Some(0.7),
        }
    }
}

impl AmplifierModel {
    pub fn unclamped() -> Self {
        Self {
            clamp: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dc_gain > 1.0) {
            return Err(Error::InvalidParameter(format!("dc_gain {} must exceed 1", self.dc_gain)));
        }
        if !(self.gbw > 0.0) || !self.gbw.is_finite() {
            return Err(Error::InvalidParameter(format!("gbw {} must be positive", self.gbw)));
        }
        if let Some(c) = self.clamp {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("clamp {c} must be positive")));
            }
        }
        Ok(())
    }

    /// Unity-gain angular frequency `2π · gbw` (rad/s).
    pub fn omega(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.gbw
    }

    pub fn tau(&self) -> f64 {
        self.dc_gain / self.omega()
    }

    fn exceeds(&self, v: f64) -> bool {
        self.clamp.is_some_and(|c| v.abs() > c)
    }
}

/// An extra grounded row on the left array, used to evaluate `xᵀw` for a new
/// point as the current flowing into the row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub coordinates: DenseVector,
    pub conductances: DenseVector,
}

#[derive(Clone, Debug)]
pub struct CrosspointCircuit {
    mapped: MappedProblem,
    g_ti: f64,
    nfa: AmplifierModel,
    pfa: AmplifierModel,
    wire_r_per_segment: f64,
    prediction_rows: Vec<PredictionRow>,
    ports: Arc<PortModel>,
}

/// Equilibrium of the circuit.
#[derive(Clone, Debug)]
pub struct SteadyState {
    /// Column-driving amplifier outputs (V).
    pub v: DenseVector,
    /// Row amplifier outputs (V); these carry the scaled residuals.
    pub u: DenseVector,
    pub peak_voltage: f64,
    pub clamp_violation: bool,
}

impl CrosspointCircuit {
    /// Circuit with default amplifiers, no wire resistance and
    /// `g_ti = g_unit`.
    pub fn new(mapped: MappedProblem) -> Result<Self> {
        let (n, m) = mapped.g_left.shape();
        if mapped.g_right.shape() != (n, m) || mapped.input_currents.len() != n {
            return Err(Error::dims(format!(
                "left array {n}x{m}, right array {:?}, {} input currents",
                mapped.g_right.shape(),
                mapped.input_currents.len()
            )));
        }
        if n == 0 || m == 0 {
            return Err(Error::EmptyDataset);
        }
        let ports = Arc::new(PortModel::ideal(&mapped.g_left, &mapped.g_right));
        Ok(Self {
            g_ti: mapped.policy.g_unit,
            mapped,
            nfa: AmplifierModel::default(),
            pfa: AmplifierModel::default(),
            wire_r_per_segment: 0.0,
            prediction_rows: Vec::new(),
            ports,
        })
    }

    pub fn with_g_ti(mut self, g_ti: f64) -> Result<Self> {
        if !(g_ti > 0.0) || !g_ti.is_finite() {
            return Err(Error::InvalidParameter(format!("g_ti {g_ti} must be positive")));
        }
        self.g_ti = g_ti;
        Ok(self)
    }

    pub fn with_amplifiers(mut self, nfa: AmplifierModel, pfa: AmplifierModel) -> Result<Self> {
        nfa.validate()?;
        pfa.validate()?;
        self.nfa = nfa;
        self.pfa = pfa;
        Ok(self)
    }

    /// Same clamp on every amplifier.
    pub fn with_clamp(mut self, clamp: Option<f64>) -> Result<Self> {
        let (mut nfa, mut pfa) = (self.nfa, self.pfa);
        nfa.clamp = clamp;
        pfa.clamp = clamp;
        self = self.with_amplifiers(nfa, pfa)?;
        Ok(self)
    }

    /// Adds a grounded row holding `x_star` (raw problem coordinates).
    pub fn with_prediction_row(mut self, x_star: &DenseVector) -> Result<Self> {
        let g = map_row(x_star, &self.mapped.offset, &self.mapped.policy, &self.mapped.device)?;
        self.prediction_rows.push(PredictionRow {
            coordinates: x_star.clone(),
            conductances: g,
        });
        Ok(self)
    }

    /// Copy of the circuit with series resistance `r_segment` (Ω) on every
    /// row and column wire segment.
    pub fn expand_with_wires(&self, r_segment: f64) -> Result<Self> {
        if !(r_segment >= 0.0) || !r_segment.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "wire resistance {r_segment} ohm must be nonnegative"
            )));
        }
        let mut out = self.clone();
        out.wire_r_per_segment = r_segment;
        out.ports = Arc::new(PortModel::with_wires(
            &self.mapped.g_left,
            &self.mapped.g_right,
            r_segment,
        )?);
        Ok(out)
    }

    pub fn mapped(&self) -> &MappedProblem {
        &self.mapped
    }

    pub fn g_ti(&self) -> f64 {
        self.g_ti
    }

    pub fn nfa(&self) -> &AmplifierModel {
        &self.nfa
    }

    pub fn pfa(&self) -> &AmplifierModel {
        &self.pfa
    }

    pub fn wire_r_per_segment(&self) -> f64 {
        self.wire_r_per_segment
    }

    pub fn prediction_rows(&self) -> &[PredictionRow] {
        &self.prediction_rows
    }

    /// `(N, M)`: row amplifiers and column amplifiers.
    pub fn shape(&self) -> (usize, usize) {
        self.mapped.g_left.shape()
    }

    pub(crate) fn ports(&self) -> &PortModel {
        &self.ports
    }

    /// Factors the infinite-gain equilibrium for reuse across input currents.
    pub fn solver(&self) -> Result<SteadySolver> {
        let p = &self.ports;
        let qr = LeastSquares::factor(&p.k_right)?;
        let reduced = qr.apply_qt_matrix(&p.k_left)?;
        let lu = Lu::factor(&reduced).map_err(|_| Error::RankDeficient {
            condition: f64::INFINITY,
            cap: crate::numerics::DEFAULT_CONDITION_CAP,
        })?;
        Ok(SteadySolver {
            qr,
            lu,
            k_left: p.k_left.clone(),
            g_ti: self.g_ti,
            nfa: self.nfa,
            pfa: self.pfa,
        })
    }

    /// Equilibrium with ideal (infinite-gain) amplifiers, i.e. the exact
    /// solution of `K_Rᵀ (K_L v + i) = 0`, `u = −(K_L v + i) / g_ti`.
    pub fn steady_state(&self) -> Result<SteadyState> {
        self.solver()?.solve(&self.mapped.input_currents)
    }

    /// Fixed point of the finite-gain dynamics, ignoring the clamps.
    pub fn operating_point(&self) -> Result<SteadyState> {
        let p = &self.ports;
        let (n, _) = self.shape();
        let a_n = self.nfa.dc_gain;
        let a_p = self.pfa.dc_gain;
        // u = −P⁻¹ (K_L v + i) with P = g_ti + (Y_rows + g_ti) / A_n.
        let p_mat = match &p.y_rows_left {
            Admittance::Diagonal(d) => {
                Admittance::Diagonal(d.iter().map(|y| self.g_ti + (y + self.g_ti) / a_n).collect())
            }
            Admittance::Dense(y) => {
                let mut m = y.scaled(1.0 / a_n);
                for i in 0..n {
                    m[(i, i)] += self.g_ti * (1.0 + 1.0 / a_n);
                }
                Admittance::Dense(m)
            }
        };
        let p_inv = p_mat.shifted_inverse(0.0)?;
        let pk = p_inv.mul_mat(&p.k_left);
        let mut h = p.k_right.tmatmul(&pk)?;
        let y_cols = p.y_cols_right.to_dense();
        for i in 0..h.rows() {
            for j in 0..h.cols() {
                h[(i, j)] += y_cols[(i, j)] / a_p;
            }
        }
        let mut pi = vec![0.0; n];
        p_inv.mul_vec(self.mapped.input_currents.as_slice(), &mut pi);
        let rhs = p.k_right.tmatvec(&DenseVector::from(pi))?.scaled(-1.0);
        let v = Lu::factor(&h)?.solve(&rhs)?;
        let drive = p.k_left.matvec(&v)?.add(&self.mapped.input_currents)?;
        let mut u = vec![0.0; n];
        p_inv.mul_vec(drive.as_slice(), &mut u);
        let u = DenseVector::from(u).scaled(-1.0);
        Ok(SteadyState::new(v, u, &self.nfa, &self.pfa))
    }

    /// Weights in problem units from the ideal equilibrium.
    pub fn weights(&self) -> Result<DenseVector> {
        self.mapped.weights_from_voltages(&self.steady_state()?.v)
    }

    /// Currents (A) flowing into the grounded prediction rows for the given
    /// column voltages.
    pub fn prediction_currents(&self, v: &DenseVector) -> Result<Vec<f64>> {
        self.prediction_rows
            .iter()
            .map(|r| Ok(r.conductances.dot(v)))
            .collect::<Result<Vec<f64>>>()
            .and_then(|c| {
                if v.len() == self.shape().1 {
                    Ok(c)
                } else {
                    Err(Error::dims(format!("{} voltages for {} columns", v.len(), self.shape().1)))
                }
            })
    }

    /// Outputs of every stored prediction row, in problem units.
    pub fn prediction_outputs(&self) -> Result<Vec<f64>> {
        let v = self.steady_state()?.v;
        Ok(self
            .prediction_currents(&v)?
            .into_iter()
            .map(|c| self.mapped.policy.unscale_current(c))
            .collect())
    }

    /// `y* ≈ x*ᵀ w`, read as the current of an extra grounded row.
    pub fn predict(&self, x_star: &DenseVector) -> Result<f64> {
        let v = self.steady_state()?.v;
        self.predict_with(x_star, &v)
    }

    /// Like [`predict`](Self::predict) with precomputed column voltages.
    pub fn predict_with(&self, x_star: &DenseVector, v: &DenseVector) -> Result<f64> {
        let g = map_row(x_star, &self.mapped.offset, &self.mapped.policy, &self.mapped.device)?;
        if v.len() != g.len() {
            return Err(Error::dims(format!("{} voltages for {} columns", v.len(), g.len())));
        }
        Ok(self.mapped.policy.unscale_current(g.dot(v)))
    }

    pub fn state_space(&self) -> Result<StateSpace> {
        StateSpace::new(self)
    }

    /// Eigenvalues of the linearized state matrix.
    pub fn stability_spectrum(&self) -> Result<crate::numerics::Spectrum> {
        self.state_space()?.spectrum()
    }

    pub fn transient(&self, opts: &TransientOptions) -> Result<TransientResult> {
        self.state_space()?.transient(opts)
    }
}

/// Factored equilibrium, reusable for many input-current vectors.
#[derive(Clone, Debug)]
pub struct SteadySolver {
    qr: LeastSquares,
    lu: Lu,
    k_left: DenseMatrix,
    g_ti: f64,
    nfa: AmplifierModel,
    pfa: AmplifierModel,
}

impl SteadySolver {
    pub fn solve(&self, currents: &DenseVector) -> Result<SteadyState> {
        // Qᵀ(K_L v + i) = 0 is equivalent to K_Rᵀ(K_L v + i) = 0 for full-rank K_R.
        let rhs = self.qr.apply_qt(currents.as_slice())?.scaled(-1.0);
        let v = self.lu.solve(&rhs)?;
        let u = self
            .k_left
            .matvec(&v)?
            .add(currents)?
            .scaled(-1.0 / self.g_ti);
        let state = SteadyState::new(v, u, &self.nfa, &self.pfa);
        if state.clamp_violation {
            log::warn!(
                "amplifier output {:.3} V exceeds the clamp; the clamped circuit will not reach this solution",
                state.peak_voltage
            );
        }
        Ok(state)
    }
}

impl SteadyState {
    fn new(v: DenseVector, u: DenseVector, nfa: &AmplifierModel, pfa: &AmplifierModel) -> Self {
        let clamp_violation = u.iter().any(|x| nfa.exceeds(*x)) || v.iter().any(|x| pfa.exceeds(*x));
        let peak_voltage = u.norm_inf().max(v.norm_inf());
        Self {
            v,
            u,
            peak_voltage,
            clamp_violation,
        }
    }
}
