//! Time-domain model of the circuit.
//!
//! State `x = [u; v]`: the `N` row-amplifier outputs followed by the `M`
//! column-amplifier outputs. The arrays are memoryless, so with
//! `S = (Y_rows + g_ti)⁻¹` the row-amplifier input voltages are
//! `e = S (g_ti u + i + K_L v)` and the column-amplifier inputs are
//! `f = Y_cols⁻¹ K_Rᵀ u`. Each amplifier relaxes as
//!
//! ```text
//! du/dt = −ω_n e − u/τ_n        dv/dt = ω_p f − v/τ_p
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ports::Admittance;
use super::{AmplifierModel, CrosspointCircuit};
use crate::error::{Error, Result};
use crate::numerics::{eigenvalues, step_schedule, DenseMatrix, DenseVector, Rk4, Spectrum};

pub const DEFAULT_SETTLE_BAND: f64 = 0.01;

/// Default integration window in units of the slowest time constant `1/λ_min`.
const WINDOW_TIME_CONSTANTS: f64 = 12.0;
/// Default steps per period of the fastest mode.
const STEPS_PER_PERIOD: f64 = 50.0;
/// A run counts as settled only if it settles within this share of the window.
const SETTLED_FRACTION: f64 = 0.8;
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientOptions {
    /// Simulated duration (s); defaults to `12 / λ_min`.
    pub t_end: Option<f64>,
    /// Step size (s); defaults to 1/50 of the fastest period bound.
    pub dt: Option<f64>,
    pub settle_band: f64,
    /// Upper bound on stored trace samples.
    pub max_trace_points: usize,
}

impl Default for TransientOptions {
    fn default() -> Self {
        Self {
            t_end: None,
            dt: None,
            settle_band: DEFAULT_SETTLE_BAND,
            max_trace_points: 2000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransientResult {
    pub times: Vec<f64>,
    /// Column voltages `v(t)` at `times`.
    pub trace: Vec<DenseVector>,
    /// Whether any amplifier sat on its clamp at each stored time.
    pub clamp_active: Vec<bool>,
    /// First time after which every `v_j` stays within
    /// `settle_band · ‖final_v‖∞` of its final value.
    pub settle_time: f64,
    pub settle_band: f64,
    /// False when the run did not settle well inside the window.
    pub settled: bool,
    pub clamped_rows: Vec<bool>,
    pub clamped_cols: Vec<bool>,
    pub final_v: DenseVector,
    pub final_u: DenseVector,
    pub dt: f64,
    pub t_end: f64,
    pub steps: usize,
}

impl TransientResult {
    pub fn any_clamped(&self) -> bool {
        self.clamped_rows.iter().chain(&self.clamped_cols).any(|c| *c)
    }

    /// `time_s, v_1 … v_M, clamped`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let m = self.final_v.len();
        let mut header = vec!["time_s".to_string()];
        header.extend((1..=m).map(|j| format!("v_{j}")));
        header.push("clamped".into());
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&header)?;
        for ((t, v), c) in self.times.iter().zip(&self.trace).zip(&self.clamp_active) {
            let mut rec = vec![format!("{t:e}")];
            rec.extend(v.iter().map(|x| format!("{x:e}")));
            rec.push(u8::from(*c).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Linear state-space form of a [`CrosspointCircuit`].
#[derive(Clone, Debug)]
pub struct StateSpace {
    n: usize,
    m: usize,
    g_ti: f64,
    s: Admittance,
    /// `S · K_L`.
    sk: DenseMatrix,
    /// `S · i`.
    si: Vec<f64>,
    /// `Y_cols⁻¹ K_Rᵀ`.
    sense: DenseMatrix,
    nfa: AmplifierModel,
    pfa: AmplifierModel,
}

impl StateSpace {
    pub fn new(c: &CrosspointCircuit) -> Result<Self> {
        let p = c.ports();
        let (n, m) = c.shape();
        let s = p.y_rows_left.shifted_inverse(c.g_ti())?;
        let sk = s.mul_mat(&p.k_left);
        let mut si = vec![0.0; n];
        s.mul_vec(c.mapped().input_currents.as_slice(), &mut si);
        let y_cols_inv = p.y_cols_right.shifted_inverse(0.0)?;
        let sense = y_cols_inv.mul_mat(&p.k_right.transpose());
        Ok(Self {
            n,
            m,
            g_ti: c.g_ti(),
            s,
            sk,
            si,
            sense,
            nfa: *c.nfa(),
            pfa: *c.pfa(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    /// `dx/dt = A x + b`.
    pub fn matrix(&self) -> (DenseMatrix, DenseVector) {
        let (n, m) = (self.n, self.m);
        let (wn, wp) = (self.nfa.omega(), self.pfa.omega());
        let (tn, tp) = (self.nfa.tau(), self.pfa.tau());
        let s = self.s.to_dense();
        let a = DenseMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => -wn * self.g_ti * s[(i, j)] - if i == j { 1.0 / tn } else { 0.0 },
            (true, false) => -wn * self.sk[(i, j - n)],
            (false, true) => wp * self.sense[(i - n, j)],
            (false, false) => {
                if i == j {
                    -1.0 / tp
                } else {
                    0.0
                }
            }
        });
        let b = DenseVector::from_fn(n + m, |i| if i < n { -wn * self.si[i] } else { 0.0 });
        (a, b)
    }

    pub fn spectrum(&self) -> Result<Spectrum> {
        eigenvalues(&self.matrix().0)
    }

    /// Gershgorin bound on the spectral radius (rad/s).
    pub fn gershgorin_bound(&self) -> f64 {
        let (wn, wp) = (self.nfa.omega(), self.pfa.omega());
        let (tn, tp) = (self.nfa.tau(), self.pfa.tau());
        let s = self.s.to_dense();
        let rows = (0..self.n).map(|i| {
            let self_coupling: f64 = s.row(i).iter().map(|x| x.abs()).sum();
            let cross: f64 = self.sk.row(i).iter().map(|x| x.abs()).sum();
            wn * self.g_ti * self_coupling + 1.0 / tn + wn * cross
        });
        let cols = (0..self.m).map(|j| {
            wp * self.sense.row(j).iter().map(|x| x.abs()).sum::<f64>() + 1.0 / tp
        });
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// 1/50 of the shortest period allowed by the Gershgorin bound.
    pub fn default_dt(&self) -> f64 {
        2.0 * std::f64::consts::PI / (STEPS_PER_PERIOD * self.gershgorin_bound())
    }

    fn derivative(&self, x: &[f64], dx: &mut [f64], scratch: &mut [f64]) {
        let (n, m) = (self.n, self.m);
        let (u, v) = x.split_at(n);
        let (du, dv) = dx.split_at_mut(n);
        let (wn, wp) = (self.nfa.omega(), self.pfa.omega());
        let (tn, tp) = (self.nfa.tau(), self.pfa.tau());
        self.s.mul_vec(u, scratch);
        for i in 0..n {
            let e = self.g_ti * scratch[i]
                + self.si[i]
                + self.sk.row(i).iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            du[i] = -wn * e - u[i] / tn;
        }
        for j in 0..m {
            let f: f64 = self.sense.row(j).iter().zip(u).map(|(a, b)| a * b).sum();
            dv[j] = wp * f - v[j] / tp;
        }
    }

    /// Integrates from the zero state with RK4; amplifier outputs are
    /// saturated at their clamps after every step.
    pub fn transient(&self, opts: &TransientOptions) -> Result<TransientResult> {
        if !(opts.settle_band > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "settle band {} must be positive",
                opts.settle_band
            )));
        }
        let dt = opts.dt.unwrap_or_else(|| self.default_dt());
        let t_end = match opts.t_end {
            Some(t) => t,
            None => {
                let spec = self.spectrum()?;
                if !spec.is_stable() {
                    return Err(Error::Unstable {
                        time: 0.0,
                        norm: spec.max_real(),
                    });
                }
                WINDOW_TIME_CONSTANTS / spec.min_real_magnitude
            }
        };
        let steps = step_schedule(dt, t_end)?;
        let (n, m) = (self.n, self.m);
        let limit = DIVERGENCE_FACTOR
            * self
                .nfa
                .clamp
                .unwrap_or(1.0)
                .max(self.pfa.clamp.unwrap_or(1.0));

        let mut x = vec![0.0; n + m];
        let mut scratch = vec![0.0; n];
        let mut rk = Rk4::new(n + m);
        let mut clamped_rows = vec![false; n];
        let mut clamped_cols = vec![false; m];
        let mut history = Vec::with_capacity((steps.len() + 1) * m);
        let mut active = Vec::with_capacity(steps.len() + 1);
        let mut times = Vec::with_capacity(steps.len() + 1);
        history.extend_from_slice(&x[n..]);
        active.push(false);
        times.push(0.0);
        let mut t = 0.0;
        let mut f = |x: &[f64], dx: &mut [f64]| self.derivative(x, dx, &mut scratch);
        for h in &steps {
            rk.step(&mut f, &mut x, *h);
            t += h;
            let mut hit = saturate(&mut x[..n], self.nfa.clamp, &mut clamped_rows);
            hit |= saturate(&mut x[n..], self.pfa.clamp, &mut clamped_cols);
            let norm = x.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if !norm.is_finite() || norm > limit {
                return Err(Error::Unstable { time: t, norm });
            }
            history.extend_from_slice(&x[n..]);
            active.push(hit);
            times.push(t);
        }

        let final_v = DenseVector::from(x[n..].to_vec());
        let final_u = DenseVector::from(x[..n].to_vec());
        let tol = opts.settle_band * final_v.norm_inf();
        let last_out = (0..times.len()).rev().find(|&k| {
            history[k * m..(k + 1) * m]
                .iter()
                .zip(final_v.iter())
                .any(|(a, b)| (a - b).abs() > tol)
        });
        let settle_time = match last_out {
            Some(k) if k + 1 < times.len() => times[k + 1],
            Some(_) => t,
            None => 0.0,
        };
        let settled = settle_time <= SETTLED_FRACTION * t_end;
        if !settled {
            log::info!("transient did not settle: {settle_time:.3e} s of a {t_end:.3e} s window");
        }

        let stride = times.len().div_ceil(opts.max_trace_points.max(2)).max(1);
        let mut keep: Vec<usize> = (0..times.len()).step_by(stride).collect();
        if keep.last() != Some(&(times.len() - 1)) {
            keep.push(times.len() - 1);
        }
        Ok(TransientResult {
            times: keep.iter().map(|&k| times[k]).collect(),
            trace: keep
                .iter()
                .map(|&k| DenseVector::from(history[k * m..(k + 1) * m].to_vec()))
                .collect(),
            clamp_active: keep.iter().map(|&k| active[k]).collect(),
            settle_time,
            settle_band: opts.settle_band,
            settled,
            clamped_rows,
            clamped_cols,
            final_v,
            final_u,
            dt,
            t_end,
            steps: steps.len(),
        })
    }
}

fn saturate(x: &mut [f64], clamp: Option<f64>, flags: &mut [bool]) -> bool {
    let Some(c) = clamp else { return false };
    let mut hit = false;
    for (v, flag) in x.iter_mut().zip(flags.iter_mut()) {
        if v.abs() >= c {
            *v = v.clamp(-c, c);
            *flag = true;
            hit = true;
        }
    }
    hit
}

/// Writes `re, im` rows.
pub fn write_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["re", "im"])?;
    for z in &spectrum.eigenvalues {
        w.write_record([format!("{:e}", z.re), format!("{:e}", z.im)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{ConductanceLevelSet, DeviceModel};
    use crate::mapping::{map_to_conductance, ScalingPolicy};
    use crate::numerics::integrate_linear_ode;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn circuit(x: &DenseMatrix, y: &DenseVector) -> CrosspointCircuit {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mp = map_to_conductance(
            x,
            y,
            &ScalingPolicy::desk(x.cols()),
            &DeviceModel::ideal(ConductanceLevelSet::default()),
            &mut rng,
        )
        .unwrap();
        CrosspointCircuit::new(mp).unwrap()
    }

    fn line_problem() -> CrosspointCircuit {
        let x = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 2.0], [1.0, 3.0], [1.0, 4.0]]).unwrap();
        circuit(&x, &vec![0.3, 0.4, 0.5, 0.5].into())
    }

    #[test]
    fn scalar_loop_matches_hand_derived_matrix() {
        let c = circuit(&DenseMatrix::identity(1), &vec![0.5].into());
        let (a, b) = c.state_space().unwrap().matrix();
        let w = 2.0 * std::f64::consts::PI * 1e7;
        let tau = 1e5 / w;
        // S = 1/(G0 + G0): A = [[−ω/2 − 1/τ, −ω/2], [ω, −1/τ]].
        let expect = [[-w / 2.0 - 1.0 / tau, -w / 2.0], [w, -1.0 / tau]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(i, j)] - expect[i][j]).abs() < 1e-6 * w, "{i},{j}");
            }
        }
        // b_u = −ω · S · i = −ω · (−50 µA) / 200 µS.
        assert!((b[0] - w * 0.25).abs() < 1e-6 * w);
        assert_eq!(b[1], 0.0);
    }

    #[test]
    fn transient_reaches_operating_point() {
        let c = line_problem();
        let r = c.transient(&TransientOptions::default()).unwrap();
        let op = c.operating_point().unwrap();
        let err = r.final_v.sub(&op.v).unwrap().norm_inf() / op.v.norm_inf();
        assert!(err < 1e-3, "{err}");
        assert!(r.settled);
        assert!(r.settle_time > 0.0 && r.settle_time < r.t_end);
        assert!(!r.any_clamped());
    }

    #[test]
    fn rk4_path_agrees_with_generic_linear_integrator() {
        let c = line_problem().with_clamp(None).unwrap();
        let ss = c.state_space().unwrap();
        let (a, b) = ss.matrix();
        let dt = ss.default_dt();
        let t_end = 200.0 * dt;
        let r = ss
            .transient(&TransientOptions {
                t_end: Some(t_end),
                dt: Some(dt),
                ..Default::default()
            })
            .unwrap();
        let reference = integrate_linear_ode(&a, &b, &DenseVector::zeros(ss.dim()), dt, t_end).unwrap();
        let last = reference.last();
        for j in 0..2 {
            let d = (last[ss.dim() - 2 + j] - r.final_v[j]).abs();
            assert!(d < 1e-9 * r.final_v.norm_inf().max(1e-3), "{d} {:?}", r.final_v);
        }
    }

    #[test]
    fn clamp_caps_outputs() {
        // Target weights of ±1.5 V cannot be reached through 0.7 V clamps.
        let x = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]).unwrap();
        let c = circuit(&x, &vec![1.5, 3.0, 4.5].into());
        let r = c.transient(&TransientOptions::default()).unwrap();
        assert!(r.any_clamped());
        assert!(r.final_v.norm_inf() <= 0.7 + 1e-12);
        assert!(r.trace.iter().all(|v| v.norm_inf() <= 0.7 + 1e-12));
    }

    #[test]
    fn stable_and_trace_export() {
        let c = line_problem();
        let spec = c.stability_spectrum().unwrap();
        assert!(spec.is_stable());
        assert_eq!(spec.eigenvalues.len(), 6);
        let r = c.transient(&TransientOptions { max_trace_points: 50, ..Default::default() }).unwrap();
        assert!(r.trace.len() <= 52);
        assert_eq!(*r.times.last().unwrap(), r.times[r.times.len() - 1]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        r.write_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("time_s,v_1,v_2,clamped"));
        assert_eq!(text.lines().count(), r.times.len() + 1);
        let sp = dir.path().join("spectrum.csv");
        write_spectrum_csv(&spec, &sp).unwrap();
        assert_eq!(std::fs::read_to_string(sp).unwrap().lines().count(), 7);
    }

    #[test]
    fn invalid_step_is_rejected() {
        let c = line_problem();
        let err = c
            .transient(&TransientOptions { dt: Some(-1.0), t_end: Some(1e-6), ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::StepSizeInvalid { .. }));
    }

    #[test]
    fn oversized_step_diverges() {
        let c = line_problem().with_clamp(None).unwrap();
        let ss = c.state_space().unwrap();
        let dt = 100.0 * ss.default_dt();
        let err = ss
            .transient(&TransientOptions { dt: Some(dt), t_end: Some(1000.0 * dt), ..Default::default() })
            .unwrap_err();
        assert!(matches!(err, Error::Unstable { .. }), "{err}");
    }
}
