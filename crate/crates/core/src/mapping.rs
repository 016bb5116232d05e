//! Translation of learning problems into circuit quantities.
//!
//! Matrix entries become conductances `X_ij · c_j · g_unit`, targets become
//! injected currents `−y · s · i_unit`, and the circuit's output voltages map
//! back to weights through [`ScalingPolicy::unscale_weights`].

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::device::{program_verify_pair, relative_mismatch, DeviceModel};
use crate::error::{Error, Result};
use crate::numerics::{DenseMatrix, DenseVector, LeastSquares};

pub const MICRO: f64 = 1e-6;

/// Fraction of `g_max` that the largest entry of each column is mapped to.
pub const DEFAULT_COLUMN_FILL: f64 = 0.8;
/// Largest amplifier output voltage the output scaling aims for.
pub const DEFAULT_HEADROOM_V: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPolicy {
    /// Conductance per matrix unit (S).
    pub g_unit: f64,
    /// Current per target unit (A).
    pub i_unit: f64,
    pub column_scales: Vec<f64>,
    pub y_scale: f64,
}

impl ScalingPolicy {
    /// Unit column and output scales with the given conductance/current units.
    pub fn identity(cols: usize, g_unit: f64, i_unit: f64) -> Self {
        Self {
            g_unit,
            i_unit,
            column_scales: vec![1.0; cols],
            y_scale: 1.0,
        }
    }

    /// 100 µS / 100 µA units.
    pub fn desk(cols: usize) -> Self {
        Self::identity(cols, 1e-4, 1e-4)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !ok(self.g_unit) || !ok(self.i_unit) || !ok(self.y_scale) {
            return Err(Error::InvalidParameter(format!(
                "scaling factors must be positive: g_unit {}, i_unit {}, y_scale {}",
                self.g_unit, self.i_unit, self.y_scale
            )));
        }
        if let Some(j) = self.column_scales.iter().position(|c| !ok(*c)) {
            return Err(Error::InvalidParameter(format!(
                "column scale {j} = {}",
                self.column_scales[j]
            )));
        }
        Ok(())
    }

    /// Scales each column so its largest entry lands at `fill · g_max`.
    pub fn fit_columns(mut self, x: &DenseMatrix, g_max: f64, fill: f64) -> Self {
        self.column_scales = (0..x.cols())
            .map(|j| {
                let peak = (0..x.rows()).fold(0.0_f64, |m, i| m.max(x[(i, j)].abs()));
                if peak > 0.0 {
                    fill * g_max / (self.g_unit * peak)
                } else {
                    1.0
                }
            })
            .collect();
        self
    }

    /// Chooses `y_scale ≤ 1` so that every amplifier output of the ideal
    /// solution (weights on the PFAs, residuals on the TIAs) stays within
    /// `headroom` volts, for every target vector in `targets`.
    pub fn fit_output(
        mut self,
        x: &DenseMatrix,
        targets: &[&DenseVector],
        g_ti: f64,
        headroom: f64,
    ) -> Result<Self> {
        let scaled = self.scale_matrix(x)?;
        let ls = LeastSquares::factor(&scaled)?;
        let mut peak = 0.0_f64;
        for y in targets {
            let w = ls.solve(y)?;
            let r = scaled.matvec(&w)?.sub(y)?;
            peak = peak
                .max(w.norm_inf() * self.i_unit / self.g_unit)
                .max(r.norm_inf() * self.i_unit / g_ti);
        }
        self.y_scale = if peak > headroom { headroom / peak } else { 1.0 };
        Ok(self)
    }

    pub fn scale_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.column_scales.len() {
            return Err(Error::dims(format!(
                "{} columns but {} column scales",
                x.cols(),
                self.column_scales.len()
            )));
        }
        Ok(DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
            x[(i, j)] * self.column_scales[j]
        }))
    }

    pub fn unscale_matrix(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        if x.cols() != self.column_scales.len() {
            return Err(Error::dims(format!(
                "{} columns but {} column scales",
                x.cols(),
                self.column_scales.len()
            )));
        }
        Ok(DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| {
            x[(i, j)] / self.column_scales[j]
        }))
    }

    /// Output voltages (V) to weights in problem units.
    pub fn unscale_weights(&self, v: &DenseVector) -> Result<DenseVector> {
        if v.len() != self.column_scales.len() {
            return Err(Error::dims(format!(
                "{} voltages for {} columns",
                v.len(),
                self.column_scales.len()
            )));
        }
        let k = self.g_unit / (self.i_unit * self.y_scale);
        DenseVector::new(
            v.iter()
                .zip(&self.column_scales)
                .map(|(v, c)| v * c * k)
                .collect(),
        )
    }

    /// A measured current (A) back to target units.
    pub fn unscale_current(&self, current: f64) -> f64 {
        current / (self.i_unit * self.y_scale)
    }
}

/// Design matrix with an optional leading all-ones column followed by the
/// powers `x, x², …, x^degree` of every coordinate (grouped by power).
pub fn build_design_matrix<S: AsRef<[f64]>>(xs: &[S], degree: usize, include_bias: bool) -> Result<DenseMatrix> {
    let first = xs.first().ok_or(Error::EmptyDataset)?;
    let d = first.as_ref().len();
    if degree == 0 {
        return Err(Error::InvalidParameter("polynomial degree must be at least 1".into()));
    }
    for (index, x) in xs.iter().enumerate() {
        if x.as_ref().len() != d {
            return Err(Error::InconsistentDimensions {
                index,
                expected: d,
                found: x.as_ref().len(),
            });
        }
    }
    let bias = usize::from(include_bias);
    let cols = bias + d * degree;
    if cols == 0 {
        return Err(Error::EmptyDataset);
    }
    Ok(DenseMatrix::from_fn(xs.len(), cols, |i, j| {
        if j < bias {
            return 1.0;
        }
        let k = j - bias;
        xs[i].as_ref()[k % d].powi((k / d + 1) as i32)
    }))
}

/// Serializable recipe for a [`ScalingPolicy`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub g_unit: f64,
    pub i_unit: f64,
    /// Map each column's largest entry to this fraction of `g_max`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub column_fill: Option<f64>,
    /// Shrink the targets so the ideal amplifier outputs stay below this
    /// voltage. Absent in a serialized config means no headroom scaling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub headroom_v: Option<f64>,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            g_unit: 1e-4,
            i_unit: 1e-4,
            column_fill: None,
            headroom_v: Some(DEFAULT_HEADROOM_V),
        }
    }
}

impl ScalingConfig {
    /// Unit scales only.
    pub fn fixed(g_unit: f64, i_unit: f64) -> Self {
        Self {
            g_unit,
            i_unit,
            column_fill: None,
            headroom_v: None,
        }
    }

    /// Column fill at 80 % of `g_max` plus output headroom.
    pub fn fill_columns(g_unit: f64, i_unit: f64) -> Self {
        Self {
            g_unit,
            i_unit,
            column_fill: Some(DEFAULT_COLUMN_FILL),
            headroom_v: Some(DEFAULT_HEADROOM_V),
        }
    }

    /// Builds the policy for a nonnegative matrix and its target vectors.
    pub fn policy(&self, x: &DenseMatrix, targets: &[&DenseVector], g_max: f64, g_ti: f64) -> Result<ScalingPolicy> {
        let mut p = ScalingPolicy::identity(x.cols(), self.g_unit, self.i_unit);
        p.validate()?;
        if let Some(fill) = self.column_fill {
            if !(fill > 0.0 && fill <= 1.0) {
                return Err(Error::InvalidParameter(format!("column fill {fill} must lie in (0, 1]")));
            }
            p = p.fit_columns(x, g_max, fill);
        }
        if let Some(h) = self.headroom_v {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter(format!("headroom {h} V must be positive")));
            }
            p = p.fit_output(x, targets, g_ti, h)?;
        }
        Ok(p)
    }
}

/// Shifts each column with negative entries so its minimum becomes zero.
/// Returns the translated matrix and the per-column offsets.
pub fn translate_nonnegative(x: &DenseMatrix) -> (DenseMatrix, DenseVector) {
    let offset: Vec<f64> = (0..x.cols())
        .map(|j| {
            let min = (0..x.rows()).fold(f64::INFINITY, |m, i| m.min(x[(i, j)]));
            (-min).max(0.0)
        })
        .collect();
    let shifted = DenseMatrix::from_fn(x.rows(), x.cols(), |i, j| x[(i, j)] + offset[j]);
    (shifted, offset.into())
}

/// Index of the first all-ones column.
pub fn bias_column(x: &DenseMatrix) -> Option<usize> {
    (0..x.cols()).find(|&j| (0..x.rows()).all(|i| x[(i, j)] == 1.0))
}

/// Re-expresses weights fitted on translated features in original
/// coordinates by folding the shift into the intercept.
pub fn untranslate_weights(
    w: &DenseVector,
    offset: &DenseVector,
    bias: Option<usize>,
) -> Result<DenseVector> {
    if w.len() != offset.len() {
        return Err(Error::dims(format!(
            "{} weights for {} offsets",
            w.len(),
            offset.len()
        )));
    }
    let shift: f64 = w.iter().zip(offset.iter()).map(|(a, b)| a * b).sum();
    if shift == 0.0 {
        return Ok(w.clone());
    }
    let b = bias.ok_or_else(|| {
        Error::InvalidParameter(
            "translated features need an all-ones intercept column to absorb the shift".into(),
        )
    })?;
    let mut out = w.clone();
    out[b] += shift;
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct MappedProblem {
    pub g_left: DenseMatrix,
    pub g_right: DenseMatrix,
    /// Currents injected at the TIA inputs (A).
    pub input_currents: DenseVector,
    pub policy: ScalingPolicy,
    /// Per-column translation applied before mapping.
    pub offset: DenseVector,
    pub device: DeviceModel,
    /// All-ones column of the source matrix, which absorbs translation offsets.
    pub bias: Option<usize>,
    /// Device pairs whose program/verify loop hit the retry cap.
    pub mismatch_warnings: usize,
}

impl MappedProblem {
    pub fn rows(&self) -> usize {
        self.g_left.rows()
    }

    pub fn cols(&self) -> usize {
        self.g_left.cols()
    }

    pub fn max_mismatch(&self) -> f64 {
        self.g_left
            .as_slice()
            .iter()
            .zip(self.g_right.as_slice())
            .map(|(a, b)| relative_mismatch(*a, *b))
            .fold(0.0, f64::max)
    }

    /// Circuit output voltages to weights in the original problem coordinates.
    pub fn weights_from_voltages(&self, v: &DenseVector) -> Result<DenseVector> {
        let w = self.policy.unscale_weights(v)?;
        untranslate_weights(&w, &self.offset, self.bias)
    }

    /// Replaces the target currents, keeping the programmed arrays.
    pub fn with_targets(&self, y: &DenseVector) -> Result<MappedProblem> {
        if y.len() != self.rows() {
            return Err(Error::dims(format!(
                "{} targets for {} rows",
                y.len(),
                self.rows()
            )));
        }
        let mut out = self.clone();
        out.input_currents = target_currents(y, &self.policy);
        Ok(out)
    }

    /// Sets `g_right = g_left · (1 + u)`, `u ~ U(−max_rel, max_rel)` per device.
    pub fn inject_mismatch<R: Rng + ?Sized>(&mut self, max_rel: f64, rng: &mut R) {
        let (n, m) = self.g_left.shape();
        for i in 0..n {
            for j in 0..m {
                let u: f64 = rng.random_range(-max_rel..=max_rel);
                self.g_right[(i, j)] = self.g_left[(i, j)] * (1.0 + u);
            }
        }
    }

    /// Long-format CSV: `quantity,row,col,value` with conductances in siemens
    /// and currents in amperes.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["quantity", "row", "col", "value"])?;
        for (name, g) in [("g_left", &self.g_left), ("g_right", &self.g_right)] {
            for i in 0..g.rows() {
                for j in 0..g.cols() {
                    w.write_record([
                        name.to_string(),
                        i.to_string(),
                        j.to_string(),
                        format!("{:e}", g[(i, j)]),
                    ])?;
                }
            }
        }
        for (i, c) in self.input_currents.iter().enumerate() {
            w.write_record([
                "input_current".to_string(),
                i.to_string(),
                String::new(),
                format!("{c:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn target_currents(y: &DenseVector, policy: &ScalingPolicy) -> DenseVector {
    y.scaled(-policy.y_scale * policy.i_unit)
}

/// Programs both arrays from a nonnegative `x` and converts `y` to input
/// currents.
pub fn map_to_conductance<R: Rng + ?Sized>(
    x: &DenseMatrix,
    y: &DenseVector,
    policy: &ScalingPolicy,
    device: &DeviceModel,
    rng: &mut R,
) -> Result<MappedProblem> {
    let (n, m) = x.shape();
    if y.len() != n {
        return Err(Error::dims(format!("{n} rows but {} targets", y.len())));
    }
    policy.validate()?;
    device.validate()?;
    let targets = conductance_targets(x, policy, device)?;
    let mut g_left = DenseMatrix::zeros(n, m);
    let mut g_right = DenseMatrix::zeros(n, m);
    let mut mismatch_warnings = 0;
    for i in 0..n {
        for j in 0..m {
            let pair = program_verify_pair(targets[(i, j)], device, rng)?;
            g_left[(i, j)] = pair.left.programmed;
            g_right[(i, j)] = pair.right.programmed;
            mismatch_warnings += usize::from(pair.mismatch_warning);
        }
    }
    if mismatch_warnings > 0 {
        log::warn!("{mismatch_warnings} device pairs exceeded the program/verify tolerance");
    }
    Ok(MappedProblem {
        g_left,
        g_right,
        input_currents: target_currents(y, policy),
        policy: policy.clone(),
        offset: DenseVector::zeros(m),
        device: *device,
        bias: bias_column(x),
        mismatch_warnings,
    })
}

/// Translates `x` to nonnegative values, then maps it.
pub fn map_translated<R: Rng + ?Sized>(
    x: &DenseMatrix,
    y: &DenseVector,
    policy: &ScalingPolicy,
    device: &DeviceModel,
    rng: &mut R,
) -> Result<MappedProblem> {
    let (shifted, offset) = translate_nonnegative(x);
    let mut mapped = map_to_conductance(&shifted, y, policy, device, rng)?;
    mapped.offset = offset;
    Ok(mapped)
}

/// Target conductance of every device, checked against the programmable range.
pub fn conductance_targets(
    x: &DenseMatrix,
    policy: &ScalingPolicy,
    device: &DeviceModel,
) -> Result<DenseMatrix> {
    let (n, m) = x.shape();
    if policy.column_scales.len() != m {
        return Err(Error::dims(format!(
            "{m} columns but {} column scales",
            policy.column_scales.len()
        )));
    }
    let mut out = DenseMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = checked_target(x[(i, j)], j, policy, device).map_err(|e| at_row(e, i))?;
        }
    }
    Ok(out)
}

fn checked_target(value: f64, col: usize, policy: &ScalingPolicy, device: &DeviceModel) -> Result<f64> {
    let levels = &device.levels;
    let g = value * policy.column_scales[col] * policy.g_unit;
    // Below-HRS values are representable only when they get snapped to a level.
    let too_small = g > 0.0 && g < levels.hrs() && !device.quantize;
    if !(g >= 0.0) || g > levels.g_max * (1.0 + 1e-9) || too_small {
        return Err(Error::ConductanceOutOfRange {
            row: 0,
            col,
            value: g,
            min: levels.hrs(),
            max: levels.g_max,
        });
    }
    Ok(g)
}

fn at_row(e: Error, i: usize) -> Error {
    match e {
        Error::ConductanceOutOfRange { col, value, min, max, .. } => Error::ConductanceOutOfRange {
            row: i,
            col,
            value,
            min,
            max,
        },
        other => other,
    }
}

/// Nominal (noise-free) conductances of one extra row holding the raw
/// coordinates `x`, translated by `offset` and scaled like the array columns.
pub fn map_row(
    x: &DenseVector,
    offset: &DenseVector,
    policy: &ScalingPolicy,
    device: &DeviceModel,
) -> Result<DenseVector> {
    let m = policy.column_scales.len();
    if x.len() != m || offset.len() != m {
        return Err(Error::dims(format!(
            "row of length {} for {m} columns (offset length {})",
            x.len(),
            offset.len()
        )));
    }
    let g = (0..m)
        .map(|j| {
            let target = checked_target(x[j] + offset[j], j, policy, device)?;
            device.nominal(target)
        })
        .collect::<Result<Vec<f64>>>()?;
    DenseVector::new(g)
}
