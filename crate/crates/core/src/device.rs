//! Analog RRAM conductance model: a discrete level ladder with one deep
//! high-resistance state, Gaussian programming variation, and a program/verify
//! loop that matches the paired arrays.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `num_uniform_levels` evenly spaced levels `k·ΔG` (k = 1..n, ΔG = g_max/n)
/// plus a deep HRS at `g_max / ratio`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConductanceLevelSet {
    pub g_max: f64,
    pub num_uniform_levels: usize,
    pub ratio: f64,
}

impl Default for ConductanceLevelSet {
    fn default() -> Self {
        Self {
            g_max: 1e-3,
            num_uniform_levels: 31,
            ratio: 1e3,
        }
    }
}

impl ConductanceLevelSet {
    pub fn new(g_max: f64, num_uniform_levels: usize, ratio: f64) -> Result<Self> {
        let set = Self {
            g_max,
            num_uniform_levels,
            ratio,
        };
        set.validate()?;
        Ok(set)
    }

    /// 255 uniform levels plus HRS.
    pub fn eight_bit(g_max: f64) -> Self {
        Self {
            g_max,
            num_uniform_levels: 255,
            ratio: 1e3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_max > 0.0 && self.g_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("g_max = {}", self.g_max)));
        }
        if self.num_uniform_levels == 0 {
            return Err(Error::InvalidParameter("num_uniform_levels = 0".into()));
        }
        if !(self.ratio > 1.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!("ratio = {}", self.ratio)));
        }
        if self.hrs() >= self.delta_g() {
            return Err(Error::InvalidParameter(format!(
                "HRS {} S is not below the first uniform level {} S",
                self.hrs(),
                self.delta_g()
            )));
        }
        Ok(())
    }

    pub fn hrs(&self) -> f64 {
        self.g_max / self.ratio
    }

    pub fn delta_g(&self) -> f64 {
        self.g_max / self.num_uniform_levels as f64
    }

    /// All levels, ascending.
    pub fn levels(&self) -> Vec<f64> {
        let dg = self.delta_g();
        std::iter::once(self.hrs())
            .chain((1..=self.num_uniform_levels).map(|k| k as f64 * dg))
            .collect()
    }

    /// Nearest level to `g`; ties go to the larger level.
    pub fn quantize(&self, g: f64) -> Result<f64> {
        if g < 0.0 || g.is_nan() {
            return Err(Error::NegativeConductance(g));
        }
        let n = self.num_uniform_levels;
        let dg = self.delta_g();
        let k_lo = ((g / dg).floor() as usize).clamp(1, n);
        let k_hi = (k_lo + 1).min(n);
        let mut best = self.hrs();
        let mut best_d = (g - best).abs();
        for k in [k_lo, k_hi] {
            let level = k as f64 * dg;
            let d = (g - level).abs();
            if d < best_d || (d == best_d && level > best) {
                best = level;
                best_d = d;
            }
        }
        Ok(best)
    }
}

/// Programming variation expressed as a fraction of the level spacing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SigmaMode {
    #[default]
    #[serde(rename = "none")]
    None,
    #[serde(rename = "dg/6")]
    SixthDeltaG,
    #[serde(rename = "dg/4")]
    QuarterDeltaG,
    #[serde(rename = "dg/2")]
    HalfDeltaG,
}

impl SigmaMode {
    pub const ALL: [SigmaMode; 4] = [
        SigmaMode::None,
        SigmaMode::SixthDeltaG,
        SigmaMode::QuarterDeltaG,
        SigmaMode::HalfDeltaG,
    ];

    pub fn fraction(self) -> f64 {
        match self {
            SigmaMode::None => 0.0,
            SigmaMode::SixthDeltaG => 1.0 / 6.0,
            SigmaMode::QuarterDeltaG => 0.25,
            SigmaMode::HalfDeltaG => 0.5,
        }
    }

    pub fn sigma(self, levels: &ConductanceLevelSet) -> f64 {
        self.fraction() * levels.delta_g()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SigmaMode::None => "none",
            SigmaMode::SixthDeltaG => "dg/6",
            SigmaMode::QuarterDeltaG => "dg/4",
            SigmaMode::HalfDeltaG => "dg/2",
        }
    }
}

impl fmt::Display for SigmaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SigmaMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_lowercase()
            .replace("δg", "dg")
            .replace("deltag", "dg");
        match norm.as_str() {
            "none" | "0" => Ok(SigmaMode::None),
            "dg/6" => Ok(SigmaMode::SixthDeltaG),
            "dg/4" => Ok(SigmaMode::QuarterDeltaG),
            "dg/2" => Ok(SigmaMode::HalfDeltaG),
            _ => Err(Error::UnknownSigmaMode(s.to_string())),
        }
    }
}

/// `level + N(0, σ)`, floored at `hrs / 10`.
pub fn perturb<R: Rng + ?Sized>(
    level: f64,
    sigma_mode: SigmaMode,
    levels: &ConductanceLevelSet,
    rng: &mut R,
) -> f64 {
    if sigma_mode == SigmaMode::None {
        return level;
    }
    let sigma = sigma_mode.sigma(levels);
    let sample = Normal::new(level, sigma)
        .expect("sigma is positive and finite")
        .sample(rng);
    sample.max(levels.hrs() / 10.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceInstance {
    pub target: f64,
    pub programmed: f64,
    pub sigma_mode: SigmaMode,
}

/// Everything needed to program one device.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceModel {
    pub levels: ConductanceLevelSet,
    /// Snap targets to the level ladder before variation is applied.
    pub quantize: bool,
    pub sigma_mode: SigmaMode,
    /// Relative left/right mismatch accepted by program/verify.
    pub pv_tolerance: f64,
    pub pv_max_retries: usize,
}

impl Default for DeviceModel {
    fn default() -> Self {
        Self {
            levels: ConductanceLevelSet::default(),
            quantize: true,
            sigma_mode: SigmaMode::None,
            pv_tolerance: 0.05,
            pv_max_retries: 100,
        }
    }
}

impl DeviceModel {
    /// Continuous conductances, no variation.
    pub fn ideal(levels: ConductanceLevelSet) -> Self {
        Self {
            levels,
            quantize: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.levels.validate()?;
        if !(self.pv_tolerance > 0.0 && self.pv_tolerance <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pv_tolerance = {} (expected 0 < tol <= 1)",
                self.pv_tolerance
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sigma_mode == SigmaMode::None
    }

    /// Conductance the device is aimed at before variation: the nearest level
    /// when quantizing, otherwise the target itself. Zero always maps to HRS.
    pub fn nominal(&self, target: f64) -> Result<f64> {
        if target < 0.0 || target.is_nan() {
            return Err(Error::NegativeConductance(target));
        }
        if self.quantize {
            self.levels.quantize(target)
        } else if target == 0.0 {
            Ok(self.levels.hrs())
        } else {
            Ok(target)
        }
    }

    pub fn program<R: Rng + ?Sized>(&self, target: f64, rng: &mut R) -> Result<DeviceInstance> {
        let nominal = self.nominal(target)?;
        Ok(DeviceInstance {
            target,
            programmed: perturb(nominal, self.sigma_mode, &self.levels, rng),
            sigma_mode: self.sigma_mode,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProgrammedPair {
    pub left: DeviceInstance,
    pub right: DeviceInstance,
    pub attempts: usize,
    /// Retry cap exhausted; the best pair found is returned.
    pub mismatch_warning: bool,
}

impl ProgrammedPair {
    pub fn mismatch(&self) -> f64 {
        relative_mismatch(self.left.programmed, self.right.programmed)
    }
}

pub fn relative_mismatch(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Programs the left device once, then re-programs the right device until the
/// pair agrees within `model.pv_tolerance` or the retry cap runs out.
pub fn program_verify_pair<R: Rng + ?Sized>(
    target: f64,
    model: &DeviceModel,
    rng: &mut R,
) -> Result<ProgrammedPair> {
    let left = model.program(target, rng)?;
    if model.is_noiseless() {
        return Ok(ProgrammedPair {
            left,
            right: left,
            attempts: 1,
            mismatch_warning: false,
        });
    }
    let mut best = model.program(target, rng)?;
    let mut best_err = relative_mismatch(left.programmed, best.programmed);
    let mut attempts = 1;
    while best_err > model.pv_tolerance && attempts <= model.pv_max_retries {
        let right = model.program(target, rng)?;
        attempts += 1;
        let err = relative_mismatch(left.programmed, right.programmed);
        if err < best_err {
            best = right;
            best_err = err;
        }
    }
    Ok(ProgrammedPair {
        left,
        right: best,
        attempts,
        mismatch_warning: best_err > model.pv_tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const US: f64 = 1e-6;

    #[test]
    fn level_set_invariants() {
        let l = ConductanceLevelSet::default();
        let levels = l.levels();
        assert_eq!(levels.len(), 32);
        assert!(levels.windows(2).all(|w| w[0] < w[1]));
        assert!((l.g_max / l.hrs() - 1e3).abs() < 1e-9);
        assert!((levels[31] - l.g_max).abs() < 1e-18);
        assert!((l.delta_g() - l.g_max / 31.0).abs() < 1e-18);
        assert!(ConductanceLevelSet::new(1e-3, 31, 10.0).is_err());
        assert!(ConductanceLevelSet::new(-1.0, 31, 1e3).is_err());
    }

    #[test]
    fn quantize_examples() {
        let l = ConductanceLevelSet::default();
        assert!((l.quantize(0.0).unwrap() - 1.0 * US).abs() < 1e-15);
        assert_eq!(l.quantize(l.g_max).unwrap(), l.g_max);
        // Brute-force argmin over all 32 levels.
        let g = 100.0 * US;
        let brute = l
            .levels()
            .into_iter()
            .min_by(|a, b| (g - a).abs().total_cmp(&(g - b).abs()))
            .unwrap();
        let q = l.quantize(g).unwrap();
        assert_eq!(q, brute);
        assert!((q - 3.0 * 1000.0 / 31.0 * US).abs() < 1e-12);
        assert!((q / US - 96.774).abs() < 1e-3);
        assert!(matches!(l.quantize(-1e-9), Err(Error::NegativeConductance(_))));
    }

    #[test]
    fn quantize_tie_goes_up() {
        let l = ConductanceLevelSet::new(31.0, 31, 1e3).unwrap();
        assert_eq!(l.quantize(2.5).unwrap(), 3.0);
        let l = ConductanceLevelSet::new(31.0, 31, 62.0).unwrap();
        assert_eq!(l.hrs(), 0.5);
        assert_eq!(l.quantize(0.75).unwrap(), 1.0);
    }

    #[test]
    fn sigma_mode_parsing() {
        assert_eq!("dg/6".parse::<SigmaMode>().unwrap(), SigmaMode::SixthDeltaG);
        assert_eq!("ΔG/2".parse::<SigmaMode>().unwrap(), SigmaMode::HalfDeltaG);
        assert_eq!("none".parse::<SigmaMode>().unwrap(), SigmaMode::None);
        assert!(matches!(
            "dg/3".parse::<SigmaMode>(),
            Err(Error::UnknownSigmaMode(_))
        ));
    }

    #[test]
    fn perturb_none_is_identity_and_seeded_is_reproducible() {
        let l = ConductanceLevelSet::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(perturb(l.g_max, SigmaMode::None, &l, &mut rng), l.g_max);
        let a: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..5).map(|_| perturb(l.g_max / 2.0, SigmaMode::HalfDeltaG, &l, &mut r)).collect()
        };
        let b: Vec<f64> = {
            let mut r = ChaCha8Rng::seed_from_u64(9);
            (0..5).map(|_| perturb(l.g_max / 2.0, SigmaMode::HalfDeltaG, &l, &mut r)).collect()
        };
        assert_eq!(a, b);
        for _ in 0..1000 {
            assert!(perturb(l.hrs(), SigmaMode::HalfDeltaG, &l, &mut rng) >= l.hrs() / 10.0);
        }
    }

    #[test]
    fn perturb_statistics() {
        let l = ConductanceLevelSet::default();
        let level = 16.0 * l.delta_g();
        let n = 100_000;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let s: Vec<f64> = (0..n).map(|_| perturb(level, SigmaMode::SixthDeltaG, &l, &mut rng)).collect();
        let mean = s.iter().sum::<f64>() / n as f64;
        let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((sd / (l.delta_g() / 6.0) - 1.0).abs() < 0.02, "sd ratio {}", sd / (l.delta_g() / 6.0));

        let s: Vec<f64> = (0..n).map(|_| perturb(level, SigmaMode::HalfDeltaG, &l, &mut rng)).collect();
        let mean = s.iter().sum::<f64>() / n as f64;
        assert!((mean / level - 1.0).abs() < 0.005);
    }

    #[test]
    fn program_verify_noiseless_pair_is_exact() {
        let m = DeviceModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = program_verify_pair(100e-6, &m, &mut rng).unwrap();
        assert_eq!(p.left.programmed, p.right.programmed);
        assert_eq!(p.left.programmed, m.levels.quantize(100e-6).unwrap());
        assert_eq!(p.mismatch(), 0.0);
        assert!(!p.mismatch_warning);
    }

    #[test]
    fn program_verify_meets_tolerance() {
        let m = DeviceModel {
            sigma_mode: SigmaMode::SixthDeltaG,
            ..DeviceModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let mut ok = 0;
        for _ in 0..trials {
            let target = rng.random_range(0.0..m.levels.g_max);
            let p = program_verify_pair(target, &m, &mut rng).unwrap();
            if p.mismatch() <= 0.05 {
                ok += 1;
            }
            assert_eq!(p.mismatch() <= 0.05, !p.mismatch_warning);
        }
        assert!(ok as f64 >= 0.99 * trials as f64, "{ok}/{trials}");
    }

    #[test]
    fn vacuous_tolerance_accepts_first_draw() {
        let m = DeviceModel {
            sigma_mode: SigmaMode::HalfDeltaG,
            pv_tolerance: 1.0,
            ..DeviceModel::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = program_verify_pair(5e-4, &m, &mut rng).unwrap();
            assert_eq!(p.attempts, 1);
        }
    }
}
