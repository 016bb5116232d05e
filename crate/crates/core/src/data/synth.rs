use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mapping::build_design_matrix;
use crate::numerics::{DenseMatrix, DenseVector};

/// `X = [1 | x | x² | …]` on abscissas drawn uniformly from `[0, 5]`, with
/// `y = X w_true + N(0, noise_sd²)`. The polynomial degree is `len(w_true) − 1`.
pub fn synth_linear(n: usize, w_true: &DenseVector, noise_sd: f64, seed: u64) -> Result<(DenseMatrix, DenseVector)> {
    let m = w_true.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if n <= m {
        return Err(Error::InsufficientSamples { needed: m, got: n });
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::InvalidParameter(format!("noise sd {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<[f64; 1]> = (0..n).map(|_| [rng.random_range(0.0..=5.0)]).collect();
    let x = if m == 1 {
        DenseMatrix::from_fn(n, 1, |_, _| 1.0)
    } else {
        build_design_matrix(&xs, m - 1, true)?
    };
    let mut y = x.matvec(w_true)?;
    if noise_sd > 0.0 {
        let noise = Normal::new(0.0, noise_sd).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for v in y.as_mut_slice() {
            *v += noise.sample(&mut rng);
        }
    }
    Ok((x, y))
}

/// Two classes in the plane separated by a random line with a margin.
#[derive(Clone, Debug)]
pub struct SeparableSet {
    /// `[1, x₁, x₂]` rows.
    pub x: DenseMatrix,
    pub labels: Vec<u8>,
}

/// `n` points in `[0, 1]²`, labelled by a random line through the middle of
/// the square and kept only if they are at least `margin` away from it.
pub fn synth_separable(n: usize, margin: f64, seed: u64) -> Result<SeparableSet> {
    if n < 4 {
        return Err(Error::InsufficientSamples { needed: 3, got: n });
    }
    if !(0.0..0.25).contains(&margin) {
        return Err(Error::InvalidParameter(format!("margin {margin} must lie in [0, 0.25)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let (nx, ny) = (theta.cos(), theta.sin());
    let c = 0.5 * nx + 0.5 * ny + rng.random_range(-0.1..0.1);
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while pts.len() < n {
        let p: [f64; 2] = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        let d = p[0] * nx + p[1] * ny - c;
        if d.abs() < margin {
            continue;
        }
        let label = u8::from(d > 0.0);
        // Keep both classes represented.
        if pts.len() + 2 >= n && !labels.is_empty() && labels.iter().all(|l| *l == label) {
            continue;
        }
        pts.push(p);
        labels.push(label);
    }
    Ok(SeparableSet {
        x: build_design_matrix(&pts, 1, true)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::pseudoinverse_solve;

    #[test]
    fn noiseless_recovery_and_determinism() {
        let w: DenseVector = vec![0.3, 0.05].into();
        let (x, y) = synth_linear(6, &w, 0.0, 4).unwrap();
        let fit = pseudoinverse_solve(&x, &y).unwrap();
        assert!(fit.sub(&w).unwrap().norm_inf() < 1e-8);
        let (x2, y2) = synth_linear(6, &w, 0.0, 4).unwrap();
        assert_eq!((x, y), (x2, y2));
        // Same range as the six-point desk targets.
        let (_, y) = synth_linear(6, &w, 0.0, 4).unwrap();
        assert!(y.iter().all(|v| (0.3..=0.55).contains(v)));
        assert!(matches!(synth_linear(2, &w, 0.0, 0), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn polynomial_targets() {
        let w: DenseVector = vec![1.0, -0.5, 0.25].into();
        let (x, y) = synth_linear(10, &w, 0.1, 1).unwrap();
        assert_eq!(x.cols(), 3);
        assert_eq!(y.len(), 10);
        assert!((x[(0, 2)] - x[(0, 1)].powi(2)).abs() < 1e-15);
    }

    #[test]
    fn separable_sets_respect_margin() {
        for seed in 0..20 {
            let s = synth_separable(12, 0.05, seed).unwrap();
            assert_eq!(s.x.rows(), 12);
            assert!(s.labels.contains(&0) && s.labels.contains(&1), "seed {seed}");
        }
    }
}
