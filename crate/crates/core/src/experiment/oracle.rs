use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::runs::derive_seed;
use crate::error::Result;
use crate::learn::CircuitBackend;
use crate::numerics::{eigenvalues, pseudoinverse_solve, DenseMatrix, DenseVector};

/// Largest accepted condition number of a generated problem.
const MAX_CONDITION: f64 = 1e3;

/// Random full-rank problem with `N ≤ 30`, `M ≤ 8`, nonnegative `X`.
pub fn random_problem(seed: u64) -> (DenseMatrix, DenseVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let m = rng.random_range(1..=8);
        let n = rng.random_range(m..=30);
        let x = DenseMatrix::from_fn(n, m, |_, _| rng.random_range(0.05..1.0));
        let y = DenseVector::from_fn(n, |_| rng.random_range(-1.0..1.0));
        if condition(&x) < MAX_CONDITION {
            return (x, y);
        }
    }
}

fn condition(x: &DenseMatrix) -> f64 {
    let Ok(s) = eigenvalues(&x.gram()) else {
        return f64::INFINITY;
    };
    let (lo, hi) = s
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| (lo.min(e.re), hi.max(e.re)));
    if lo > 0.0 {
        (hi / lo).sqrt()
    } else {
        f64::INFINITY
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleCheck {
    pub instances: usize,
    pub tolerance: f64,
    pub max_relative_error: f64,
    pub failures: usize,
}

impl OracleCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Noiseless circuit weights against the analytical solution on `count`
/// random problems; errors are `‖w − w⁺‖ / ‖w⁺‖`.
pub fn oracle_check(count: usize, seed: u64, tolerance: f64) -> Result<OracleCheck> {
    let errors = (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let s = derive_seed(seed, k);
            let (x, y) = random_problem(s);
            let w = CircuitBackend::ideal().build(&x, &[&y])?.weights()?;
            let o = pseudoinverse_solve(&x, &y)?;
            Ok(w.sub(&o)?.norm() / o.norm().max(f64::MIN_POSITIVE))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(OracleCheck {
        instances: count,
        tolerance,
        max_relative_error: errors.iter().copied().fold(0.0, f64::max),
        failures: errors.iter().filter(|e| !(**e <= tolerance)).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_check_passes() {
        let r = oracle_check(40, 5, 1e-6).unwrap();
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn problems_are_bounded() {
        for s in 0..50 {
            let (x, y) = random_problem(s);
            assert!(x.rows() <= 30 && x.cols() <= 8 && x.rows() >= x.cols());
            assert_eq!(y.len(), x.rows());
        }
    }
}
