//! Cholesky factorization of symmetric positive definite band matrices.

use crate::error::{Error, Result};

/// Symmetric band matrix stored by rows: entry `(i, j)` with `i - bw ≤ j ≤ i`
/// lives at `data[i * (bw + 1) + bw - (i - j)]`.
#[derive(Clone, Debug)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + self.bw - (i - j)
    }

    /// Adds `value` to entry `(i, j)` (and implicitly `(j, i)`).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside band {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += value;
    }

    /// Adds a two-terminal conductance `g` between nodes `a` and `b`.
    pub fn stamp(&mut self, a: usize, b: usize, g: f64) {
        self.add(a, a, g);
        self.add(b, b, g);
        self.add(a, b, -g);
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    pub fn cholesky(mut self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut s = self.data[self.idx(i, j)];
                for k in k0..j {
                    s -= self.data[self.idx(i, k)] * self.data[self.idx(j, k)];
                }
                let at = self.idx(i, j);
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::Singular(i));
                    }
                    self.data[at] = s.sqrt();
                } else {
                    self.data[at] = s / self.data[self.idx(j, j)];
                }
            }
        }
        Ok(BandedCholesky { l: self })
    }
}

#[derive(Clone, Debug)]
pub struct BandedCholesky {
    l: BandedSpd,
}

impl BandedCholesky {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.data[l.idx(i, k)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..(i + bw + 1).min(n) {
                s -= l.data[l.idx(k, i)] * b[k];
            }
            b[i] = s / l.data[l.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{solve_square, DenseMatrix, DenseVector};

    #[test]
    fn matches_dense_solve_on_a_resistor_ladder() {
        let n = 9;
        let mut band = BandedSpd::zeros(n, 2);
        let mut dense = DenseMatrix::zeros(n, n);
        let mut stamp = |a: usize, b: usize, g: f64| {
            band.stamp(a, b, g);
            dense[(a, a)] += g;
            dense[(b, b)] += g;
            dense[(a, b)] -= g;
            dense[(b, a)] -= g;
        };
        for i in 0..n - 1 {
            stamp(i, i + 1, 1.0 + i as f64);
        }
        for i in 0..n - 2 {
            stamp(i, i + 2, 0.5);
        }
        band.add(0, 0, 2.0);
        dense[(0, 0)] += 2.0;
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let expected = solve_square(&dense, &DenseVector::from(rhs.clone())).unwrap();
        let mut got = rhs;
        band.cholesky().unwrap().solve_in_place(&mut got);
        for (a, b) in got.iter().zip(expected.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn floating_network_is_singular() {
        let mut band = BandedSpd::zeros(2, 1);
        band.stamp(0, 1, 1.0);
        assert!(band.cholesky().is_err());
    }
}
