//! Least-squares and square solves.
//!
//! [`LeastSquares`] factors a column-equilibrated design matrix with
//! Householder QR, so the normal-equation product `XᵀX` is never formed. The
//! rank check compares a 1-norm condition estimate of `R` (squared, i.e. the
//! conditioning of `XᵀX`) against a configurable cap.

use rayon::prelude::*;

use super::matrix::{axpy, dot, DenseMatrix, DenseVector};
use crate::error::{Error, Result};

/// Default cap on the condition number of `XᵀX`.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

const PAR_COLUMNS: usize = 64;

/// Householder QR factorization of an equilibrated `N×M` matrix (`N ≥ M`).
#[derive(Clone, Debug)]
pub struct LeastSquares {
    n: usize,
    m: usize,
    /// Column-major storage: `R` on and above the diagonal, reflectors below.
    qr: Vec<f64>,
    tau: Vec<f64>,
    col_scale: Vec<f64>,
    condition: f64,
}

impl LeastSquares {
    pub fn factor(x: &DenseMatrix) -> Result<Self> {
        Self::factor_with_cap(x, DEFAULT_CONDITION_CAP)
    }

    pub fn factor_with_cap(x: &DenseMatrix, cap: f64) -> Result<Self> {
        let (n, m) = x.shape();
        if m == 0 || n < m {
            return Err(Error::dims(format!(
                "least squares needs N >= M >= 1, got {n}x{m}"
            )));
        }

        let mut qr = vec![0.0; n * m];
        let mut col_scale = vec![0.0; m];
        for j in 0..m {
            let col = &mut qr[j * n..(j + 1) * n];
            for (i, c) in col.iter_mut().enumerate() {
                *c = x[(i, j)];
            }
            let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::RankDeficient {
                    condition: f64::INFINITY,
                    cap,
                });
            }
            col_scale[j] = 1.0 / norm;
            col.iter_mut().for_each(|v| *v /= norm);
        }

        let mut tau = vec![0.0; m];
        for k in 0..m {
            let (head, tail) = qr.split_at_mut((k + 1) * n);
            let col_k = &mut head[k * n..];
            tau[k] = householder(&mut col_k[k..]);
            if tau[k] == 0.0 {
                continue;
            }
            let v = &col_k[k..];
            let t = tau[k];
            let apply = |col: &mut [f64]| apply_reflector(v, t, &mut col[k..]);
            if m - k > PAR_COLUMNS && n - k > PAR_COLUMNS {
                tail.par_chunks_mut(n).for_each(apply);
            } else {
                tail.chunks_mut(n).for_each(apply);
            }
        }

        let mut ls = Self {
            n,
            m,
            qr,
            tau,
            col_scale,
            condition: 0.0,
        };
        let diag_max = (0..m).fold(0.0_f64, |a, k| a.max(ls.r(k, k).abs()));
        let diag_min = (0..m).fold(f64::INFINITY, |a, k| a.min(ls.r(k, k).abs()));
        ls.condition = if diag_min <= diag_max * f64::EPSILON {
            f64::INFINITY
        } else {
            let c = ls.r_condition_1norm();
            c * c
        };
        if !(ls.condition <= cap) {
            return Err(Error::RankDeficient {
                condition: ls.condition,
                cap,
            });
        }
        Ok(ls)
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    /// Estimated 1-norm condition number of the equilibrated `XᵀX`.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, y: &DenseVector) -> Result<DenseVector> {
        if y.len() != self.n {
            return Err(Error::dims(format!(
                "right-hand side of length {} for {} rows",
                y.len(),
                self.n
            )));
        }
        let mut b = y.as_slice().to_vec();
        for k in 0..self.m {
            if self.tau[k] != 0.0 {
                apply_reflector(&self.qr[k * self.n + k..(k + 1) * self.n], self.tau[k], &mut b[k..]);
            }
        }
        let mut z = b[..self.m].to_vec();
        self.back_substitute(&mut z);
        for (zj, s) in z.iter_mut().zip(&self.col_scale) {
            *zj *= s;
        }
        DenseVector::new(z)
    }

    /// First `M` entries of `Qᵀ b`.
    pub fn apply_qt(&self, b: &[f64]) -> Result<DenseVector> {
        if b.len() != self.n {
            return Err(Error::dims(format!(
                "vector of length {} for {} rows",
                b.len(),
                self.n
            )));
        }
        let mut b = b.to_vec();
        for k in 0..self.m {
            if self.tau[k] != 0.0 {
                apply_reflector(&self.qr[k * self.n + k..(k + 1) * self.n], self.tau[k], &mut b[k..]);
            }
        }
        b.truncate(self.m);
        DenseVector::new(b)
    }

    /// `(Qᵀ A)[..M, ..]` for an `N×K` matrix `A`.
    pub fn apply_qt_matrix(&self, a: &DenseMatrix) -> Result<DenseMatrix> {
        if a.rows() != self.n {
            return Err(Error::dims(format!(
                "matrix with {} rows for {} rows",
                a.rows(),
                self.n
            )));
        }
        let cols: Vec<DenseVector> = (0..a.cols())
            .into_par_iter()
            .map(|j| self.apply_qt(a.column(j).as_slice()))
            .collect::<Result<_>>()?;
        Ok(DenseMatrix::from_fn(self.m, a.cols(), |i, j| cols[j][i]))
    }

    #[inline]
    fn r(&self, i: usize, j: usize) -> f64 {
        self.qr[j * self.n + i]
    }

    /// Solves `R z = b` in place.
    fn back_substitute(&self, b: &mut [f64]) {
        for i in (0..self.m).rev() {
            let mut s = b[i];
            for j in i + 1..self.m {
                s -= self.r(i, j) * b[j];
            }
            b[i] = s / self.r(i, i);
        }
    }

    /// Solves `Rᵀ z = b` in place.
    fn forward_substitute_transposed(&self, b: &mut [f64]) {
        for i in 0..self.m {
            let col = &self.qr[i * self.n..i * self.n + i];
            let s = b[i] - dot(col, &b[..i]);
            b[i] = s / self.r(i, i);
        }
    }

    /// Hager's estimator of `‖R‖₁ · ‖R⁻¹‖₁`.
    fn r_condition_1norm(&self) -> f64 {
        let m = self.m;
        let r_norm = (0..m)
            .map(|j| (0..=j).map(|i| self.r(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max);

        let mut x = vec![1.0 / m as f64; m];
        let mut estimate = 0.0;
        for _ in 0..5 {
            let mut y = x.clone();
            self.back_substitute(&mut y);
            estimate = y.iter().map(|v| v.abs()).sum::<f64>();
            let mut z: Vec<f64> = y.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
            self.forward_substitute_transposed(&mut z);
            let (jmax, zmax) = z
                .iter()
                .enumerate()
                .fold((0, 0.0), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
            if zmax <= dot(&z, &x) {
                break;
            }
            x.iter_mut().for_each(|v| *v = 0.0);
            x[jmax] = 1.0;
        }
        r_norm * estimate
    }
}

/// Overwrites `x` with the reflector (unit leading entry implied) and returns `tau`;
/// `x[0]` receives the resulting diagonal entry of `R`.
fn householder(x: &mut [f64]) -> f64 {
    let alpha = x[0];
    let tail_norm = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if tail_norm == 0.0 {
        return 0.0;
    }
    let r = -alpha.signum() * alpha.hypot(tail_norm);
    let tau = (r - alpha) / r;
    let scale = 1.0 / (alpha - r);
    x[1..].iter_mut().for_each(|v| *v *= scale);
    x[0] = r;
    tau
}

/// `col ← (I − tau·v·vᵀ) col`, with `v[0] = 1` implied.
#[inline]
fn apply_reflector(v: &[f64], tau: f64, col: &mut [f64]) {
    let s = tau * (col[0] + dot(&v[1..], &col[1..]));
    col[0] -= s;
    axpy(-s, &v[1..], &mut col[1..]);
}

/// Least-squares weights `w = X⁺y`.
pub fn pseudoinverse_solve(x: &DenseMatrix, y: &DenseVector) -> Result<DenseVector> {
    if x.rows() != y.len() {
        return Err(Error::dims(format!(
            "X has {} rows but y has length {}",
            x.rows(),
            y.len()
        )));
    }
    LeastSquares::factor(x)?.solve(y)
}

/// Residual `ε = Xw − y` and its squared norm.
pub fn residual_and_lse(
    x: &DenseMatrix,
    y: &DenseVector,
    w: &DenseVector,
) -> Result<(DenseVector, f64)> {
    if x.rows() != y.len() {
        return Err(Error::dims(format!(
            "X has {} rows but y has length {}",
            x.rows(),
            y.len()
        )));
    }
    let eps = x.matvec(w)?.sub(y)?;
    let lse = eps.norm_squared();
    Ok((eps, lse))
}

/// LU factorization with partial pivoting.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let (n, m) = a.shape();
        if n != m {
            return Err(Error::dims(format!("LU of non-square {n}x{m} matrix")));
        }
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax <= scale * f64::EPSILON * n as f64 || pmax == 0.0 {
                return Err(Error::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (upper, lower) = lu.split_at_mut((k + 1) * n);
            let row_k = &upper[k * n..];
            let eliminate = |row: &mut [f64]| {
                let f = row[k] / pivot;
                row[k] = f;
                if f != 0.0 {
                    axpy(-f, &row_k[k + 1..], &mut row[k + 1..]);
                }
            };
            if n - k > PAR_COLUMNS {
                lower.par_chunks_mut(n).for_each(eliminate);
            } else {
                lower.chunks_mut(n).for_each(eliminate);
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &DenseVector) -> Result<DenseVector> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::dims(format!(
                "right-hand side of length {} for {n}x{n} system",
                b.len()
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s = dot(&self.lu[i * n..i * n + i], &x[..i]);
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s = dot(&self.lu[i * n + i + 1..(i + 1) * n], &x[i + 1..]);
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        DenseVector::new(x)
    }

    pub fn inverse(&self) -> Result<DenseMatrix> {
        let n = self.n;
        let mut inv = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = DenseVector::zeros(n);
            e[j] = 1.0;
            let col = self.solve(&e)?;
            inv.set_column(j, col.as_slice());
        }
        Ok(inv)
    }
}

pub fn solve_square(a: &DenseMatrix, b: &DenseVector) -> Result<DenseVector> {
    Lu::factor(a)?.solve(b)
}
