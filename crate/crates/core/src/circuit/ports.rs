//! Port-level view of the two resistive arrays.
//!
//! Each array is reduced to the admittance seen at its row and column
//! terminals. Without wires this is the familiar `diag(rowsum G)`, `−G`,
//! `diag(colsum G)` pattern; with per-segment wire resistance the internal
//! row/column nodes are eliminated exactly by a banded Cholesky solve.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{BandedSpd, DenseMatrix, Lu};

/// A symmetric admittance block that is diagonal unless wires couple it.
#[derive(Clone, Debug)]
pub(crate) enum Admittance {
    Diagonal(Vec<f64>),
    Dense(DenseMatrix),
}

impl Admittance {
    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Admittance::Diagonal(d) => DenseMatrix::from_diag(d),
            Admittance::Dense(m) => m.clone(),
        }
    }

    /// `(self + shift·I)⁻¹`.
    pub fn shifted_inverse(&self, shift: f64) -> Result<Admittance> {
        match self {
            Admittance::Diagonal(d) => Ok(Admittance::Diagonal(
                d.iter().map(|v| 1.0 / (v + shift)).collect(),
            )),
            Admittance::Dense(m) => {
                let mut a = m.clone();
                for i in 0..a.rows() {
                    a[(i, i)] += shift;
                }
                Ok(Admittance::Dense(Lu::factor(&a)?.inverse()?))
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Admittance::Diagonal(d) => {
                for ((o, di), xi) in out.iter_mut().zip(d).zip(x) {
                    *o = di * xi;
                }
            }
            Admittance::Dense(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = m.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    /// `self · A` for a matrix with matching rows.
    pub fn mul_mat(&self, a: &DenseMatrix) -> DenseMatrix {
        match self {
            Admittance::Diagonal(d) => DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| d[i] * a[(i, j)]),
            Admittance::Dense(m) => m.matmul(a).expect("admittance and operand shapes agree"),
        }
    }
}

/// Terminal description of the left/right array pair.
#[derive(Clone, Debug)]
pub(crate) struct PortModel {
    /// Driving-point admittance of the left array's row terminals.
    pub y_rows_left: Admittance,
    /// Transfer from left column voltages into left row currents.
    pub k_left: DenseMatrix,
    /// Driving-point admittance of the right array's column terminals.
    pub y_cols_right: Admittance,
    /// Transfer from right row voltages into right column currents (as `Kᵀ`).
    pub k_right: DenseMatrix,
}

impl PortModel {
    pub fn ideal(g_left: &DenseMatrix, g_right: &DenseMatrix) -> PortModel {
        let (n, m) = g_left.shape();
        let rowsum = (0..n).map(|i| g_left.row(i).iter().sum()).collect();
        let colsum = (0..m)
            .map(|j| (0..n).map(|i| g_right[(i, j)]).sum())
            .collect();
        PortModel {
            y_rows_left: Admittance::Diagonal(rowsum),
            k_left: g_left.clone(),
            y_cols_right: Admittance::Diagonal(colsum),
            k_right: g_right.clone(),
        }
    }

    pub fn with_wires(g_left: &DenseMatrix, g_right: &DenseMatrix, r_segment: f64) -> Result<PortModel> {
        if r_segment == 0.0 {
            return Ok(Self::ideal(g_left, g_right));
        }
        let left = WiredArray::new(g_left, r_segment)?.port_admittance()?;
        let right = WiredArray::new(g_right, r_segment)?.port_admittance()?;
        Ok(PortModel {
            y_rows_left: Admittance::Dense(left.rows_block()),
            k_left: left.transfer(),
            y_cols_right: Admittance::Dense(right.cols_block()),
            k_right: right.transfer(),
        })
    }
}

/// Full `(N+M)×(N+M)` terminal admittance, rows first.
pub(crate) struct TerminalAdmittance {
    n: usize,
    m: usize,
    y: DenseMatrix,
}

impl TerminalAdmittance {
    pub fn rows_block(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| self.y[(i, j)])
    }

    pub fn cols_block(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(self.m, self.m, |i, j| self.y[(n + i, n + j)])
    }

    /// `−Y_rc`, which reduces to `G` without wires.
    pub fn transfer(&self) -> DenseMatrix {
        let n = self.n;
        DenseMatrix::from_fn(n, self.m, |i, j| -self.y[(i, n + j)])
    }
}

/// Resistive network of one array: a device at every crossing, a wire
/// segment of resistance `r` between neighbouring crossings, and one more
/// segment from each line's first crossing to its terminal.
pub(crate) struct WiredArray<'a> {
    g: &'a DenseMatrix,
    r: f64,
    row_major: bool,
}

impl<'a> WiredArray<'a> {
    pub fn new(g: &'a DenseMatrix, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidParameter(format!("wire resistance {r} ohm")));
        }
        if let Some(v) = g.as_slice().iter().find(|v| !(**v > 0.0)) {
            return Err(Error::NegativeConductance(*v));
        }
        let (n, m) = g.shape();
        Ok(Self { g, r, row_major: m <= n })
    }

    /// Node numbering keeps the bandwidth at `2·min(N, M)`.
    fn row_node(&self, i: usize, j: usize) -> usize {
        let (n, m) = self.g.shape();
        if self.row_major {
            2 * (i * m + j)
        } else {
            2 * (j * n + i)
        }
    }

    fn col_node(&self, i: usize, j: usize) -> usize {
        self.row_node(i, j) + 1
    }

    pub fn port_admittance(&self) -> Result<TerminalAdmittance> {
        let (n, m) = self.g.shape();
        let nodes = 2 * n * m;
        let bw = 2 * n.min(m);
        let gw = 1.0 / self.r;
        let mut lap = BandedSpd::zeros(nodes, bw);
        for i in 0..n {
            for j in 0..m {
                lap.stamp(self.row_node(i, j), self.col_node(i, j), self.g[(i, j)]);
                if j + 1 < m {
                    lap.stamp(self.row_node(i, j), self.row_node(i, j + 1), gw);
                }
                if i + 1 < n {
                    lap.stamp(self.col_node(i, j), self.col_node(i + 1, j), gw);
                }
            }
        }
        // Terminal segments, with the terminals themselves held at 0 V.
        let entry: Vec<usize> = (0..n)
            .map(|i| self.row_node(i, 0))
            .chain((0..m).map(|j| self.col_node(0, j)))
            .collect();
        for &e in &entry {
            lap.add(e, e, gw);
        }
        let chol = lap.cholesky()?;
        let ports = n + m;
        let cols: Vec<Vec<f64>> = (0..ports)
            .into_par_iter()
            .map(|q| {
                let mut rhs = vec![0.0; nodes];
                rhs[entry[q]] = 1.0;
                chol.solve_in_place(&mut rhs);
                entry.iter().map(|&e| rhs[e]).collect()
            })
            .collect();
        let mut y = DenseMatrix::from_fn(ports, ports, |p, q| -gw * gw * cols[q][p]);
        for p in 0..ports {
            y[(p, p)] += gw;
        }
        // Symmetrize away solver round-off.
        for p in 0..ports {
            for q in 0..p {
                let avg = 0.5 * (y[(p, q)] + y[(q, p)]);
                y[(p, q)] = avg;
                y[(q, p)] = avg;
            }
        }
        Ok(TerminalAdmittance { n, m, y })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{solve_square, DenseVector};

    fn row_sums(a: &DenseMatrix) -> DenseVector {
        DenseVector::from_fn(a.rows(), |i| a.row(i).iter().sum())
    }

    /// Dense modified nodal analysis of the same network, terminals included.
    fn dense_terminal_admittance(g: &DenseMatrix, r: f64) -> DenseMatrix {
        let (n, m) = g.shape();
        let gw = 1.0 / r;
        // Nodes: internal r(i,j), c(i,j), then row terminals, then column terminals.
        let rn = |i: usize, j: usize| i * m + j;
        let cn = |i: usize, j: usize| n * m + i * m + j;
        let rt = |i: usize| 2 * n * m + i;
        let ct = |j: usize| 2 * n * m + n + j;
        let total = 2 * n * m + n + m;
        let mut a = DenseMatrix::zeros(total, total);
        let mut stamp = |p: usize, q: usize, c: f64| {
            a[(p, p)] += c;
            a[(q, q)] += c;
            a[(p, q)] -= c;
            a[(q, p)] -= c;
        };
        for i in 0..n {
            stamp(rt(i), rn(i, 0), gw);
            for j in 0..m {
                stamp(rn(i, j), cn(i, j), g[(i, j)]);
                if j + 1 < m {
                    stamp(rn(i, j), rn(i, j + 1), gw);
                }
                if i + 1 < n {
                    stamp(cn(i, j), cn(i + 1, j), gw);
                }
            }
        }
        for j in 0..m {
            stamp(ct(j), cn(0, j), gw);
        }
        // Drive each terminal at 1 V with the others grounded; record terminal currents.
        let internal = 2 * n * m;
        let ports = n + m;
        let mut y = DenseMatrix::zeros(ports, ports);
        let aii = DenseMatrix::from_fn(internal, internal, |p, q| a[(p, q)]);
        for q in 0..ports {
            let b = DenseVector::from_fn(internal, |p| -a[(p, internal + q)]);
            let x = solve_square(&aii, &b).unwrap();
            for p in 0..ports {
                let row = internal + p;
                let mut cur = a[(row, internal + q)];
                for k in 0..internal {
                    cur += a[(row, k)] * x[k];
                }
                y[(p, q)] = cur;
            }
        }
        y
    }

    fn sample(n: usize, m: usize) -> DenseMatrix {
        DenseMatrix::from_fn(n, m, |i, j| 1e-5 * (1.0 + ((3 * i + 7 * j) % 11) as f64))
    }

    #[test]
    fn schur_reduction_matches_dense_nodal_analysis() {
        for (n, m) in [(4, 3), (3, 5), (1, 1)] {
            let g = sample(n, m);
            let r = 50.0;
            let got = WiredArray::new(&g, r).unwrap().port_admittance().unwrap().y;
            let want = dense_terminal_admittance(&g, r);
            let scale = want.max_abs();
            assert!(got.sub(&want).unwrap().max_abs() < 1e-10 * scale, "{n}x{m}");
        }
    }

    #[test]
    fn tiny_wires_approach_the_ideal_pattern() {
        let g = sample(5, 3);
        let t = WiredArray::new(&g, 1e-3).unwrap().port_admittance().unwrap();
        assert!(t.transfer().sub(&g).unwrap().max_abs() < 1e-5 * g.max_abs());
        let rs = row_sums(&g);
        let rows = t.rows_block();
        for i in 0..5 {
            assert!((rows[(i, i)] - rs[i]).abs() < 1e-5 * rs[i]);
        }
    }

    #[test]
    fn zero_resistance_is_the_ideal_model() {
        let g = sample(3, 2);
        let p = PortModel::with_wires(&g, &g, 0.0).unwrap();
        assert!(matches!(p.y_rows_left, Admittance::Diagonal(_)));
        assert_eq!(p.k_left, g);
    }

    #[test]
    fn wires_lower_driving_point_admittance() {
        let g = sample(4, 4);
        let t = WiredArray::new(&g, 100.0).unwrap().port_admittance().unwrap();
        assert!(t.transfer().as_slice().iter().all(|v| *v > 0.0));
        let rows = t.rows_block();
        let rs = row_sums(&g);
        for i in 0..4 {
            assert!(rows[(i, i)] < rs[i]);
        }
    }
}
