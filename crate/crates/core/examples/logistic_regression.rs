//! Two-class logistic regression on six points with ±a label binarization.

use crosspoint::learn::{fit_logistic, Backend, CircuitBackend, ClassLabels};
use crosspoint::mapping::build_design_matrix;
use crosspoint::numerics::DenseVector;

fn main() -> crosspoint::Result<()> {
    let points = [[1.0, 1.0], [1.5, 3.0], [2.0, 2.0], [3.5, 1.0], [4.0, 3.0], [4.5, 2.0]];
    let x = build_design_matrix(&points, 1, true)?;
    let labels = ClassLabels::new(vec![0, 0, 0, 1, 1, 1], 0.2)?;

    let oracle = fit_logistic(&x, &labels, &Backend::Oracle)?;
    let circuit = fit_logistic(&x, &labels, &Backend::Circuit(CircuitBackend::default()))?;
    println!("oracle  w = {:?}", oracle.w.as_slice());
    println!("circuit w = {:?}", circuit.w.as_slice());
    let (w0, w1, w2) = (circuit.w[0], circuit.w[1], circuit.w[2]);
    println!("boundary: {w0:.4} + {w1:.4} x1 + {w2:.4} x2 = 0");

    for (p, l) in points.iter().zip(&labels.labels) {
        let c = circuit.classify(&DenseVector::from(p.to_vec()))?;
        println!("({}, {}) label {l} -> class {c}", p[0], p[1]);
    }
    let new: DenseVector = vec![3.2, 2.5].into();
    println!("new point (3.2, 2.5): s = {:.4}, class {}", circuit.score(&new)?, circuit.classify(&new)?);
    Ok(())
}
