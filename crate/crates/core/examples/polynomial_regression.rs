//! Quadratic fit of noisy synthetic data with a negative coefficient, using
//! column translation so every conductance stays nonnegative.

use crosspoint::data::synth_linear;
use crosspoint::device::{ConductanceLevelSet, DeviceModel};
use crosspoint::learn::{fit_linear, Backend, CircuitBackend, RegressionProblem};
use crosspoint::mapping::{translate_nonnegative, ScalingConfig};
use crosspoint::numerics::DenseVector;

fn main() -> crosspoint::Result<()> {
    let w_true: DenseVector = vec![0.5, -0.3, 0.08].into();
    let (x, y) = synth_linear(40, &w_true, 0.02, 7)?;
    let problem = RegressionProblem::new(x.clone(), y)?;

    let oracle = fit_linear(&problem, &Backend::Oracle)?;
    let backend = CircuitBackend {
        // Continuous devices reject targets below the off state; 8-bit
        // quantization rounds those to the nearest level instead.
        device: DeviceModel {
            levels: ConductanceLevelSet::eight_bit(1e-3),
            ..DeviceModel::default()
        },
        // x² reaches 25, so size the unit conductance per column.
        scaling: ScalingConfig::fill_columns(100e-6, 100e-6),
        ..CircuitBackend::default()
    };
    let circuit = fit_linear(&problem, &Backend::Circuit(backend))?;

    println!("true    {:?}", w_true.as_slice());
    println!("oracle  {:?}", oracle.w.as_slice());
    println!("circuit {:?}", circuit.w.as_slice());

    // Centred abscissas make the linear column negative; the mapping shifts
    // it and folds the shift back into the bias weight.
    let centred = crosspoint::numerics::DenseMatrix::from_fn(x.rows(), 2, |i, j| {
        if j == 0 { 1.0 } else { x[(i, 1)] - 2.5 }
    });
    let (_, offset) = translate_nonnegative(&centred);
    let p2 = RegressionProblem::new(centred, problem.y.clone())?;
    let o2 = fit_linear(&p2, &Backend::Oracle)?;
    let c2 = fit_linear(&p2, &Backend::Circuit(CircuitBackend::ideal()))?;
    println!("column offsets {:?}", offset.as_slice());
    println!("centred line: oracle {:?}, circuit {:?}", o2.w.as_slice(), c2.w.as_slice());
    Ok(())
}
