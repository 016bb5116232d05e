//! Boston housing regression: analytical weights against an 8-bit circuit.

use crosspoint::circuit::AmplifierModel;
use crosspoint::data::{bundled_boston_path, load_boston};
use crosspoint::device::{ConductanceLevelSet, DeviceModel};
use crosspoint::learn::{evaluate_prediction, fit_linear, Backend, CircuitBackend, RegressionProblem};
use crosspoint::mapping::ScalingConfig;
use crosspoint::numerics::DenseMatrix;

fn with_bias(f: &DenseMatrix) -> DenseMatrix {
    DenseMatrix::from_fn(f.rows(), f.cols() + 1, |i, j| if j == 0 { 1.0 } else { f[(i, j - 1)] })
}

fn main() -> crosspoint::Result<()> {
    let ds = load_boston(&bundled_boston_path())?;
    let (xt, yt) = ds.train();
    let (xs, ys) = ds.test();
    let (x, x_test) = (with_bias(&xt), with_bias(&xs));
    let problem = RegressionProblem::new(x, yt)?;

    let backend = CircuitBackend {
        device: DeviceModel {
            levels: ConductanceLevelSet::eight_bit(100e-6),
            ..DeviceModel::default()
        },
        scaling: ScalingConfig::fill_columns(10e-6, 10e-6),
        nfa: AmplifierModel::unclamped(),
        pfa: AmplifierModel::unclamped(),
        ..CircuitBackend::default()
    };
    let oracle = fit_linear(&problem, &Backend::Oracle)?;
    let circuit = fit_linear(&problem, &Backend::Circuit(backend))?;

    println!("{} training rows, {} test rows", ds.train_indices.len(), ds.test_indices.len());
    println!("{:>8} {:>12} {:>12} {:>8}", "weight", "oracle", "circuit", "err %");
    let mut names = vec!["bias".to_string()];
    names.extend(ds.feature_names.iter().cloned());
    for (j, n) in names.iter().enumerate() {
        let (o, c) = (oracle.w[j], circuit.w[j]);
        println!("{n:>8} {o:>12.4} {c:>12.4} {:>8.2}", 100.0 * (c - o) / o.abs());
    }
    for (name, w) in [("oracle", &oracle.w), ("circuit", &circuit.w)] {
        let train = evaluate_prediction(w, &problem.x, &problem.y)?;
        let test = evaluate_prediction(w, &x_test, &ys)?;
        println!("{name:>8}: sigma_p train {train:.0} $, test {test:.0} $");
    }
    Ok(())
}
