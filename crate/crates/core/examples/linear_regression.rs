//! Six-point straight-line fit on the circuit, plus a prediction read from
//! an extra grounded row.
//!
//! ```text
//! cargo run --example linear_regression
//! ```

use crosspoint::circuit::TransientOptions;
use crosspoint::learn::{fit_linear, Backend, CircuitBackend, RegressionProblem};
use crosspoint::mapping::build_design_matrix;
use crosspoint::numerics::DenseVector;

fn main() -> crosspoint::Result<()> {
    let xs: Vec<[f64; 1]> = (1..=6).map(|v| [v as f64]).collect();
    let x = build_design_matrix(&xs, 1, true)?;
    let y: DenseVector = vec![0.3, 0.3, 0.5, 0.4, 0.5, 0.7].into();
    let problem = RegressionProblem::new(x, y)?;

    let oracle = fit_linear(&problem, &Backend::Oracle)?;
    // 32-level devices, 100 µS unit conductance, clamped amplifiers.
    let circuit = fit_linear(&problem, &Backend::Circuit(CircuitBackend::default()))?;

    println!("       {:>10} {:>10} {:>9}", "oracle", "circuit", "rel.err");
    for (j, name) in ["w0", "w1"].iter().enumerate() {
        let (o, c) = (oracle.w[j], circuit.w[j]);
        println!("{name:>6} {o:>10.4} {c:>10.4} {:>8.2}%", 100.0 * (c - o) / o.abs());
    }
    println!("sigma_p oracle {:.4}, circuit {:.4}", oracle.sigma_p, circuit.sigma_p);

    let x_star: DenseVector = vec![1.0, 4.91].into();
    println!(
        "y*(4.91): oracle {:.4}, prediction row {:.4}",
        oracle.predict(&x_star)?,
        circuit.predict(&x_star)?
    );

    let (c, _) = circuit.circuit.as_ref().expect("circuit backend keeps its circuit");
    let tr = c.transient(&TransientOptions::default())?;
    println!("settles to 1% in {:.2} µs", tr.settle_time * 1e6);
    Ok(())
}
