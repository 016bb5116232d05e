//! Boston regression on arrays with series wire resistance.

use crosspoint::experiment::{run, ExperimentConfig, ExperimentKind};

fn main() -> crosspoint::Result<()> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::WireSweep);
    cfg.sweep.wire_r = vec![0.0, 0.1, 1.0, 3.0, 10.0];
    let report = run(&cfg)?;
    println!("oracle sigma_p train {:.0} $", report.metrics.oracle_sigma_p_train.unwrap_or(f64::NAN));
    println!("{:>8} {:>12} {:>12} {:>12}", "r (Ω)", "train $", "test $", "max w err");
    for g in &report.metrics.groups {
        println!(
            "{:>8} {:>12.1} {:>12.1} {:>11.2}%",
            g.label,
            g.mean_sigma_p_train,
            g.mean_sigma_p_test.unwrap_or(f64::NAN),
            100.0 * g.max_relative_error.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
