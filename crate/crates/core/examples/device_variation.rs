//! Boston regression under programming variation and array mismatch,
//! averaged over seeds.

use crosspoint::experiment::{run, ExperimentConfig, ExperimentKind};

fn main() -> crosspoint::Result<()> {
    let mut cfg = ExperimentConfig::preset(ExperimentKind::NoiseSweep);
    cfg.repeats = 20;
    let report = run(&cfg)?;
    println!("oracle sigma_p train {:.0} $", report.metrics.oracle_sigma_p_train.unwrap_or(f64::NAN));
    println!("{:>6} {:>12} {:>12} {:>10}", "sigma", "train $", "test $", "max err");
    for g in &report.metrics.groups {
        println!(
            "{:>6} {:>12.1} {:>12.1} {:>9.1}%",
            g.label,
            g.mean_sigma_p_train,
            g.mean_sigma_p_test.unwrap_or(f64::NAN),
            100.0 * g.max_relative_error.unwrap_or(f64::NAN)
        );
    }

    // Left and right arrays differing by up to 5 % per device.
    let mut mm = ExperimentConfig::preset(ExperimentKind::FitLinear);
    mm.circuit.mismatch = Some(0.05);
    mm.repeats = 10;
    let r = run(&mm)?;
    println!("6-point fit with 5% mismatch, worst weight error over 10 seeds:");
    for rec in &r.repeats {
        println!("  seed {:>20}: {:.2}%", rec.seed, 100.0 * rec.max_relative_error.unwrap_or(f64::NAN));
    }
    Ok(())
}
