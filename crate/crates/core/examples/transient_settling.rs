//! Pole locations and settling of the Boston circuit for growing training
//! subsets; settle time follows the slowest pole, not the row count.

use crosspoint::experiment::{sweep, ExperimentConfig, ExperimentKind};

fn main() -> crosspoint::Result<()> {
    let cfg = ExperimentConfig::preset(ExperimentKind::Transient);
    let sizes = ["160", "195", "229", "264", "298", "333"];
    let out = sweep(&cfg, "train_size", &sizes)?;
    println!("{:>6} {:>14} {:>12} {:>8}", "rows", "lambda_min 1/s", "settle µs", "stable");
    for (row, rep) in out.rows.iter().zip(&out.reports) {
        println!(
            "{:>6} {:>14.4e} {:>12.3} {:>8}",
            row.value,
            row.lambda_min.unwrap_or(f64::NAN),
            1e6 * row.settle_time.unwrap_or(f64::NAN),
            rep.metrics.stable.unwrap_or(false)
        );
    }
    for n in &out.notes {
        println!("{n}");
    }
    Ok(())
}
