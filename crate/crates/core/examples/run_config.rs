//! Runs an experiment described by a TOML file, with key overrides, and
//! prints the report JSON.
//!
//! ```text
//! cargo run --example run_config -- configs/boston.toml backend=circuit
//! ```

use std::path::PathBuf;

use crosspoint::experiment::{run, ExperimentConfig, ExperimentKind};

fn main() -> crosspoint::Result<()> {
    let mut args = std::env::args().skip(1);
    let cfg = match args.next() {
        Some(path) => ExperimentConfig::from_file(&PathBuf::from(path))?,
        None => ExperimentConfig::preset(ExperimentKind::Boston),
    };
    let overrides: Vec<String> = args.collect();
    let cfg = cfg.with_overrides(&overrides)?;
    let report = run(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
