use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crosspoint::experiment::{
    oracle_check, run, sweep, ExperimentConfig, ExperimentKind, ExperimentReport, OUTPUT_DIR_ENV,
};
use crosspoint::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "xpoint", version, about = "Crosspoint least-squares circuit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment file.
    config: Option<PathBuf>,
    /// Start from built-in settings for an experiment instead of a file.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Override a config key, e.g. `--set circuit.wire_r=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory for the report and CSV artifacts.
    #[arg(long, short, env = OUTPUT_DIR_ENV)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its report.
    Run(ConfigArgs),
    /// Run an experiment once per value of a config parameter.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Key path or short name (train_size, r_segment, sigma_mode, g_max, g_unit, g_ti).
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Check a config and print it fully resolved.
    ValidateConfig(ConfigArgs),
    /// Compare noiseless circuit weights with the analytical solution.
    OracleCheck {
        #[arg(long, default_value_t = 500)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
    },
}

fn load(args: &ConfigArgs) -> crosspoint::Result<ExperimentConfig> {
    let base = match (&args.config, &args.preset) {
        (Some(p), _) => ExperimentConfig::from_file(p)?,
        (None, Some(name)) => ExperimentConfig::preset(name.parse::<ExperimentKind>()?),
        (None, None) => {
            return Err(Error::ConfigInvalid {
                path: "<args>".into(),
                detail: "give a config file or --preset".into(),
            })
        }
    };
    let mut cfg = base.with_overrides(&args.overrides)?;
    if args.output.is_some() {
        cfg.output_dir = args.output.clone();
    }
    Ok(cfg)
}

fn summary(r: &ExperimentReport) -> serde_json::Value {
    json!({
        "experiment": r.experiment,
        "backend": r.backend,
        "seed": r.seed,
        "metrics": r.metrics,
        "artifacts": r.artifacts,
        "wall_clock_s": r.wall_clock_s,
    })
}

fn execute(cli: Cli) -> crosspoint::Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let report = run(&load(&args)?)?;
            println!("{}", serde_json::to_string_pretty(&summary(&report))?);
            Ok(true)
        }
        Command::Sweep { cfg, param, values } => {
            let out = sweep(&load(&cfg)?, &param, &values)?;
            println!("{:>12} {:>12} {:>12} {:>12} {:>10}", "value", "lambda_min", "settle_s", "sigma_p", "accuracy");
            let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
            for r in &out.rows {
                println!(
                    "{:>12} {:>12} {:>12} {:>12} {:>10}",
                    r.value,
                    f(r.lambda_min),
                    f(r.settle_time),
                    f(r.sigma_p),
                    f(r.accuracy)
                );
            }
            for n in &out.notes {
                println!("{n}");
            }
            if let Some(p) = &out.summary_path {
                println!("summary: {}", p.display());
            }
            Ok(true)
        }
        Command::ValidateConfig(args) => {
            let cfg = load(&args)?;
            print!("{}", cfg.to_toml_string()?);
            Ok(true)
        }
        Command::OracleCheck { count, seed, tolerance } => {
            let r = oracle_check(count, seed, tolerance)?;
            println!(
                "{} instances, max relative error {:.3e} (tolerance {:.1e}), {} failures",
                r.instances, r.max_relative_error, r.tolerance, r.failures
            );
            Ok(r.passed())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            let (kind, path) = match &e {
                Error::ConfigInvalid { path, .. } => ("config_invalid", Some(path.clone())),
                Error::UnknownParameter(p) => ("unknown_parameter", Some(p.clone())),
                Error::FileNotFound(p) => ("file_not_found", Some(p.display().to_string())),
                Error::Context { .. } => ("failed", None),
                _ => ("error", None),
            };
            eprintln!("{}", json!({ "error": kind, "path": path, "message": e.to_string() }));
            ExitCode::from(2)
        }
    }
}
