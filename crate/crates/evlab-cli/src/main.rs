use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use evlab_cli::config::{Command, CompressorMode, PartialConfig, RunConfig};
use evlab_cli::report::{canonical, table_csv};
use evlab_cli::run::execute;
use evlab_cli::CliError;

/// Simulation laboratory for e-values and e-processes.
#[derive(Parser, Debug)]
#[command(name = "evlab", version, about)]
struct Cli {
    /// Experiment: validate, ville, growth, replay, calibrate, compress, glr
    command: Option<String>,

    /// JSON config file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,

    /// Model spec, e.g. bernoulli(0.5) or gaussian(0,1)
    #[arg(long)]
    model: Option<String>,

    /// Constructor spec, e.g. lr(bernoulli(0.5),bernoulli(0.7)),
    /// bounded(0.5,agrapa), kt, constant1
    #[arg(long)]
    constructor: Option<String>,

    /// Replay scenario: p-hacking or two-batch
    #[arg(long)]
    scenario: Option<String>,

    /// Calibrator spec: power(<kappa>) or mixture
    #[arg(long)]
    calibrator: Option<String>,

    /// Random seed
    #[arg(long)]
    seed: Option<u64>,

    /// Monte Carlo replications
    #[arg(long)]
    reps: Option<usize>,

    /// Time horizon (observations per replication)
    #[arg(long)]
    horizon: Option<usize>,

    /// Significance level in (0, 1)
    #[arg(long)]
    alpha: Option<f64>,

    /// Input data file (.csv, .jsonl, .ndjson)
    #[arg(long)]
    input: Option<PathBuf>,

    /// Report output path (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write a flat CSV table next to the report (requires --out)
    #[arg(long)]
    table: bool,

    /// Worker thread cap; results are identical for any value
    #[arg(long)]
    threads: Option<usize>,

    /// External compressor command, fed input on stdin
    #[arg(long)]
    external_compressor: Option<String>,

    /// How external compressor output is read: count or bytes
    #[arg(long)]
    compressor_mode: Option<String>,
}

fn build_config(cli: Cli) -> Result<RunConfig, CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            PartialConfig::from_json(&text)?
        }
        None => PartialConfig::default(),
    };
    let flags = PartialConfig {
        command: cli.command.as_deref().map(str::parse::<Command>).transpose()?,
        model: cli.model,
        constructor: cli.constructor,
        scenario: cli.scenario,
        calibrator: cli.calibrator,
        seed: cli.seed,
        reps: cli.reps,
        horizon: cli.horizon,
        alpha: cli.alpha,
        input: cli.input,
        out: cli.out,
        table: if cli.table { Some(true) } else { None },
        threads: cli.threads,
        external_compressor: cli.external_compressor,
        compressor_mode: cli
            .compressor_mode
            .as_deref()
            .map(str::parse::<CompressorMode>)
            .transpose()?,
    };
    RunConfig::from_partial(flags.over(file))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = build_config(cli)?;
    let report = execute(&cfg)?;
    let text = canonical(&report);
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, text + "\n")
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            if cfg.table {
                let results = report["results"].as_array().expect("results is an array");
                let table_path = path.with_extension("csv");
                std::fs::write(&table_path, table_csv(results)).map_err(|e| {
                    CliError::Data(format!("cannot write {}: {e}", table_path.display()))
                })?;
            }
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("evlab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
