//! Experiment dispatch: a validated [`RunConfig`] in, a JSON report out.

use std::io::Write as _;
use std::process::{Command as Process, Stdio};
use std::time::Instant;

use serde_json::Value;

use evlab::calibrate::{verify_calibrator, Calibrator};
use evlab::compress::{compression_eprocess, Coder, CompressorAdapter};
use evlab::evcore::StoppingRule;
use evlab::families::Model;
use evlab::simlab::{
    glr_inflation, growth_rate, mc_stopped_mean, p_hacking_replay, two_batch_replay,
    ville_coverage, ScenarioSpec, SimConfig, SimReport,
};
use evlab::EvError;

use crate::config::{CalibratorSpec, CompressorMode, ConstructorSpec, ModelSpec, RunConfig};
use crate::config::Command;
use crate::ingest;
use crate::report::{num, sim_report_value};
use crate::CliError;

/// Runs the configured experiment and returns the full report value:
/// `{config, results, version, wall_time_secs}`. The `results` section is
/// a pure function of the config; only `wall_time_secs` varies between
/// identical runs.
pub fn execute(cfg: &RunConfig) -> Result<Value, CliError> {
    let start = Instant::now();
    let results = match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("threads: {e}")))?;
            pool.install(|| dispatch(cfg))?
        }
        None => dispatch(cfg)?,
    };
    let mut report = serde_json::Map::new();
    report.insert(
        "config".into(),
        serde_json::to_value(cfg).map_err(|e| CliError::Config(e.to_string()))?,
    );
    report.insert("results".into(), Value::Array(results));
    report.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    report.insert("wall_time_secs".into(), num(start.elapsed().as_secs_f64()));
    Ok(Value::Object(report))
}

fn sim_config(cfg: &RunConfig) -> Result<SimConfig, CliError> {
    SimConfig::new(cfg.seed, cfg.reps, cfg.horizon, cfg.alpha).map_err(CliError::from)
}

fn relabel(mut r: SimReport, label: &str) -> Value {
    r.label = label.to_string();
    sim_report_value(&r)
}

fn dispatch(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    match cfg.command {
        Command::Validate | Command::Ville | Command::Growth => run_mc(cfg),
        Command::Replay => run_replay(cfg),
        Command::Glr => {
            let sim = sim_config(cfg)?;
            let r = glr_inflation(cfg.horizon, &sim)?;
            Ok(vec![sim_report_value(&r)])
        }
        Command::Calibrate => run_calibrate(cfg),
        Command::Compress => run_compress(cfg),
    }
}

fn run_mc(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    let model = ModelSpec::parse(cfg.model.as_deref().expect("validated"))?.build()?;
    let spec = ConstructorSpec::parse(cfg.constructor.as_deref().expect("validated"))?;
    let constructor = spec.build()?;
    let sim = sim_config(cfg)?;
    let sampler = move |rng: &mut rand_chacha::ChaCha12Rng| model.sample(rng);

    match cfg.command {
        Command::Validate => {
            let fixed = mc_stopped_mean(
                &sampler,
                &constructor,
                &StoppingRule::FixedHorizon { n: cfg.horizon },
                &sim,
            )?;
            let crossing = mc_stopped_mean(
                &sampler,
                &constructor,
                &StoppingRule::FirstCrossing {
                    threshold: 1.0 / cfg.alpha,
                    horizon_cap: cfg.horizon,
                },
                &sim,
            )?;
            Ok(vec![
                relabel(fixed, "validate_fixed_horizon"),
                relabel(crossing, "validate_first_crossing"),
            ])
        }
        Command::Ville => {
            let r = ville_coverage(&sampler, &constructor, &sim)?;
            Ok(vec![sim_report_value(&r)])
        }
        Command::Growth => {
            let r = growth_rate(&sampler, &constructor, cfg.horizon, &sim)?;
            Ok(vec![sim_report_value(&r)])
        }
        _ => unreachable!("run_mc handles validate/ville/growth only"),
    }
}

fn run_replay(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    let sim = sim_config(cfg)?;
    match cfg.scenario.as_deref().expect("validated") {
        "p-hacking" => {
            let spec = ScenarioSpec::stop_when_significant(cfg.horizon)?;
            let r = p_hacking_replay(&spec, &sim)?;
            Ok(vec![sim_report_value(&r.naive), sim_report_value(&r.eprocess)])
        }
        "two-batch" => {
            // default protocol: batches of 50 and 30, continue on a
            // batch-one p-value in (alpha, 0.1]
            let spec = ScenarioSpec::two_batch(50, 30, (cfg.alpha, 0.1))?;
            let r = two_batch_replay(&spec, &sim)?;
            Ok(vec![
                sim_report_value(&r.fisher),
                sim_report_value(&r.pooled),
                sim_report_value(&r.product_e),
                sim_report_value(&r.calibrated_p),
            ])
        }
        other => Err(CliError::Config(format!(
            "scenario: unknown scenario '{other}' (expected p-hacking or two-batch)"
        ))),
    }
}

fn run_calibrate(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    let spec = CalibratorSpec::parse(cfg.calibrator.as_deref().expect("validated"))?;
    let cal = match spec {
        CalibratorSpec::Power(kappa) => {
            Calibrator::power(kappa).map_err(|e| CliError::Config(format!("calibrator: {e}")))?
        }
        CalibratorSpec::Mixture => Calibrator::mixture(),
    };
    let check = verify_calibrator(&cal)?;
    let mut results = Vec::new();
    let mut verify = serde_json::Map::new();
    verify.insert("label".into(), Value::from(format!("verify_{}", cal.name)));
    verify.insert("estimate".into(), num(check.integral));
    verify.insert("std_error".into(), num(0.0));
    verify.insert("reps".into(), Value::from(0u64));
    verify.insert("seed".into(), Value::from(cfg.seed));
    let mut extra = serde_json::Map::new();
    extra.insert("monotone".into(), num(check.monotone as u8 as f64));
    extra.insert("passes".into(), num(check.passes as u8 as f64));
    verify.insert("extra".into(), Value::Object(extra));
    results.push(Value::Object(verify));

    if let Some(path) = &cfg.input {
        let data = ingest::ingest(path)?;
        for (batch, pvals) in &data.groups {
            for (i, &p) in pvals.iter().enumerate() {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(CliError::Data(format!(
                        "p-value {p} at position {i} of batch {batch:?} outside (0, 1]"
                    )));
                }
            }
            // product over independent p-values: itself an e-value
            let product: f64 = pvals.iter().map(|&p| cal.eval(p)).product();
            let label = match batch {
                Some(b) => format!("calibrated_product_batch_{b}"),
                None => "calibrated_product".to_string(),
            };
            let mut obj = serde_json::Map::new();
            obj.insert("label".into(), Value::from(label));
            obj.insert("estimate".into(), num(product));
            obj.insert("std_error".into(), num(0.0));
            obj.insert("reps".into(), Value::from(pvals.len() as u64));
            obj.insert("seed".into(), Value::from(cfg.seed));
            results.push(Value::Object(obj));
        }
    }
    Ok(results)
}

/// Shells out to an external compressor once per prefix.
struct ExternalCompressor {
    display: String,
    program: String,
    args: Vec<String>,
    mode: CompressorMode,
}

impl ExternalCompressor {
    fn new(command: &str, mode: CompressorMode) -> Result<Self, CliError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| CliError::Config("external compressor command is empty".into()))?;
        Ok(Self { display: command.to_string(), program, args: parts.collect(), mode })
    }
}

impl CompressorAdapter for ExternalCompressor {
    fn name(&self) -> &str {
        &self.display
    }

    fn compressed_len(&self, bytes: &[u8]) -> evlab::Result<usize> {
        let fail = |message: String| EvError::AdapterFailure {
            name: self.display.clone(),
            message,
        };
        let mut child = Process::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| fail(format!("spawn failed: {e}")))?;
        child
            .stdin
            .take()
            .expect("stdin was piped")
            .write_all(bytes)
            .map_err(|e| fail(format!("stdin write failed: {e}")))?;
        let output = child
            .wait_with_output()
            .map_err(|e| fail(format!("wait failed: {e}")))?;
        if !output.status.success() {
            return Err(fail(format!("exited with {}", output.status)));
        }
        match self.mode {
            CompressorMode::Bytes => Ok(output.stdout.len()),
            CompressorMode::Count => String::from_utf8_lossy(&output.stdout)
                .trim()
                .parse::<usize>()
                .map_err(|e| fail(format!("stdout is not a byte count: {e}"))),
        }
    }
}

fn run_compress(cfg: &RunConfig) -> Result<Vec<Value>, CliError> {
    let data = ingest::ingest(cfg.input.as_deref().expect("validated"))?;
    let bits = ingest::to_bits(&data.flat()).map_err(CliError::from)?;
    let external;
    let coder = match &cfg.external_compressor {
        Some(command) => {
            external = ExternalCompressor::new(command, cfg.compressor_mode)?;
            Coder::Adapter(&external)
        }
        None => Coder::Kt,
    };
    let trace = compression_eprocess(&bits, &coder)?;
    let mut obj = serde_json::Map::new();
    obj.insert("label".into(), Value::from("compression"));
    obj.insert("estimate".into(), num(trace.final_capital()));
    obj.insert("std_error".into(), num(0.0));
    obj.insert("reps".into(), Value::from(1u64));
    obj.insert("seed".into(), Value::from(cfg.seed));
    let mut extra = serde_json::Map::new();
    extra.insert(
        "final_log2_capital".into(),
        num(trace.final_log_capital() / std::f64::consts::LN_2),
    );
    extra.insert("steps".into(), num(bits.len() as f64));
    obj.insert("extra".into(), Value::Object(extra));
    Ok(vec![Value::Object(obj)])
}
