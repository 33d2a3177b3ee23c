//! Monte Carlo laboratory: validity, Ville coverage, and growth-rate
//! estimation for any e-process constructor, with reproducible
//! per-replication random substreams.
//!
//! Replication `i` draws from a ChaCha stream selected purely by
//! `(seed, i)` (the seed keys the cipher, `i` selects the stream), so
//! replications are embarrassingly parallel and results do not depend on
//! thread count or execution order. Reduction is an ordered summation by
//! replication index.

mod scenarios;

pub use scenarios::{
    glr_inflation, p_hacking_replay, two_batch_replay, PHackingReport, ScenarioKind,
    ScenarioSpec, TwoBatchReport,
};

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evcore::{first_crossing, stopped_value, EProcessTrace, StoppingRule};
use crate::{EvError, Result};

/// Configuration of a Monte Carlo run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub reps: usize,
    pub horizon: usize,
    pub alpha: f64,
}

impl SimConfig {
    pub fn new(seed: u64, reps: usize, horizon: usize, alpha: f64) -> Result<Self> {
        if reps == 0 || horizon == 0 {
            return Err(EvError::InvalidArgument(
                "reps and horizon must be positive".into(),
            ));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(EvError::InvalidArgument(format!(
                "alpha must lie in (0, 1), got {alpha}"
            )));
        }
        Ok(Self { seed, reps, horizon, alpha })
    }
}

/// One Monte Carlo estimate with its standard error; self-describing and
/// re-runnable from its own metadata.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SimReport {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, f64>,
}

impl SimReport {
    fn from_values(label: impl Into<String>, seed: u64, values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { label: label.into(), estimate: mean, std_error, reps: n, seed, extra: BTreeMap::new() }
    }
}

/// The per-replication generator: stream `i` of a ChaCha12 cipher keyed by
/// the run seed. A pure function of `(seed, i)`.
pub fn replication_rng(seed: u64, rep: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

fn run_reps<T, F>(reps: usize, seed: u64, body: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha12Rng) -> Result<T> + Sync,
{
    (0..reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(seed, i as u64);
            body(i, &mut rng).map_err(|e| EvError::Replication { rep: i, source: Box::new(e) })
        })
        .collect()
}

/// Monte Carlo mean of the e-process value at the rule's stopping time
/// under the given null sampler.
pub fn mc_stopped_mean<S, C>(
    null_sampler: S,
    constructor: C,
    rule: &StoppingRule,
    cfg: &SimConfig,
) -> Result<SimReport>
where
    S: Fn(&mut ChaCha12Rng) -> f64 + Sync,
    C: Fn(&[f64]) -> Result<EProcessTrace> + Sync,
{
    let cap = rule.horizon_cap();
    if cap == 0 || cap > cfg.horizon {
        return Err(EvError::InvalidArgument(format!(
            "rule horizon cap {cap} exceeds config horizon {}",
            cfg.horizon
        )));
    }
    let values = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let data: Vec<f64> = (0..cap).map(|_| null_sampler(rng)).collect();
        let trace = constructor(&data)?;
        Ok(stopped_value(&trace, rule, &data)?.value)
    })?;
    Ok(SimReport::from_values("mc_stopped_mean", cfg.seed, &values))
}

/// Estimated probability that the capital ever reaches `1/alpha` within
/// the horizon under the null sampler.
pub fn ville_coverage<S, C>(null_sampler: S, constructor: C, cfg: &SimConfig) -> Result<SimReport>
where
    S: Fn(&mut ChaCha12Rng) -> f64 + Sync,
    C: Fn(&[f64]) -> Result<EProcessTrace> + Sync,
{
    let values = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let data: Vec<f64> = (0..cfg.horizon).map(|_| null_sampler(rng)).collect();
        let trace = constructor(&data)?;
        Ok(first_crossing(&trace, cfg.alpha)?.is_some() as u8 as f64)
    })?;
    Ok(SimReport::from_values("ville_coverage", cfg.seed, &values))
}

/// Monte Carlo estimate of `E[log capital[T]] / T` under an alternative
/// sampler. Ruined traces (capital exactly 0) are excluded from the mean
/// and reported as a separate `ruin_frequency` field.
pub fn growth_rate<S, C>(
    alt_sampler: S,
    constructor: C,
    t_horizon: usize,
    cfg: &SimConfig,
) -> Result<SimReport>
where
    S: Fn(&mut ChaCha12Rng) -> f64 + Sync,
    C: Fn(&[f64]) -> Result<EProcessTrace> + Sync,
{
    if t_horizon == 0 {
        return Err(EvError::InvalidArgument("growth horizon must be positive".into()));
    }
    let values = run_reps(cfg.reps, cfg.seed, |_, rng| {
        let data: Vec<f64> = (0..t_horizon).map(|_| alt_sampler(rng)).collect();
        let trace = constructor(&data)?;
        Ok(trace.final_log_capital() / t_horizon as f64)
    })?;
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let ruin = values.iter().filter(|v| **v == f64::NEG_INFINITY).count();
    let mut report = if finite.is_empty() {
        SimReport {
            label: "growth_rate".into(),
            estimate: f64::NEG_INFINITY,
            std_error: 0.0,
            reps: values.len(),
            seed: cfg.seed,
            extra: BTreeMap::new(),
        }
    } else {
        let mut r = SimReport::from_values("growth_rate", cfg.seed, &finite);
        r.reps = values.len();
        r
    };
    report
        .extra
        .insert("ruin_frequency".into(), ruin as f64 / values.len() as f64);
    Ok(report)
}
