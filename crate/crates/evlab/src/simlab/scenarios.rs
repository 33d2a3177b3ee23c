//! Replay experiments contrasting naive p-value practice with e-process
//! monitoring under optional stopping and optional continuation.

use serde::{Deserialize, Serialize};

use crate::numeric::{log_sum_exp, normal_cdf};
use crate::{EvError, Result};

use super::{replication_rng, SimConfig, SimReport};
use rand::Rng;
use rayon::prelude::*;

/// Which replay a [`ScenarioSpec`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Peek after every observation and stop at the first nominally
    /// significant naive p-value.
    StopWhenSignificant,
    /// Run a second batch only when the first lands in a "promising"
    /// p-value band, then pool.
    TwoBatchContinuation,
    /// Stop at the first occurrence of two consecutive ones in a binary
    /// stream.
    TwoOnesInARow,
}

/// Parameters of a replay experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// First and second batch sizes (two-batch continuation only).
    pub batch_sizes: (usize, usize),
    /// Half-open p-value band `(lo, hi]` triggering continuation; an empty
    /// band such as `(0, 0)` means "never continue".
    pub promising_band: (f64, f64),
    /// Hard cap on the number of observations per replication.
    pub max_n: usize,
}

impl ScenarioSpec {
    pub fn stop_when_significant(max_n: usize) -> Result<Self> {
        if max_n == 0 {
            return Err(EvError::InvalidArgument("max_n must be positive".into()));
        }
        Ok(Self {
            kind: ScenarioKind::StopWhenSignificant,
            batch_sizes: (0, 0),
            promising_band: (0.0, 0.0),
            max_n,
        })
    }

    pub fn two_batch(n1: usize, n2: usize, band: (f64, f64)) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(EvError::InvalidArgument("batch sizes must be positive".into()));
        }
        if band.0 > band.1 {
            return Err(EvError::InvalidArgument(format!(
                "promising band ({}, {}] is inverted",
                band.0, band.1
            )));
        }
        Ok(Self {
            kind: ScenarioKind::TwoBatchContinuation,
            batch_sizes: (n1, n2),
            promising_band: band,
            max_n: n1 + n2,
        })
    }

    pub fn two_ones_in_a_row(max_n: usize) -> Result<Self> {
        if max_n == 0 {
            return Err(EvError::InvalidArgument("max_n must be positive".into()));
        }
        Ok(Self {
            kind: ScenarioKind::TwoOnesInARow,
            batch_sizes: (0, 0),
            promising_band: (0.0, 0.0),
            max_n,
        })
    }
}

// Symmetric lambda grid for the Gaussian mean-zero null; the mixture
// capital has the closed form sum_j w_j exp(lambda_j S_t - t lambda_j^2 / 2).
const GAUSS_MIX_LAMBDAS: [f64; 10] =
    [-0.8, -0.4, -0.2, -0.1, -0.05, 0.05, 0.1, 0.2, 0.4, 0.8];

fn gaussian_mixture_log_capital(s: f64, t: f64) -> f64 {
    let ln_w = -(GAUSS_MIX_LAMBDAS.len() as f64).ln();
    let terms: Vec<f64> = GAUSS_MIX_LAMBDAS
        .iter()
        .map(|&l| ln_w + l * s - 0.5 * t * l * l)
        .collect();
    log_sum_exp(&terms)
}

fn two_sided_p(z: f64) -> f64 {
    2.0 * normal_cdf(-z.abs())
}

/// Result of a p-hacking replay: the naive stop-at-significance rejection
/// rate versus the e-process crossing rate on the same data streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PHackingReport {
    pub naive: SimReport,
    pub eprocess: SimReport,
}

/// Standard normal data under the null; the analyst computes the naive
/// two-sided z-test p-value after every observation and stops at the first
/// `p < alpha` (or at `max_n`). Reports the naive rejection rate and the
/// rate at which the lambda-mixture e-process reaches `1/alpha` on the
/// same (stopped) stream.
pub fn p_hacking_replay(spec: &ScenarioSpec, cfg: &SimConfig) -> Result<PHackingReport> {
    if spec.kind != ScenarioKind::StopWhenSignificant {
        return Err(EvError::InvalidArgument(format!(
            "p_hacking_replay expects a stop-when-significant spec, got {:?}",
            spec.kind
        )));
    }
    let pairs: Vec<(f64, f64)> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(cfg.seed, i as u64);
            let mut s = 0.0;
            let mut naive = 0.0;
            let mut crossed = 0.0;
            for t in 1..=spec.max_n {
                s += rng.sample::<f64, _>(rand_distr::StandardNormal);
                if gaussian_mixture_log_capital(s, t as f64) >= -cfg.alpha.ln() {
                    crossed = 1.0;
                }
                if two_sided_p(s / (t as f64).sqrt()) < cfg.alpha {
                    naive = 1.0;
                    break;
                }
            }
            (naive, crossed)
        })
        .collect();
    let naive: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let crossed: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok(PHackingReport {
        naive: SimReport::from_values("p_hacking_naive", cfg.seed, &naive),
        eprocess: SimReport::from_values("p_hacking_eprocess", cfg.seed, &crossed),
    })
}

/// Result of a two-batch continuation replay: rejection rates of four
/// analyses of the same streams.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoBatchReport {
    /// Fisher combination of the two batch p-values.
    pub fisher: SimReport,
    /// Naive z-test on the pooled sample.
    pub pooled: SimReport,
    /// Product of per-batch mixture e-values against `1/alpha`.
    pub product_e: SimReport,
    /// The product e-value converted back to a p-value, against `alpha`.
    pub calibrated_p: SimReport,
}

/// Standard normal data under the null. Batch one always runs; batch two
/// runs only when the batch-one p-value lands in the promising band
/// `(lo, hi]`. All four analyses are evaluated on each replication.
pub fn two_batch_replay(spec: &ScenarioSpec, cfg: &SimConfig) -> Result<TwoBatchReport> {
    if spec.kind != ScenarioKind::TwoBatchContinuation {
        return Err(EvError::InvalidArgument(format!(
            "two_batch_replay expects a two-batch spec, got {:?}",
            spec.kind
        )));
    }
    let (n1, n2) = spec.batch_sizes;
    let (band_lo, band_hi) = spec.promising_band;
    let rows: Vec<[f64; 4]> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(cfg.seed, i as u64);
            let s1: f64 =
                (0..n1).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).sum();
            let p1 = two_sided_p(s1 / (n1 as f64).sqrt());
            let log_e1 = gaussian_mixture_log_capital(s1, n1 as f64);
            let continued = p1 > band_lo && p1 <= band_hi;

            let (fisher_rej, pooled_rej, log_e) = if continued {
                let s2: f64 =
                    (0..n2).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).sum();
                let p2 = two_sided_p(s2 / (n2 as f64).sqrt());
                let fisher = crate::calibrate::fisher_combine(&[p1, p2]).expect("valid p-values");
                let pooled = two_sided_p((s1 + s2) / ((n1 + n2) as f64).sqrt());
                // second-batch e-value bets fresh capital on the new block
                let log_e2 = gaussian_mixture_log_capital(s2, n2 as f64);
                (fisher < cfg.alpha, pooled < cfg.alpha, log_e1 + log_e2)
            } else {
                (p1 < cfg.alpha, p1 < cfg.alpha, log_e1)
            };
            let product_rej = log_e >= -cfg.alpha.ln();
            // e-to-p: p' = min(1, 1/E)
            let calibrated_rej = (-log_e).exp().min(1.0) <= cfg.alpha;
            [
                fisher_rej as u8 as f64,
                pooled_rej as u8 as f64,
                product_rej as u8 as f64,
                calibrated_rej as u8 as f64,
            ]
        })
        .collect();
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    Ok(TwoBatchReport {
        fisher: SimReport::from_values("two_batch_fisher", cfg.seed, &col(0)),
        pooled: SimReport::from_values("two_batch_pooled", cfg.seed, &col(1)),
        product_e: SimReport::from_values("two_batch_product_e", cfg.seed, &col(2)),
        calibrated_p: SimReport::from_values("two_batch_calibrated_p", cfg.seed, &col(3)),
    })
}

/// Rejection rate of the monitored generalized likelihood ratio
/// `sup_mu prod phi(x_i - mu) / prod phi(x_i) = exp(n xbar^2 / 2)` under
/// the standard normal null, stopping at the first crossing of `1/alpha`
/// within `max_n`. The GLR is not an e-process, so this rate escapes the
/// Ville bound.
pub fn glr_inflation(max_n: usize, cfg: &SimConfig) -> Result<SimReport> {
    if max_n == 0 {
        return Err(EvError::InvalidArgument("max_n must be positive".into()));
    }
    let threshold = -cfg.alpha.ln();
    let values: Vec<f64> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            let mut rng = replication_rng(cfg.seed, i as u64);
            let mut s = 0.0;
            for t in 1..=max_n {
                s += rng.sample::<f64, _>(rand_distr::StandardNormal);
                // log GLR_t = t * xbar^2 / 2 = s^2 / (2 t)
                if s * s / (2.0 * t as f64) >= threshold {
                    return 1.0;
                }
            }
            0.0
        })
        .collect();
    let mut report = SimReport::from_values("glr_inflation", cfg.seed, &values);
    report.extra.insert("max_n".into(), max_n as f64);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{chi2_sf, golden_section_max};

    #[test]
    fn mixture_capital_is_maximized_near_matching_drift() {
        // sanity on the helper: capital grows in |s| at fixed t
        let a = gaussian_mixture_log_capital(0.0, 10.0);
        let b = gaussian_mixture_log_capital(8.0, 10.0);
        assert!(b > a);
        let x = golden_section_max(|l| l * 8.0 - 5.0 * l * l, 0.0, 2.0, 1e-10);
        assert!((x - 0.8).abs() < 1e-6);
    }

    #[test]
    fn single_look_replay_matches_fixed_level() {
        // max_n = 1: no peeking possible, so the naive rate is just alpha
        let spec = ScenarioSpec::stop_when_significant(1).unwrap();
        let cfg = SimConfig::new(2024, 40_000, 1, 0.05).unwrap();
        let report = p_hacking_replay(&spec, &cfg).unwrap();
        let se = report.naive.std_error;
        assert!((report.naive.estimate - 0.05).abs() <= 4.0 * se.max(1e-4));
        assert!(report.eprocess.estimate <= 0.05 + 3.0 * report.eprocess.std_error);
    }

    #[test]
    fn peeking_inflates_the_naive_rate() {
        let spec = ScenarioSpec::stop_when_significant(200).unwrap();
        let cfg = SimConfig::new(7, 4000, 200, 0.05).unwrap();
        let report = p_hacking_replay(&spec, &cfg).unwrap();
        assert!(report.naive.estimate > 0.05 + 5.0 * report.naive.std_error);
        assert!(report.eprocess.estimate <= 0.05 + 3.0 * report.eprocess.std_error);
    }

    #[test]
    fn never_continue_band_reduces_to_single_batch() {
        let spec = ScenarioSpec::two_batch(50, 30, (0.0, 0.0)).unwrap();
        let cfg = SimConfig::new(99, 20_000, 80, 0.05).unwrap();
        let r = two_batch_replay(&spec, &cfg).unwrap();
        for report in [&r.fisher, &r.pooled, &r.product_e, &r.calibrated_p] {
            assert!(
                report.estimate <= 0.05 + 3.0 * report.std_error,
                "{}: {} +- {}",
                report.label,
                report.estimate,
                report.std_error
            );
        }
        // with no continuation fisher and pooled coincide with the plain test
        assert_eq!(r.fisher.estimate, r.pooled.estimate);
    }

    #[test]
    fn glr_single_look_matches_chi_square_tail() {
        // at max_n = 1 the crossing event is x^2 / 2 >= ln(1/alpha), a chi^2_1 tail
        let alpha = 0.5;
        let cfg = SimConfig::new(31, 60_000, 1, alpha).unwrap();
        let report = glr_inflation(1, &cfg).unwrap();
        let exact = chi2_sf(-2.0 * alpha.ln(), 1.0).unwrap();
        assert!(
            (report.estimate - exact).abs() <= 4.0 * report.std_error,
            "{} vs {exact}",
            report.estimate
        );
    }

    #[test]
    fn spec_constructors_validate() {
        assert!(ScenarioSpec::stop_when_significant(0).is_err());
        assert!(ScenarioSpec::two_batch(0, 5, (0.0, 0.1)).is_err());
        assert!(ScenarioSpec::two_batch(5, 5, (0.2, 0.1)).is_err());
        assert!(ScenarioSpec::two_ones_in_a_row(0).is_err());
        let spec = ScenarioSpec::two_ones_in_a_row(10).unwrap();
        assert_eq!(spec.kind, ScenarioKind::TwoOnesInARow);
    }
}
