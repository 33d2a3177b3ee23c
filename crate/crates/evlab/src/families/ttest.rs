//! The right-Haar t-test Bayes factor e-process: a discrete prior on the
//! standardized effect size, an improper 1/sigma prior on the nuisance
//! scale, and one-dimensional integrals over log sigma evaluated by
//! adaptive quadrature with data-scaled bounds.

use crate::evcore::EProcessTrace;
use crate::numeric::{adaptive_simpson_abs, log_sum_exp};
use crate::{EvError, Result};

/// A proper discrete prior on the standardized effect size delta = mu / sigma.
#[derive(Debug, Clone)]
pub struct TTestPrior {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl TTestPrior {
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(EvError::InvalidArgument("prior support is empty".into()));
        }
        if support.len() != weights.len() {
            return Err(EvError::LengthMismatch { left: support.len(), right: weights.len() });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(EvError::InvalidArgument(format!(
                "prior weights must be nonnegative and sum to 1, got sum {sum}"
            )));
        }
        Ok(Self { support, weights })
    }

    pub fn point_mass(delta: f64) -> Self {
        Self { support: vec![delta], weights: vec![1.0] }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const QUAD_REL_TOL: f64 = 1e-8;
const SCAN_POINTS: usize = 256;
const SCALE_SPAN: f64 = 1e4;

/// Log of `int_0^inf sigma^{-t-1} prod_i rho((x_i - sigma delta) / sigma) dsigma`
/// via the substitution u = log sigma, integrated over
/// `[log(s / 1e4), log(s * 1e4)]` with s the root-mean-square of the data.
fn log_scale_integral(data: &[f64], delta: f64) -> Result<f64> {
    let t = data.len() as f64;
    let s = (data.iter().map(|&x| x * x).sum::<f64>() / t).sqrt();
    debug_assert!(s > 0.0);
    let lo = (s / SCALE_SPAN).ln();
    let hi = (s * SCALE_SPAN).ln();

    let log_f = |u: f64| -> f64 {
        let inv_sigma = (-u).exp();
        let mut acc = -t * u - 0.5 * t * LN_2PI;
        for &x in data {
            let z = x * inv_sigma - delta;
            acc -= 0.5 * z * z;
        }
        acc
    };

    // coarse scan for the peak, then integrate the max-shifted integrand
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut shift = f64::NEG_INFINITY;
    let mut coarse = 0.0;
    for i in 0..SCAN_POINTS {
        shift = shift.max(log_f(lo + i as f64 * step));
    }
    for i in 0..SCAN_POINTS {
        coarse += (log_f(lo + i as f64 * step) - shift).exp() * step;
    }
    let integral =
        adaptive_simpson_abs(|u| (log_f(u) - shift).exp(), lo, hi, 64, QUAD_REL_TOL * coarse)?;
    if !(integral > 0.0) {
        return Err(EvError::QuadratureNonConvergence { rel_tol: QUAD_REL_TOL });
    }
    Ok(shift + integral.ln())
}

/// Log Bayes factor `B_t` on the full data prefix. A prefix of all-zero
/// observations gives `B = 1` (the integrals coincide trivially).
pub fn ttest_log_bf(prior: &TTestPrior, data: &[f64]) -> Result<f64> {
    if data.is_empty() {
        return Err(EvError::InvalidArgument("t-test e-process needs at least one point".into()));
    }
    if data.iter().any(|x| x.is_nan()) {
        return Err(EvError::InvalidArgument("NaN observation".into()));
    }
    if data.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let log_den = log_scale_integral(data, 0.0)?;
    let terms: Vec<f64> = prior
        .support
        .iter()
        .zip(&prior.weights)
        .filter(|(_, &w)| w > 0.0)
        .map(|(&d, &w)| Ok(w.ln() + log_scale_integral(data, d)?))
        .collect::<Result<_>>()?;
    Ok(log_sum_exp(&terms) - log_den)
}

/// The e-process trace `B_1..B_T`: the Bayes factor recomputed on every
/// prefix. Quadrature non-convergence is signaled, never truncated.
pub fn ttest_eprocess(prior: &TTestPrior, data: &[f64]) -> Result<EProcessTrace> {
    if data.is_empty() {
        return Err(EvError::InvalidArgument("t-test e-process needs at least one point".into()));
    }
    let mut ln_factors = Vec::with_capacity(data.len());
    let mut prev = 0.0;
    for t in 1..=data.len() {
        let log_b = ttest_log_bf(prior, &data[..t])?;
        ln_factors.push(log_b - prev);
        prev = log_b;
    }
    EProcessTrace::from_ln_factors(ln_factors)
}
