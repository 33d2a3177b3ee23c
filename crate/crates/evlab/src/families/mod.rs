//! Concrete hypothesis models and e-statistic constructors: likelihood
//! ratios, Gaussian betting factors, bounded-mean betting processes,
//! universal inference, the right-Haar t-test Bayes factor, and the
//! generalized likelihood ratio baseline.

mod bounded;
mod ttest;
mod universal;

pub use bounded::{bounded_mean_eprocess, BoundedMeanNull, LambdaStrategy};
pub use ttest::{ttest_eprocess, ttest_log_bf, TTestPrior};
pub use universal::{
    glr, mixture_universal, universal_inference, BernoulliFamily, FixedPlugIn,
    GaussianMeanFamily, KtPlugIn, NullFamily, ParamFamily, ParamSet, PlugIn,
};

use rand::Rng;
use rand_distr::Distribution;

use crate::evcore::{EProcessTrace, EValueSample};
use crate::numeric::normal_log_pdf;
use crate::{EvError, Result};

/// A distribution exposing a log-density. Dyn-compatible, so mixtures can
/// hold heterogeneous components.
pub trait Density: Send + Sync {
    fn log_pdf(&self, x: f64) -> f64;
}

/// A [`Density`] that can also be sampled.
pub trait Model: Density {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Gaussian with the given mean and standard deviation.
#[derive(Debug, Clone, Copy)]
pub struct GaussianModel {
    pub mean: f64,
    pub sd: f64,
}

impl GaussianModel {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) || !mean.is_finite() {
            return Err(EvError::InvalidArgument(format!(
                "Gaussian requires finite mean and sd > 0, got mean = {mean}, sd = {sd}"
            )));
        }
        Ok(Self { mean, sd })
    }
}

impl Density for GaussianModel {
    fn log_pdf(&self, x: f64) -> f64 {
        normal_log_pdf(x, self.mean, self.sd)
    }
}

impl Model for GaussianModel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rand_distr::Normal::new(self.mean, self.sd).unwrap().sample(rng)
    }
}

/// Bernoulli over {0, 1}.
#[derive(Debug, Clone, Copy)]
pub struct BernoulliModel {
    pub theta: f64,
}

impl BernoulliModel {
    pub fn new(theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(EvError::InvalidArgument(format!(
                "Bernoulli parameter must lie in [0, 1], got {theta}"
            )));
        }
        Ok(Self { theta })
    }
}

impl Density for BernoulliModel {
    fn log_pdf(&self, x: f64) -> f64 {
        if x == 1.0 {
            self.theta.ln()
        } else if x == 0.0 {
            (1.0 - self.theta).ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

impl Model for BernoulliModel {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if rng.gen::<f64>() < self.theta {
            1.0
        } else {
            0.0
        }
    }
}

/// Likelihood-ratio e-process for a simple null against a simple
/// alternative on iid data: factor `q(x_t)/p(x_t)` per step.
///
/// A point with null density zero but positive alternative density is a
/// null-support violation; the capital becomes `+inf` from there on.
pub fn lr_eprocess<P: Density + ?Sized, Q: Density + ?Sized>(
    null: &P,
    alt: &Q,
    data: &[f64],
) -> Result<EProcessTrace> {
    let mut ln_factors = Vec::with_capacity(data.len());
    for (i, &x) in data.iter().enumerate() {
        if x.is_nan() {
            return Err(EvError::InvalidArgument(format!("NaN observation at index {i}")));
        }
        let lp = null.log_pdf(x);
        let lq = alt.log_pdf(x);
        let lf = if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
            0.0 // both supports exclude x; the ratio is taken as 1
        } else {
            lq - lp
        };
        ln_factors.push(lf);
    }
    EProcessTrace::from_ln_factors(ln_factors)
}

/// Gaussian e-variable `exp(lambda * x - lambda^2 sigma^2 / 2)` for the
/// null N(0, sigma^2); equals the likelihood-ratio factor of
/// N(sigma^2 lambda, sigma^2) against N(0, sigma^2).
pub fn gaussian_evar(lambda: f64, sigma: f64, x: f64) -> Result<EValueSample> {
    if !(sigma > 0.0) {
        return Err(EvError::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    if lambda.is_nan() || x.is_nan() {
        return Err(EvError::InvalidArgument("NaN input".into()));
    }
    EValueSample::new((lambda * x - 0.5 * lambda * lambda * sigma * sigma).exp(), "gaussian")
}
