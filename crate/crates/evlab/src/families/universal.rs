//! Universal inference, the method of mixtures, and the generalized
//! likelihood ratio baseline.
//!
//! The universal-inference statistic divides a predictable plug-in
//! alternative likelihood by the null maximum likelihood refit on the full
//! prefix: `U_t = prod_i q_i(x_i) / p_t(x_i)` with `q_i` depending only on
//! `x_1..x_{i-1}` and `p_t` the null MLE on all `t` points.

use crate::evcore::{EProcessTrace, EValueSample};
use crate::families::Density;
use crate::numeric::{golden_section_max, log_sum_exp};
use crate::{EvError, Result};

/// A null family supporting maximum-likelihood fits on prefixes, with
/// sufficient statistics kept incrementally.
#[derive(Debug, Clone, Copy)]
pub enum NullFamily {
    /// The single distribution {Bernoulli(theta)}.
    BernoulliSimple { theta: f64 },
    /// All Bernoulli(theta), theta in [0, 1]. The boundary MLEs (all zeros
    /// or all ones) evaluate the density at the boundary value.
    BernoulliComposite,
    /// The single distribution {N(mean, sd^2)}.
    GaussianSimple { mean: f64, sd: f64 },
    /// N(mu, sd^2) with known sd and unknown mean.
    GaussianMeanComposite { sd: f64 },
}

struct MleState {
    family: NullFamily,
    n: f64,
    // Bernoulli: count of ones. Gaussian: running sums.
    ones: f64,
    sum: f64,
    sum_sq: f64,
    // GaussianSimple accumulates the log-likelihood directly.
    fixed_ll: f64,
}

const LN_2PI: f64 = 1.837_877_066_409_345_3;

impl MleState {
    fn new(family: NullFamily) -> Self {
        Self { family, n: 0.0, ones: 0.0, sum: 0.0, sum_sq: 0.0, fixed_ll: 0.0 }
    }

    fn push(&mut self, x: f64) -> Result<()> {
        match self.family {
            NullFamily::BernoulliSimple { theta } => {
                let lp = if x == 1.0 {
                    theta.ln()
                } else if x == 0.0 {
                    (1.0 - theta).ln()
                } else {
                    return Err(EvError::NonBinarySymbol { index: self.n as usize, value: 255 });
                };
                self.fixed_ll += lp;
            }
            NullFamily::BernoulliComposite => {
                if x == 1.0 {
                    self.ones += 1.0;
                } else if x != 0.0 {
                    return Err(EvError::NonBinarySymbol { index: self.n as usize, value: 255 });
                }
            }
            NullFamily::GaussianSimple { mean, sd } => {
                self.fixed_ll += crate::numeric::normal_log_pdf(x, mean, sd);
            }
            NullFamily::GaussianMeanComposite { .. } => {
                self.sum += x;
                self.sum_sq += x * x;
            }
        }
        self.n += 1.0;
        Ok(())
    }

    /// Maximized null log-likelihood on the pushed prefix.
    fn max_log_lik(&self) -> f64 {
        if self.n == 0.0 {
            return 0.0;
        }
        match self.family {
            NullFamily::BernoulliSimple { .. } | NullFamily::GaussianSimple { .. } => self.fixed_ll,
            NullFamily::BernoulliComposite => {
                let k = self.ones;
                let n = self.n;
                let term = |count: f64| if count > 0.0 { count * (count / n).ln() } else { 0.0 };
                term(k) + term(n - k)
            }
            NullFamily::GaussianMeanComposite { sd } => {
                let rss = self.sum_sq - self.sum * self.sum / self.n;
                -0.5 * self.n * (LN_2PI + 2.0 * sd.ln()) - rss.max(0.0) / (2.0 * sd * sd)
            }
        }
    }
}

/// A predictable density estimator for the alternative: the density
/// assigned to each point is fit on strictly earlier points only.
pub trait PlugIn {
    /// Log-density for `x` under the current fit, then absorbs `x`.
    fn log_q_next(&mut self, x: f64) -> f64;
}

/// Plug-in that always predicts with a fixed model.
pub struct FixedPlugIn<'a, M: Density + ?Sized>(pub &'a M);

impl<M: Density + ?Sized> PlugIn for FixedPlugIn<'_, M> {
    fn log_q_next(&mut self, x: f64) -> f64 {
        self.0.log_pdf(x)
    }
}

/// Krichevsky-Trofimov add-one-half predictive plug-in for binary data.
#[derive(Default)]
pub struct KtPlugIn {
    zeros: f64,
    ones: f64,
}

impl PlugIn for KtPlugIn {
    fn log_q_next(&mut self, x: f64) -> f64 {
        let n = self.zeros + self.ones;
        let lp = if x == 1.0 {
            ((self.ones + 0.5) / (n + 1.0)).ln()
        } else if x == 0.0 {
            ((self.zeros + 0.5) / (n + 1.0)).ln()
        } else {
            f64::NAN
        };
        if x == 1.0 {
            self.ones += 1.0;
        } else if x == 0.0 {
            self.zeros += 1.0;
        }
        lp
    }
}

/// Universal inference: returns the batch value `U_T` together with the
/// running trace (the null MLE is refit at every prefix).
pub fn universal_inference(
    null: NullFamily,
    plugin: &mut dyn PlugIn,
    data: &[f64],
) -> Result<(EValueSample, EProcessTrace)> {
    let mut state = MleState::new(null);
    let mut log_num = 0.0;
    let mut prev_log_u = 0.0;
    let mut ln_factors = Vec::with_capacity(data.len());
    for (i, &x) in data.iter().enumerate() {
        if x.is_nan() {
            return Err(EvError::InvalidArgument(format!("NaN observation at index {i}")));
        }
        let lq = plugin.log_q_next(x);
        if lq.is_nan() {
            return Err(EvError::InvalidArgument(format!(
                "plug-in rejected observation {x} at index {i}"
            )));
        }
        log_num += lq;
        state.push(x)?;
        let log_u = log_num - state.max_log_lik();
        ln_factors.push(log_u - prev_log_u);
        prev_log_u = log_u;
    }
    let trace = EProcessTrace::from_ln_factors(ln_factors)?;
    Ok((EValueSample::new(trace.final_capital(), "universal")?, trace))
}

/// Method of mixtures: `V_t = sum_j w_j prod_i q_j(x_i) / p_t(x_i)`,
/// accumulated in log space with max-shifted summation.
pub fn mixture_universal(
    null: NullFamily,
    alt_grid: &[&dyn Density],
    prior: &[f64],
    data: &[f64],
) -> Result<(EValueSample, EProcessTrace)> {
    if alt_grid.is_empty() {
        return Err(EvError::InvalidArgument("empty alternative grid".into()));
    }
    if alt_grid.len() != prior.len() {
        return Err(EvError::LengthMismatch { left: alt_grid.len(), right: prior.len() });
    }
    let wsum: f64 = prior.iter().sum();
    if prior.iter().any(|&w| w.is_nan() || w < 0.0) || (wsum - 1.0).abs() > 1e-9 {
        return Err(EvError::InvalidArgument(format!(
            "prior weights must be nonnegative and sum to 1, got sum {wsum}"
        )));
    }
    let mut state = MleState::new(null);
    let mut log_terms: Vec<f64> = prior.iter().map(|&w| w.ln()).collect();
    let mut prev_log_v = 0.0;
    let mut ln_factors = Vec::with_capacity(data.len());
    for (i, &x) in data.iter().enumerate() {
        if x.is_nan() {
            return Err(EvError::InvalidArgument(format!("NaN observation at index {i}")));
        }
        for (term, q) in log_terms.iter_mut().zip(alt_grid) {
            *term += q.log_pdf(x);
        }
        state.push(x)?;
        let log_v = log_sum_exp(&log_terms) - state.max_log_lik();
        ln_factors.push(log_v - prev_log_v);
        prev_log_v = log_v;
    }
    let trace = EProcessTrace::from_ln_factors(ln_factors)?;
    Ok((EValueSample::new(trace.final_capital(), "mixture")?, trace))
}

/// A parameter set for GLR suprema.
#[derive(Debug, Clone)]
pub enum ParamSet {
    Grid(Vec<f64>),
    Interval { lo: f64, hi: f64 },
}

/// A one-parameter likelihood for GLR evaluation.
pub trait ParamFamily {
    fn log_lik(&self, theta: f64, data: &[f64]) -> f64;
}

/// Gaussian location family with known sd.
pub struct GaussianMeanFamily {
    pub sd: f64,
}

impl ParamFamily for GaussianMeanFamily {
    fn log_lik(&self, theta: f64, data: &[f64]) -> f64 {
        data.iter().map(|&x| crate::numeric::normal_log_pdf(x, theta, self.sd)).sum()
    }
}

/// Bernoulli family over theta in [0, 1].
pub struct BernoulliFamily;

impl ParamFamily for BernoulliFamily {
    fn log_lik(&self, theta: f64, data: &[f64]) -> f64 {
        let ones = data.iter().filter(|&&x| x == 1.0).count() as f64;
        let zeros = data.len() as f64 - ones;
        let t1 = if ones > 0.0 { ones * theta.ln() } else { 0.0 };
        let t0 = if zeros > 0.0 { zeros * (1.0 - theta).ln() } else { 0.0 };
        t1 + t0
    }
}

const GLR_PARAM_TOL: f64 = 1e-8;
const GLR_SCAN_POINTS: usize = 201;

fn sup_log_lik<F: ParamFamily + ?Sized>(family: &F, set: &ParamSet, data: &[f64]) -> Result<f64> {
    match set {
        ParamSet::Grid(grid) => {
            if grid.is_empty() {
                return Err(EvError::InvalidArgument("empty parameter grid".into()));
            }
            Ok(grid
                .iter()
                .map(|&th| family.log_lik(th, data))
                .fold(f64::NEG_INFINITY, f64::max))
        }
        ParamSet::Interval { lo, hi } => {
            if !(lo <= hi) {
                return Err(EvError::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
            }
            if lo == hi {
                return Ok(family.log_lik(*lo, data));
            }
            // coarse scan, then golden-section refinement around the best point
            let step = (hi - lo) / (GLR_SCAN_POINTS - 1) as f64;
            let mut best = (*lo, f64::NEG_INFINITY);
            for i in 0..GLR_SCAN_POINTS {
                let th = lo + i as f64 * step;
                let ll = family.log_lik(th, data);
                if ll > best.1 {
                    best = (th, ll);
                }
            }
            let a = (best.0 - step).max(*lo);
            let b = (best.0 + step).min(*hi);
            let th = golden_section_max(|t| family.log_lik(t, data), a, b, GLR_PARAM_TOL);
            Ok(family.log_lik(th, data).max(best.1))
        }
    }
}

/// Generalized likelihood ratio: ratio of likelihood suprema over the
/// alternative and null parameter sets. Empty data gives 1 by the empty
/// product convention.
pub fn glr<F: ParamFamily + ?Sized>(
    null_set: &ParamSet,
    alt_set: &ParamSet,
    family: &F,
    data: &[f64],
) -> Result<f64> {
    // validate sets even for empty data
    let sup_null = sup_log_lik(family, null_set, data)?;
    let sup_alt = sup_log_lik(family, alt_set, data)?;
    if data.is_empty() {
        return Ok(1.0);
    }
    Ok((sup_alt - sup_null).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::BernoulliModel;

    #[test]
    fn simple_null_with_matching_plugin_is_flat() {
        let model = BernoulliModel::new(0.5).unwrap();
        let mut plugin = FixedPlugIn(&model);
        let (u, trace) = universal_inference(
            NullFamily::BernoulliSimple { theta: 0.5 },
            &mut plugin,
            &[1.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        assert!((u.value - 1.0).abs() < 1e-12);
        assert!(trace.capital().iter().all(|&k| (k - 1.0).abs() < 1e-12));
    }

    #[test]
    fn composite_bernoulli_single_one() {
        // plugin Bernoulli(0.5), data (1,): MLE is the point mass at 1, so
        // the denominator is 1 and U_1 = 0.5.
        let model = BernoulliModel::new(0.5).unwrap();
        let mut plugin = FixedPlugIn(&model);
        let (u, _) =
            universal_inference(NullFamily::BernoulliComposite, &mut plugin, &[1.0]).unwrap();
        assert!((u.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn composite_bernoulli_mle_matches_grid_sup() {
        // independent oracle: brute-force sup over a 10^4-point theta grid
        let data = [1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0];
        let mut state = MleState::new(NullFamily::BernoulliComposite);
        for &x in &data {
            state.push(x).unwrap();
        }
        let fam = BernoulliFamily;
        let grid_sup = (0..=10_000)
            .map(|i| fam.log_lik(i as f64 / 10_000.0, &data))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((state.max_log_lik() - grid_sup).abs() < 1e-6);
        // and the all-ones boundary case attains theta = 1
        let ones = [1.0; 5];
        let grid_sup = (0..=10_000)
            .map(|i| fam.log_lik(i as f64 / 10_000.0, &ones))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((grid_sup - 0.0).abs() < 1e-12);
    }

    #[test]
    fn mixture_degenerate_and_symmetric_cases() {
        let b3 = BernoulliModel::new(0.3).unwrap();
        let b7 = BernoulliModel::new(0.7).unwrap();
        let data = [1.0, 0.0, 1.0];
        // single-element grid equals universal inference with constant plugin
        let (v, _) = mixture_universal(
            NullFamily::BernoulliSimple { theta: 0.5 },
            &[&b7],
            &[1.0],
            &data,
        )
        .unwrap();
        let mut plugin = FixedPlugIn(&b7);
        let (u, _) =
            universal_inference(NullFamily::BernoulliSimple { theta: 0.5 }, &mut plugin, &data)
                .unwrap();
        assert!((v.value - u.value).abs() < 1e-12 * u.value);
        // two identical grid elements collapse to one
        let (v2, _) = mixture_universal(
            NullFamily::BernoulliSimple { theta: 0.5 },
            &[&b7, &b7],
            &[0.5, 0.5],
            &data,
        )
        .unwrap();
        assert!((v2.value - v.value).abs() < 1e-12 * v.value);
        // symmetric mixture at a single 1 gives exactly 1
        let (v3, _) = mixture_universal(
            NullFamily::BernoulliSimple { theta: 0.5 },
            &[&b3, &b7],
            &[0.5, 0.5],
            &[1.0],
        )
        .unwrap();
        assert!((v3.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn glr_examples() {
        let fam = GaussianMeanFamily { sd: 1.0 };
        let null = ParamSet::Grid(vec![0.0]);
        // alt set = null set
        assert!((glr(&null, &null, &fam, &[0.3, -0.2]).unwrap() - 1.0).abs() < 1e-12);
        // n = 4, sample mean 1: GLR = exp(n xbar^2 / 2) = e^2
        let data = [1.3, 0.7, 1.1, 0.9];
        let alt = ParamSet::Interval { lo: -10.0, hi: 10.0 };
        let g = glr(&null, &alt, &fam, &data).unwrap();
        assert!((g - 2f64.exp()).abs() < 1e-6 * 2f64.exp());
        // empty data
        assert!((glr(&null, &alt, &fam, &[]).unwrap() - 1.0).abs() < 1e-15);
        // empty sets rejected
        assert!(glr(&ParamSet::Grid(vec![]), &alt, &fam, &data).is_err());
    }

    #[test]
    fn glr_solver_attains_analytic_maximizer() {
        // the interval supremum must land on mu = xbar to 1e-8 parameter tolerance
        let fam = GaussianMeanFamily { sd: 1.0 };
        let data = [1.3, 0.7, 1.1, 0.9];
        let xbar = 1.0;
        let analytic = fam.log_lik(xbar, &data);
        let sup =
            sup_log_lik(&fam, &ParamSet::Interval { lo: -10.0, hi: 10.0 }, &data).unwrap();
        assert!((sup - analytic).abs() < 1e-10);
    }

    #[test]
    fn glr_dominates_universal_inference() {
        // sup over the alternative set dominates any fixed plug-in from it
        let data = [1.0, 1.0, 0.0, 1.0, 1.0];
        let model = BernoulliModel::new(0.7).unwrap();
        let mut plugin = FixedPlugIn(&model);
        let (u, _) =
            universal_inference(NullFamily::BernoulliComposite, &mut plugin, &data).unwrap();
        let g = glr(
            &ParamSet::Interval { lo: 0.0, hi: 1.0 },
            &ParamSet::Interval { lo: 0.0, hi: 1.0 },
            &BernoulliFamily,
            &data,
        )
        .unwrap();
        assert!(g >= u.value - 1e-12);
    }
}
