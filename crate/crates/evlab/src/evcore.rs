//! Core algebra of e-values and e-processes.
//!
//! An e-value is a nonnegative number whose expectation is at most 1 under
//! every null distribution. An e-process is the running capital of a
//! sequential betting game against the null; its value at any stopping time
//! is again an e-value. This module implements the operations that are
//! independent of how the underlying bets were constructed: products,
//! convex mixtures, Markov conversion to p-values, Ville-threshold
//! crossing, evaluation at (truncated) stopping times, and the
//! dominating-likelihood-ratio construction on finite spaces.

use std::cell::Cell;

use crate::{EvError, Result};

/// A realized e-value: nonnegative, possibly `+inf` (a likelihood ratio with
/// null density zero is legal and absorbs products).
#[derive(Debug, Clone, PartialEq)]
pub struct EValueSample {
    pub value: f64,
    pub label: String,
}

impl EValueSample {
    pub fn new(value: f64, label: impl Into<String>) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(EvError::InvalidArgument(format!(
                "e-value must be nonnegative, got {value}"
            )));
        }
        Ok(Self { value, label: label.into() })
    }
}

/// A realized e-process: per-step betting factors and the running capital,
/// accumulated in natural-log space with explicit absorbing states.
///
/// Invariants maintained by construction:
/// - `capital[t]` is the product of `factors[..=t]` (log accumulation);
/// - once capital hits exactly 0 it stays 0;
/// - the three sequences have equal length.
#[derive(Debug, Clone)]
pub struct EProcessTrace {
    factors: Vec<f64>,
    capital: Vec<f64>,
    log_capital: Vec<f64>,
}

impl EProcessTrace {
    /// Builds a trace from per-step factors.
    pub fn from_factors(factors: Vec<f64>) -> Result<Self> {
        let ln: Vec<f64> = factors.iter().map(|f| f.ln()).collect();
        Self::build(factors, ln)
    }

    /// Builds a trace from the natural logs of per-step factors
    /// (`-inf` encodes a zero factor, `+inf` an infinite one).
    pub fn from_ln_factors(ln_factors: Vec<f64>) -> Result<Self> {
        let factors: Vec<f64> = ln_factors.iter().map(|l| l.exp()).collect();
        Self::build(factors, ln_factors)
    }

    fn build(factors: Vec<f64>, ln_factors: Vec<f64>) -> Result<Self> {
        let mut capital = Vec::with_capacity(factors.len());
        let mut log_capital = Vec::with_capacity(factors.len());
        let mut log_sum = 0.0_f64;
        let mut dead = false; // absorbing zero
        let mut infinite = false;
        for (i, (&f, &lf)) in factors.iter().zip(&ln_factors).enumerate() {
            if f.is_nan() || f < 0.0 {
                return Err(EvError::InvalidArgument(format!(
                    "factor {f} at step {i} is not a nonnegative real"
                )));
            }
            // Zero absorbs before infinity: a ruined bettor stays ruined.
            if dead || f == 0.0 {
                dead = true;
            } else if f.is_infinite() {
                infinite = true;
            }
            if dead {
                capital.push(0.0);
                log_capital.push(f64::NEG_INFINITY);
            } else if infinite {
                capital.push(f64::INFINITY);
                log_capital.push(f64::INFINITY);
            } else {
                log_sum += lf;
                capital.push(log_sum.exp());
                log_capital.push(log_sum);
            }
        }
        Ok(Self { factors, capital, log_capital })
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    pub fn capital(&self) -> &[f64] {
        &self.capital
    }

    pub fn log_capital(&self) -> &[f64] {
        &self.log_capital
    }

    /// Capital at the end of the trace; 1 for an empty trace.
    pub fn final_capital(&self) -> f64 {
        *self.capital.last().unwrap_or(&1.0)
    }

    /// Natural-log capital at the end of the trace; 0 for an empty trace.
    pub fn final_log_capital(&self) -> f64 {
        *self.log_capital.last().unwrap_or(&0.0)
    }
}

/// Prefix-guarded view of a data sequence: a stopping rule deciding at time
/// `t` may read indices `0..t` only. Out-of-prefix reads are recorded and
/// surface as an error after the rule returns.
pub struct PrefixView<'a> {
    data: &'a [f64],
    limit: usize,
    violation: Cell<Option<usize>>,
}

impl<'a> PrefixView<'a> {
    fn new(data: &'a [f64], limit: usize) -> Self {
        Self { data, limit, violation: Cell::new(None) }
    }

    /// Number of revealed observations.
    pub fn len(&self) -> usize {
        self.limit
    }

    pub fn is_empty(&self) -> bool {
        self.limit == 0
    }

    /// Reads observation `i`. Reading beyond the revealed prefix flags a
    /// violation and yields NaN.
    pub fn get(&self, i: usize) -> f64 {
        if i >= self.limit {
            self.violation.set(Some(i));
            return f64::NAN;
        }
        self.data[i]
    }

    /// The revealed prefix as a slice.
    pub fn prefix(&self) -> &[f64] {
        &self.data[..self.limit]
    }
}

/// A stopping rule with a hard horizon: truncation makes every rule a
/// bounded stopping time.
pub enum StoppingRule {
    /// Stop at a fixed time `n`.
    FixedHorizon { n: usize },
    /// Stop the first time capital reaches `threshold`, else at `horizon_cap`.
    FirstCrossing { threshold: f64, horizon_cap: usize },
    /// Stop the first time the predicate, shown the revealed prefix, says
    /// stop; else at `horizon_cap`.
    Predicate {
        rule: Box<dyn Fn(&PrefixView) -> bool + Send + Sync>,
        horizon_cap: usize,
    },
}

impl StoppingRule {
    pub fn horizon_cap(&self) -> usize {
        match self {
            StoppingRule::FixedHorizon { n } => *n,
            StoppingRule::FirstCrossing { horizon_cap, .. } => *horizon_cap,
            StoppingRule::Predicate { horizon_cap, .. } => *horizon_cap,
        }
    }
}

/// Product of e-values (Example: batches combined by multiplication).
/// Computed in log space when all inputs are strictly positive; an exact
/// zero short-circuits. The empty product is 1.
pub fn ev_product(values: &[EValueSample]) -> EValueSample {
    if values.iter().any(|v| v.value == 0.0) {
        return EValueSample { value: 0.0, label: "product".into() };
    }
    if values.iter().any(|v| v.value.is_infinite()) {
        return EValueSample { value: f64::INFINITY, label: "product".into() };
    }
    let log_sum: f64 = values.iter().map(|v| v.value.ln()).sum();
    EValueSample { value: log_sum.exp(), label: "product".into() }
}

/// Convex mixture of e-values; valid for arbitrarily dependent inputs as
/// long as the weights are nonnegative and sum to at most 1.
pub fn ev_convex_mix(values: &[EValueSample], weights: &[f64]) -> Result<EValueSample> {
    if values.len() != weights.len() {
        return Err(EvError::LengthMismatch { left: values.len(), right: weights.len() });
    }
    let mut sum = 0.0;
    for &w in weights {
        if w.is_nan() || w < 0.0 {
            return Err(EvError::InvalidArgument(format!("weight {w} is negative")));
        }
        sum += w;
    }
    if sum > 1.0 + 1e-12 {
        return Err(EvError::WeightSumExceedsOne { sum });
    }
    let mut acc = 0.0;
    for (v, &w) in values.iter().zip(weights) {
        if w > 0.0 {
            acc += w * v.value;
        }
    }
    EValueSample::new(acc, "mix")
}

/// Markov conversion of an e-value to a p-value: `min(1, 1/e)`.
pub fn e_to_p(e: &EValueSample) -> f64 {
    if e.value.is_infinite() {
        0.0
    } else if e.value <= 1.0 {
        1.0
    } else {
        1.0 / e.value
    }
}

/// Smallest 1-based time at which capital reaches `1/alpha`, if any.
/// Ties count as a crossing (`>=`, matching Ville's inequality as stated).
pub fn first_crossing(trace: &EProcessTrace, alpha: f64) -> Result<Option<usize>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(EvError::InvalidArgument(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let threshold = 1.0 / alpha;
    Ok(trace.capital().iter().position(|&k| k >= threshold).map(|i| i + 1))
}

/// Capital at the rule's (truncated) stop index on this data. The rule sees
/// the data only through a prefix-guarded view.
pub fn stopped_value(
    trace: &EProcessTrace,
    rule: &StoppingRule,
    data: &[f64],
) -> Result<EValueSample> {
    let cap = rule.horizon_cap();
    if cap == 0 || cap > trace.len() {
        return Err(EvError::InvalidArgument(format!(
            "horizon cap {cap} outside trace of length {}",
            trace.len()
        )));
    }
    let tau = match rule {
        StoppingRule::FixedHorizon { n } => *n,
        StoppingRule::FirstCrossing { threshold, horizon_cap } => trace.capital()[..*horizon_cap]
            .iter()
            .position(|&k| k >= *threshold)
            .map(|i| i + 1)
            .unwrap_or(*horizon_cap),
        StoppingRule::Predicate { rule, horizon_cap } => {
            let mut stop_at = *horizon_cap;
            for t in 1..=*horizon_cap {
                let view = PrefixView::new(data, t);
                let stop = rule(&view);
                if let Some(index) = view.violation.get() {
                    return Err(EvError::PrefixViolation { index, prefix: t });
                }
                if stop {
                    stop_at = t;
                    break;
                }
            }
            stop_at
        }
    };
    EValueSample::new(trace.capital()[tau - 1], "stopped")
}

/// A finite outcome space with a probability mass per atom.
#[derive(Debug, Clone)]
pub struct FiniteSpace {
    outcomes: Vec<String>,
    mass: Vec<f64>,
}

impl FiniteSpace {
    pub fn new(outcomes: Vec<String>, mass: Vec<f64>) -> Result<Self> {
        if outcomes.len() != mass.len() {
            return Err(EvError::LengthMismatch { left: outcomes.len(), right: mass.len() });
        }
        if mass.iter().any(|&m| m.is_nan() || m < 0.0) {
            return Err(EvError::InvalidArgument("masses must be nonnegative".into()));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EvError::InvalidArgument(format!(
                "masses sum to {total:.17}, expected 1"
            )));
        }
        Ok(Self { outcomes, mass })
    }

    /// Space over atoms `"0".."n-1"` with the given masses.
    pub fn from_mass(mass: Vec<f64>) -> Result<Self> {
        let outcomes = (0..mass.len()).map(|i| i.to_string()).collect();
        Self::new(outcomes, mass)
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }
}

/// Dominating likelihood ratio: given an e-variable `e` for `p` evaluated
/// atomwise, returns the distribution `q = p * e / E_p[e]` (or `p` itself
/// when the mean is zero). The density ratio `q/p` then dominates `e`
/// pointwise, with equality everywhere when `E_p[e] = 1`.
pub fn dominating_lr(space: &FiniteSpace, e: &[f64]) -> Result<FiniteSpace> {
    if e.len() != space.mass.len() {
        return Err(EvError::LengthMismatch { left: e.len(), right: space.mass.len() });
    }
    if e.iter().any(|&v| v.is_nan() || v < 0.0) {
        return Err(EvError::InvalidArgument("e-variable must be nonnegative atomwise".into()));
    }
    let mean: f64 = space.mass.iter().zip(e).map(|(&p, &ev)| p * ev).sum();
    if mean > 1.0 + 1e-9 {
        return Err(EvError::MeanExceedsOne { mean });
    }
    if mean == 0.0 {
        return Ok(space.clone());
    }
    let q: Vec<f64> = space.mass.iter().zip(e).map(|(&p, &ev)| p * ev / mean).collect();
    // Renormalization is exact up to rounding; FiniteSpace::new re-checks.
    FiniteSpace::new(space.outcomes.clone(), q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ev(v: f64) -> EValueSample {
        EValueSample::new(v, "t").unwrap()
    }

    #[test]
    fn product_examples() {
        assert_eq!(ev_product(&[ev(2.0), ev(3.0)]).value, 6.0);
        assert_eq!(ev_product(&[]).value, 1.0);
        assert_eq!(ev_product(&[ev(1.5), ev(0.0)]).value, 0.0);
        assert_eq!(ev_product(&[ev(2.0), ev(f64::INFINITY)]).value, f64::INFINITY);
        // zero short-circuits even alongside an infinity
        assert_eq!(ev_product(&[ev(0.0), ev(f64::INFINITY)]).value, 0.0);
    }

    #[test]
    fn convex_mix_examples() {
        let m = ev_convex_mix(&[ev(2.0), ev(0.0)], &[0.5, 0.5]).unwrap();
        assert_eq!(m.value, 1.0);
        let m = ev_convex_mix(&[ev(5.0)], &[1.0]).unwrap();
        assert_eq!(m.value, 5.0);
        let m = ev_convex_mix(&[ev(4.0), ev(4.0), ev(4.0)], &[1.0 / 3.0; 3]).unwrap();
        assert!((m.value - 4.0).abs() < 1e-12);
        assert!(ev_convex_mix(&[ev(1.0)], &[1.1]).is_err());
        assert!(ev_convex_mix(&[ev(1.0), ev(2.0)], &[0.5]).is_err());
    }

    #[test]
    fn e_to_p_examples() {
        assert_eq!(e_to_p(&ev(20.0)), 0.05);
        assert_eq!(e_to_p(&ev(0.0)), 1.0);
        assert_eq!(e_to_p(&ev(1.0)), 1.0);
        assert_eq!(e_to_p(&ev(f64::INFINITY)), 0.0);
    }

    #[test]
    fn first_crossing_examples() {
        let t = EProcessTrace::from_factors(vec![1.0, 3.0, 25.0 / 3.0]).unwrap();
        assert_eq!(first_crossing(&t, 0.05).unwrap(), Some(3));
        let t = EProcessTrace::from_factors(vec![1.0; 5]).unwrap();
        assert_eq!(first_crossing(&t, 0.05).unwrap(), None);
        let t = EProcessTrace::from_factors(vec![30.0, 2.0 / 30.0]).unwrap();
        assert_eq!(first_crossing(&t, 0.05).unwrap(), Some(1));
        assert!(first_crossing(&t, 0.0).is_err());
        assert!(first_crossing(&t, 1.0).is_err());
    }

    #[test]
    fn stopped_value_examples() {
        // capital (1.5, 0.8, 4)
        let t = EProcessTrace::from_factors(vec![1.5, 0.8 / 1.5, 5.0]).unwrap();
        let v = stopped_value(&t, &StoppingRule::FixedHorizon { n: 2 }, &[0.0; 3]).unwrap();
        assert!((v.value - 0.8).abs() < 1e-12);

        // capital (1, 25, 3)
        let t = EProcessTrace::from_factors(vec![1.0, 25.0, 3.0 / 25.0]).unwrap();
        let rule = StoppingRule::FirstCrossing { threshold: 20.0, horizon_cap: 3 };
        let v = stopped_value(&t, &rule, &[0.0; 3]).unwrap();
        assert!((v.value - 25.0).abs() < 1e-12);

        // predicate "stop at first factor < 1" on factors (2, 0.5, 3)
        let factors = vec![2.0, 0.5, 3.0];
        let t = EProcessTrace::from_factors(factors.clone()).unwrap();
        let rule = StoppingRule::Predicate {
            rule: Box::new(|view: &PrefixView| view.get(view.len() - 1) < 1.0),
            horizon_cap: 3,
        };
        let v = stopped_value(&t, &rule, &factors).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stopped_value_rejects_out_of_prefix_reads() {
        let t = EProcessTrace::from_factors(vec![1.0, 1.0, 1.0]).unwrap();
        let rule = StoppingRule::Predicate {
            // peeks one step into the future
            rule: Box::new(|view: &PrefixView| view.get(view.len()) > 1.0),
            horizon_cap: 3,
        };
        let err = stopped_value(&t, &rule, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, EvError::PrefixViolation { .. }));
    }

    #[test]
    fn trace_absorbing_zero_and_infinity() {
        let t = EProcessTrace::from_factors(vec![2.0, 0.0, 5.0]).unwrap();
        assert_eq!(t.capital(), &[2.0, 0.0, 0.0]);
        assert_eq!(t.log_capital()[1], f64::NEG_INFINITY);
        let t = EProcessTrace::from_factors(vec![2.0, f64::INFINITY, 0.5]).unwrap();
        assert_eq!(t.capital(), &[2.0, f64::INFINITY, f64::INFINITY]);
    }

    #[test]
    fn dominating_lr_examples() {
        let sp = FiniteSpace::from_mass(vec![0.5, 0.5]).unwrap();
        let q = dominating_lr(&sp, &[1.5, 0.5]).unwrap();
        assert_eq!(q.mass(), &[0.75, 0.25]);
        let q = dominating_lr(&sp, &[1.0, 1.0]).unwrap();
        assert_eq!(q.mass(), &[0.5, 0.5]);
        assert!(dominating_lr(&sp, &[1.5, 0.6]).is_err());
        // exhaustive atomwise domination on a 4-atom space
        let sp = FiniteSpace::from_mass(vec![0.25; 4]).unwrap();
        let e = [1.8, 0.9, 0.7, 0.2]; // mean 0.9 <= 1
        let q = dominating_lr(&sp, &e).unwrap();
        let total: f64 = q.mass().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        for i in 0..4 {
            assert!(e[i] <= q.mass()[i] / sp.mass()[i] + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn capital_matches_direct_product(factors in proptest::collection::vec(0.01f64..10.0, 1..60)) {
            let t = EProcessTrace::from_factors(factors.clone()).unwrap();
            let mut prod = 1.0;
            for (i, &f) in factors.iter().enumerate() {
                prod *= f;
                let k = t.capital()[i];
                prop_assert!((k - prod).abs() <= 1e-12 * prod.abs().max(1.0) * (i as f64 + 1.0));
                if k > 0.0 {
                    prop_assert!((t.log_capital()[i].exp() - k).abs() <= 1e-9 * k.max(1.0));
                }
            }
        }

        #[test]
        fn mix_of_valid_e_tables_stays_valid(
            raw in proptest::collection::vec(0.0f64..5.0, 4),
            raw2 in proptest::collection::vec(0.0f64..5.0, 4),
            w in 0.0f64..1.0,
        ) {
            // two e-tables on the uniform 4-atom space, normalized to mean <= 1
            let p = [0.25; 4];
            let norm = |raw: &[f64]| {
                let m: f64 = raw.iter().map(|&v| 0.25 * v).sum();
                let s = if m > 1.0 { 1.0 / m } else { 1.0 };
                raw.iter().map(|&v| v * s).collect::<Vec<_>>()
            };
            let e1 = norm(&raw);
            let e2 = norm(&raw2);
            let mut mean = 0.0;
            for i in 0..4 {
                let mixed = ev_convex_mix(
                    &[EValueSample::new(e1[i], "a").unwrap(), EValueSample::new(e2[i], "b").unwrap()],
                    &[w, 1.0 - w],
                ).unwrap();
                mean += p[i] * mixed.value;
            }
            prop_assert!(mean <= 1.0 + 1e-9);
        }
    }
}
