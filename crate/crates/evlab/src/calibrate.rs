//! Calibrators (p-value to e-value conversion), admissibility checks, and
//! Fisher's p-value combination baseline.
//!
//! A calibrator is a nonincreasing function on (0, 1] whose integral over
//! the unit interval is at most 1; applied to a valid p-value it yields a
//! valid e-value regardless of the p-value's distribution beyond
//! super-uniformity.

use crate::evcore::EValueSample;
use crate::numeric::{adaptive_simpson, chi2_sf};
use crate::{EvError, Result};

/// A calibrator under test: an arbitrary evaluator plus a tag.
pub struct Calibrator {
    pub name: String,
    pub evaluator: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Calibrator {
    pub fn power(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) {
            return Err(EvError::InvalidArgument(format!(
                "power calibrator requires kappa in (0, 1), got {kappa}"
            )));
        }
        Ok(Self {
            name: format!("power({kappa})"),
            evaluator: Box::new(move |p| kappa * p.powf(kappa - 1.0)),
        })
    }

    pub fn mixture() -> Self {
        Self { name: "mixture".into(), evaluator: Box::new(mixture_calibrator_value) }
    }

    pub fn eval(&self, p: f64) -> f64 {
        (self.evaluator)(p)
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(EvError::InvalidArgument(format!("p-value must lie in (0, 1], got {p}")));
    }
    Ok(())
}

/// Power calibrator `kappa * p^(kappa - 1)`: nonincreasing in p and
/// integrating to exactly 1 over (0, 1].
pub fn power_calibrator(kappa: f64, p: f64) -> Result<EValueSample> {
    check_p(p)?;
    let cal = Calibrator::power(kappa)?;
    EValueSample::new(cal.eval(p), cal.name)
}

// Series evaluation of (1 - p + p ln p) / (p (ln p)^2) near the removable
// singularity at p = 1, in powers of t = ln p.
fn mixture_calibrator_value(p: f64) -> f64 {
    let t = p.ln();
    if t.abs() < 1e-4 {
        (-t).exp() * (0.5 + t / 3.0 + t * t / 8.0 + t * t * t / 30.0)
    } else {
        (1.0 - p + p * t) / (p * t * t)
    }
}

/// Mixture calibrator `int_0^1 kappa p^(kappa-1) dkappa
/// = (1 - p + p ln p) / (p (ln p)^2)`, with the limit 1/2 at p = 1.
pub fn mixture_calibrator(p: f64) -> Result<EValueSample> {
    check_p(p)?;
    EValueSample::new(mixture_calibrator_value(p), "mixture")
}

/// Result of an admissibility check.
#[derive(Debug, Clone, Copy)]
pub struct CalibratorReport {
    pub monotone: bool,
    pub integral: f64,
    pub passes: bool,
}

const MONOTONE_GRID: usize = 10_000;
const INTEGRAL_TOL: f64 = 1e-9;

/// Checks monotonicity on a 10^4-point grid and integrates over (0, 1]
/// by adaptive quadrature on dyadic panels toward the integrable
/// singularity at 0. Failures are reported, not thrown.
pub fn verify_calibrator(c: &Calibrator) -> Result<CalibratorReport> {
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for i in 1..=MONOTONE_GRID {
        let p = i as f64 / MONOTONE_GRID as f64;
        let v = c.eval(p);
        if v > prev + 1e-12 * prev.abs().max(1.0) {
            monotone = false;
            break;
        }
        prev = v;
    }

    // dyadic panels [2^-(k+1), 2^-k]; stop once contributions are negligible
    let mut integral = 0.0;
    let mut hi = 1.0_f64;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let panel = adaptive_simpson(|p| c.eval(p), lo, hi, 1e-10)?;
        integral += panel;
        hi = lo;
        if panel.abs() < 1e-13 * integral.abs().max(1.0) && integral > 0.0 {
            break;
        }
        if hi < 1e-300 {
            break;
        }
    }
    let passes = monotone && integral <= 1.0 + INTEGRAL_TOL;
    Ok(CalibratorReport { monotone, integral, passes })
}

/// Fisher's method for independent p-values: the chi-square survival
/// function with 2k degrees of freedom at `-2 sum ln p_i`. Independence is
/// the caller's responsibility.
pub fn fisher_combine(pvals: &[f64]) -> Result<f64> {
    for &p in pvals {
        check_p(p)?;
    }
    if pvals.is_empty() {
        return Ok(1.0);
    }
    let stat = -2.0 * pvals.iter().map(|p| p.ln()).sum::<f64>();
    chi2_sf(stat, 2.0 * pvals.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evcore::e_to_p;
    use crate::numeric::adaptive_simpson;

    #[test]
    fn power_calibrator_examples() {
        assert!((power_calibrator(0.5, 1.0).unwrap().value - 0.5).abs() < 1e-15);
        assert!((power_calibrator(0.5, 0.04).unwrap().value - 2.5).abs() < 1e-12);
        assert!((power_calibrator(0.5, 0.01).unwrap().value - 5.0).abs() < 1e-12);
        assert!(power_calibrator(0.5, 0.0).is_err());
        assert!(power_calibrator(0.5, 1.1).is_err());
        assert!(power_calibrator(0.0, 0.5).is_err());
    }

    // Quadrature oracle for the kappa-mixture: int_0^1 kappa p^(kappa-1) dkappa.
    fn mixture_oracle(p: f64) -> f64 {
        adaptive_simpson(|k| k * p.powf(k - 1.0), 0.0, 1.0, 1e-11).unwrap()
    }

    #[test]
    fn mixture_calibrator_examples() {
        assert!((mixture_calibrator(1.0).unwrap().value - 0.5).abs() < 1e-12);
        let p = (-2.0f64).exp();
        let exact = (std::f64::consts::E * std::f64::consts::E - 3.0) / 4.0; // (e^2 - 3)/4
        let got = mixture_calibrator(p).unwrap().value;
        assert!((got - exact).abs() < 1e-9, "{got} vs {exact}");
        assert!((got - mixture_oracle(p)).abs() < 1e-9);
        let got = mixture_calibrator(0.05).unwrap().value;
        assert!((got - mixture_oracle(0.05)).abs() < 1e-9);
    }

    #[test]
    fn mixture_series_joins_smoothly() {
        // direct formula and series must agree across the switch point
        for &p in &[0.999f64, 0.9999, 0.99995, 0.999999] {
            let t = p.ln();
            let direct = (1.0 - p + p * t) / (p * t * t);
            let got = mixture_calibrator(p).unwrap().value;
            assert!((got - direct).abs() < 1e-7, "p = {p}: {got} vs {direct}");
        }
    }

    #[test]
    fn verify_calibrator_examples() {
        let r = verify_calibrator(&Calibrator::power(0.5).unwrap()).unwrap();
        assert!(r.monotone && r.passes);
        assert!((r.integral - 1.0).abs() < 1e-6);

        let constant_one =
            Calibrator { name: "one".into(), evaluator: Box::new(|_| 1.0) };
        let r = verify_calibrator(&constant_one).unwrap();
        assert!(r.passes);
        assert!((r.integral - 1.0).abs() < 1e-9);

        let constant_two =
            Calibrator { name: "two".into(), evaluator: Box::new(|_| 2.0) };
        let r = verify_calibrator(&constant_two).unwrap();
        assert!(!r.passes);
        assert!((r.integral - 2.0).abs() < 1e-9);
    }

    #[test]
    fn calibrate_then_markov_never_anticonservative() {
        for i in 1..=10_000 {
            let p = i as f64 / 10_000.0;
            let e = power_calibrator(0.5, p).unwrap();
            assert!(e_to_p(&e) >= p - 1e-12);
        }
    }

    #[test]
    fn fisher_examples() {
        assert!((fisher_combine(&[0.05]).unwrap() - 0.05).abs() < 1e-12);
        assert!((fisher_combine(&[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-12);
        // oracle: adaptive quadrature of the chi^2_4 density over [stat, inf)
        let stat = -2.0 * (0.05f64.ln() + 0.05f64.ln());
        let density = |x: f64| 0.25 * x * (-x / 2.0).exp(); // chi^2_4 pdf
        let oracle = adaptive_simpson(density, stat, 200.0, 1e-10).unwrap();
        let got = fisher_combine(&[0.05, 0.05]).unwrap();
        assert!((got - oracle).abs() < 1e-8, "{got} vs {oracle}");
        // closed form: chi^2_4 sf at x is e^(-x/2)(1 + x/2), here p^2 (1 - ln p^2)
        let closed = 0.05f64.powi(2) * (1.0 - (0.05f64.powi(2)).ln());
        assert!((got - closed).abs() < 1e-10);
        assert!(fisher_combine(&[0.0]).is_err());
        // symmetry under permutation is exact
        let a = fisher_combine(&[0.2, 0.7, 0.04]).unwrap();
        let b = fisher_combine(&[0.04, 0.2, 0.7]).unwrap();
        assert_eq!(a, b);
        // appending p = 1 only adds a degree-of-freedom pair
        let with_one = fisher_combine(&[0.05, 1.0]).unwrap();
        let stat = -2.0 * 0.05f64.ln();
        let oracle = adaptive_simpson(density, stat, 200.0, 1e-10).unwrap();
        assert!((with_one - oracle).abs() < 1e-8);
    }
}
