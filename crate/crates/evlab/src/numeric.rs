//! Shared numerical routines: log-domain reductions, adaptive quadrature,
//! the regularized incomplete gamma function, and derived tail functions.

use crate::{EvError, Result};

/// log(sum(exp(x))) with max-shifting. Empty input and all `-inf` give `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

fn simpson(h: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(m - a, fa, flm, fm);
    let right = simpson(b - m, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps {
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = adapt(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?;
    Some(l + r)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol`. Non-convergence (recursion exhausted) is an error, never a
/// silent truncation.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(b - a, fa, fm, fb);
    // Scale the tolerance by a first-pass magnitude estimate; for an
    // integrand that is identically ~0 fall back to a small absolute floor.
    let eps = rel_tol * whole.abs().max(1e-300);
    adapt(&f, a, b, fa, fm, fb, whole, eps, 60)
        .ok_or(EvError::QuadratureNonConvergence { rel_tol })
}

/// Adaptive Simpson quadrature with an absolute error budget, splitting
/// `[a, b]` into `panels` composite panels first. Suits sharply peaked
/// integrands where a single global first-pass estimate would be useless.
pub fn adaptive_simpson_abs<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    eps_abs: f64,
) -> Result<f64> {
    let width = (b - a) / panels as f64;
    let eps = eps_abs / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let pa = a + i as f64 * width;
        let pb = pa + width;
        let fa = f(pa);
        let fb = f(pb);
        let fm = f(0.5 * (pa + pb));
        let whole = simpson(pb - pa, fa, fm, fb);
        total += adapt(&f, pa, pb, fa, fm, fb, whole, eps, 60)
            .ok_or(EvError::QuadratureNonConvergence { rel_tol: eps_abs })?;
    }
    Ok(total)
}

// Lanczos approximation, g = 7, 9 coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const GAMMA_REL_TOL: f64 = 1e-12;
const GAMMA_MAX_ITER: usize = 1000;

// Series for the lower regularized incomplete gamma P(a, x), x < a + 1.
fn gamma_p_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * GAMMA_REL_TOL {
            return Ok(sum * (a * x.ln() - x - ln_gamma(a)).exp());
        }
    }
    Err(EvError::QuadratureNonConvergence { rel_tol: GAMMA_REL_TOL })
}

// Modified Lentz continued fraction for the upper regularized Q(a, x), x >= a + 1.
fn gamma_q_cf(a: f64, x: f64) -> Result<f64> {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < GAMMA_REL_TOL {
            return Ok(h * (a * x.ln() - x - ln_gamma(a)).exp());
        }
    }
    Err(EvError::QuadratureNonConvergence { rel_tol: GAMMA_REL_TOL })
}

/// Regularized upper incomplete gamma function `Q(a, x)` for `a > 0`,
/// `x >= 0`. Series/continued-fraction split at `x = a + 1`, relative
/// tolerance 1e-12.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(EvError::InvalidArgument(format!(
            "gamma_q requires a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_p_series(a, x)?)
    } else {
        gamma_q_cf(a, x)
    }
}

/// Survival function of the chi-square distribution with `k` degrees of
/// freedom.
pub fn chi2_sf(x: f64, k: f64) -> Result<f64> {
    gamma_q(0.5 * k, 0.5 * x)
}

/// Complementary error function via `Q(1/2, x^2)`.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x).unwrap_or(0.0)
    } else {
        2.0 - erfc(-x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Log density of N(mean, sd^2) at `x`.
pub fn normal_log_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
}

/// Maximizes a unimodal `f` on `[lo, hi]` by golden-section search to the
/// given parameter tolerance. Returns the maximizer.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
