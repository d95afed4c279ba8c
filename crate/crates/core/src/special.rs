//! Scalar helpers shared by the pmf and likelihood code.

use statrs::function::gamma::{digamma, ln_gamma};

/// Below this count the gamma ratios are expanded into finite sums, which stay
/// accurate when the shape parameter is very large.
const FINITE_SUM_MAX_Y: u64 = 64;

/// `ln Γ(y + 1)`.
pub(crate) fn ln_factorial(y: u64) -> f64 {
    ln_gamma(y as f64 + 1.0)
}

/// `ln Γ(y + τ) − ln Γ(τ) − y·ln(τ + μ)`, the part of the NB log-pmf that
/// mixes the count with the shape.
pub(crate) fn nb_gamma_ratio_term(y: u64, mu: f64, tau: f64) -> f64 {
    if y == 0 {
        return 0.0;
    }
    if y <= FINITE_SUM_MAX_Y {
        // Γ(y+τ)/Γ(τ) = Π_{k<y} (τ+k); each factor is divided by (τ+μ).
        let denom = tau + mu;
        (0..y).map(|k| ((k as f64 - mu) / denom).ln_1p()).sum()
    } else {
        ln_gamma(y as f64 + tau) - ln_gamma(tau) - y as f64 * (tau + mu).ln()
    }
}

/// `ψ(y + τ) − ψ(τ)`.
pub(crate) fn digamma_diff(y: u64, tau: f64) -> f64 {
    if y == 0 {
        return 0.0;
    }
    if y <= FINITE_SUM_MAX_Y {
        (0..y).map(|k| 1.0 / (tau + k as f64)).sum()
    } else {
        digamma(y as f64 + tau) - digamma(tau)
    }
}

/// `ln(e^a + e^b)`, tolerating `-inf` in either argument.
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 + e^x)` without overflow.
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Two-sided normal p-value for a z statistic.
pub(crate) fn two_sided_normal_p(z: f64) -> f64 {
    statrs::function::erf::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Significance markers at the 10%, 5% and 1% levels.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}
