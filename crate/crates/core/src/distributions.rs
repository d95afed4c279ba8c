//! Poisson, negative binomial (NB) and zero-inflated negative binomial (ZINB)
//! distributions.
//!
//! The NB is parameterized by its mean `λ` and shape `τ`, so that
//! `Var(Y) = λ + λ²/τ`; the Poisson is recovered as `τ → ∞`. The ZINB mixes a
//! point mass at zero (probability `p`) with an NB.
//!
//! Every pmf is evaluated in log space through log-gamma terms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{ln_factorial, log_add_exp, nb_gamma_ratio_term};

/// Smallest shape accepted. Anything at or below is rejected, never clamped.
pub const MIN_TAU: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NbParams {
    lambda: f64,
    tau: f64,
}

impl NbParams {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(Error::Domain(format!("NB mean must be finite and > 0, got {lambda}")));
        }
        if !tau.is_finite() || tau <= MIN_TAU {
            return Err(Error::Domain(format!(
                "NB shape must be finite and > {MIN_TAU:e}, got {tau}"
            )));
        }
        Ok(Self { lambda, tau })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZinbParams {
    nb: NbParams,
    p: f64,
}

impl ZinbParams {
    pub fn new(nb: NbParams, p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("zero-inflation probability must lie in [0, 1), got {p}")));
        }
        Ok(Self { nb, p })
    }

    pub fn nb(&self) -> &NbParams {
        &self.nb
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
}

/// NB log-pmf from the log mean `eta`, the mean `mu = e^eta` and the shape.
/// Callers pass both forms of the mean so the linear predictor is used
/// directly for `y·ln μ`.
pub(crate) fn nb_log_pmf_eta(y: u64, eta: f64, mu: f64, tau: f64) -> f64 {
    let zero_mass = -tau * (mu / tau).ln_1p();
    if y == 0 {
        return zero_mass;
    }
    let yf = y as f64;
    nb_gamma_ratio_term(y, mu, tau) - ln_factorial(y) + zero_mass + yf * eta
}

/// ZINB log-pmf assembled from the log mixing weights and NB log-pmf values.
/// `nb_at_y` is the NB log-pmf at `y`, which equals the NB zero mass when
/// `y == 0`.
pub(crate) fn zinb_log_pmf_parts(y: u64, log_p: f64, log_1mp: f64, nb_at_y: f64) -> f64 {
    if y == 0 {
        log_add_exp(log_p, log_1mp + nb_at_y)
    } else {
        log_1mp + nb_at_y
    }
}

pub(crate) fn poisson_log_pmf_eta(y: u64, eta: f64, mu: f64) -> f64 {
    if y == 0 {
        -mu
    } else {
        y as f64 * eta - mu - ln_factorial(y)
    }
}

pub fn poisson_log_pmf(y: u64, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::Domain(format!("Poisson mean must be finite and > 0, got {lambda}")));
    }
    Ok(poisson_log_pmf_eta(y, lambda.ln(), lambda))
}

pub fn nb_log_pmf(y: u64, params: &NbParams) -> f64 {
    nb_log_pmf_eta(y, params.lambda.ln(), params.lambda, params.tau)
}

pub fn zinb_log_pmf(y: u64, params: &ZinbParams) -> f64 {
    let nb = &params.nb;
    zinb_log_pmf_parts(y, params.p.ln(), (-params.p).ln_1p(), nb_log_pmf(y, nb))
}

pub fn nb_moments(params: &NbParams) -> Moments {
    let l = params.lambda;
    Moments {
        mean: l,
        variance: l + l * l / params.tau,
    }
}

pub fn zinb_moments(params: &ZinbParams) -> Moments {
    let l = params.nb.lambda;
    let p = params.p;
    Moments {
        mean: (1.0 - p) * l,
        variance: (1.0 - p) * l * (1.0 + p * l + l / params.nb.tau),
    }
}

/// One gamma–Poisson mixture draw.
pub(crate) fn draw_nb<R: Rng + ?Sized>(rng: &mut R, lambda: f64, tau: f64) -> u64 {
    // Shape τ, scale λ/τ gives a rate with mean λ and variance λ²/τ.
    let gamma = Gamma::new(tau, lambda / tau).expect("validated NB parameters");
    let rate: f64 = gamma.sample(rng);
    draw_poisson(rng, rate)
}

pub(crate) fn draw_poisson<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> u64 {
    if rate.is_nan() || rate <= 0.0 {
        return 0;
    }
    let poisson = Poisson::new(rate).expect("positive finite rate");
    let k: f64 = poisson.sample(rng);
    k as u64
}

pub(crate) fn draw_zinb<R: Rng + ?Sized>(rng: &mut R, lambda: f64, tau: f64, p: f64) -> u64 {
    if p > 0.0 && rng.random::<f64>() < p {
        return 0;
    }
    draw_nb(rng, lambda, tau)
}

pub fn sample_nb(params: &NbParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| draw_nb(&mut rng, params.lambda, params.tau)).collect())
}

/// Draws with a Bernoulli(p) structural-zero gate in front of each NB draw.
/// With `p == 0` the gate consumes no randomness, so the output equals
/// [`sample_nb`] for the same seed.
pub fn sample_zinb(params: &ZinbParams, n: usize, seed: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = params.nb;
    Ok((0..n)
        .map(|_| draw_zinb(&mut rng, nb.lambda, nb.tau, params.p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nb(l: f64, t: f64) -> NbParams {
        NbParams::new(l, t).unwrap()
    }

    /// Direct product-form pmf: Π_{k<y}(τ+k) / y! · (τ/(λ+τ))^τ · (λ/(λ+τ))^y.
    fn product_form_pmf(y: u64, l: f64, t: f64) -> f64 {
        let mut ratio = 1.0;
        for k in 0..y {
            ratio *= (t + k as f64) / (k as f64 + 1.0);
        }
        ratio * (t / (l + t)).powf(t) * (l / (l + t)).powi(y as i32)
    }

    fn mean_var(xs: &[u64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().map(|&x| x as f64).sum::<f64>() / n;
        let v = xs.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn nb_zero_at_unit_params_is_log_half() {
        let v = nb_log_pmf(0, &nb(1.0, 1.0));
        assert!((v - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn nb_zero_collapses_to_shape_term() {
        for &(l, t) in &[(0.3f64, 0.7f64), (4.0, 2.0), (10.0, 50.0)] {
            let expected = t * (t / (l + t)).ln();
            assert!((nb_log_pmf(0, &nb(l, t)) - expected).abs() < 1e-13);
        }
    }

    #[test]
    fn nb_matches_high_precision_value() {
        // 40-digit evaluation of the closed form at y=3, λ=2, τ=5.
        let reference = -1.885_302_027_102_755;
        assert!((nb_log_pmf(3, &nb(2.0, 5.0)) - reference).abs() < 1e-13);
    }

    #[test]
    fn nb_matches_product_form() {
        for &(l, t) in &[(0.1, 0.5), (1.0, 2.0), (10.0, 50.0), (3.3, 0.9)] {
            for y in 0..30 {
                let direct = product_form_pmf(y, l, t);
                let got = nb_log_pmf(y, &nb(l, t)).exp();
                assert!((direct - got).abs() < 1e-13, "y={y} l={l} t={t}");
            }
        }
    }

    #[test]
    fn large_counts_use_log_gamma_route() {
        let p = nb(150.0, 3.0);
        let total: f64 = (0..20_000).map(|y| nb_log_pmf(y, &p).exp()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn domain_errors() {
        assert!(NbParams::new(0.0, 1.0).is_err());
        assert!(NbParams::new(-1.0, 1.0).is_err());
        assert!(NbParams::new(f64::NAN, 1.0).is_err());
        assert!(NbParams::new(1.0, 0.0).is_err());
        assert!(NbParams::new(1.0, 1e-10).is_err());
        assert!(NbParams::new(1.0, f64::INFINITY).is_err());
        assert!(ZinbParams::new(nb(1.0, 1.0), 1.0).is_err());
        assert!(ZinbParams::new(nb(1.0, 1.0), -0.1).is_err());
        assert!(ZinbParams::new(nb(1.0, 1.0), 0.0).is_ok());
    }

    #[test]
    fn zinb_examples() {
        let z = ZinbParams::new(nb(1.0, 1.0), 0.5).unwrap();
        assert!((zinb_log_pmf(0, &z) - 0.75f64.ln()).abs() < 1e-15);

        let z = ZinbParams::new(nb(2.0, 5.0), 0.3).unwrap();
        let expected = 0.7f64.ln() + nb_log_pmf(2, &nb(2.0, 5.0));
        assert!((zinb_log_pmf(2, &z) - expected).abs() < 1e-15);
        // 40-digit reference for ln(0.7) + ln P_NB(2; 2, 5).
        assert!((zinb_log_pmf(2, &z) - (-1.836_511_862_933_323)).abs() < 1e-13);
    }

    #[test]
    fn zinb_zero_branch_near_one() {
        let z = ZinbParams::new(nb(3.0, 2.0), 1.0 - 1e-12).unwrap();
        let v = zinb_log_pmf(0, &z);
        assert!(v <= 0.0 && v > -1e-11);
    }

    #[test]
    fn moments_examples() {
        assert_eq!(nb_moments(&nb(1.0, 1.0)), Moments { mean: 1.0, variance: 2.0 });
        assert_eq!(nb_moments(&nb(2.0, 4.0)), Moments { mean: 2.0, variance: 3.0 });
        let m = nb_moments(&nb(0.701, 1e12));
        assert!((m.variance - 0.701).abs() < 1e-9);

        let z = ZinbParams::new(nb(2.0, 2.0), 0.5).unwrap();
        assert_eq!(zinb_moments(&z), Moments { mean: 1.0, variance: 3.0 });
        let z0 = ZinbParams::new(nb(2.0, 2.0), 0.0).unwrap();
        assert_eq!(zinb_moments(&z0), nb_moments(&nb(2.0, 2.0)));
        let z1 = ZinbParams::new(nb(2.0, 2.0), 1.0 - 1e-12).unwrap();
        let m = zinb_moments(&z1);
        assert!(m.mean < 1e-11 && m.variance < 1e-10);
    }

    #[test]
    fn sampler_mean_within_four_se() {
        let p = nb(1.0, 1.0);
        let xs = sample_nb(&p, 100_000, 11).unwrap();
        let (m, _) = mean_var(&xs);
        let se = (nb_moments(&p).variance / xs.len() as f64).sqrt();
        assert!((m - 1.0).abs() < 4.0 * se, "mean {m}");
    }

    #[test]
    fn sampler_poisson_limit() {
        let xs = sample_nb(&nb(3.0, 1e6), 100_000, 5).unwrap();
        let (m, v) = mean_var(&xs);
        // Var(s²/x̄) ≈ 2/n for Poisson data.
        assert!((v / m - 1.0).abs() < 4.0 * (2.0 / xs.len() as f64).sqrt());
    }

    #[test]
    fn samplers_are_deterministic() {
        let p = nb(2.0, 0.7);
        assert_eq!(sample_nb(&p, 500, 9).unwrap(), sample_nb(&p, 500, 9).unwrap());
        let z = ZinbParams::new(p, 0.4).unwrap();
        assert_eq!(sample_zinb(&z, 500, 9).unwrap(), sample_zinb(&z, 500, 9).unwrap());
        assert_ne!(sample_nb(&p, 500, 9).unwrap(), sample_nb(&p, 500, 10).unwrap());
    }

    #[test]
    fn zinb_sampler_edge_cases() {
        let p = nb(2.0, 2.0);
        let z = ZinbParams::new(p, 1.0 - 1e-9).unwrap();
        let xs = sample_zinb(&z, 10_000, 1).unwrap();
        assert!(xs.iter().filter(|&&x| x == 0).count() >= 9_999);

        let z0 = ZinbParams::new(p, 0.0).unwrap();
        assert_eq!(sample_zinb(&z0, 1000, 4).unwrap(), sample_nb(&p, 1000, 4).unwrap());

        let z = ZinbParams::new(p, 0.3).unwrap();
        let xs = sample_zinb(&z, 100_000, 21).unwrap();
        let (m, _) = mean_var(&xs);
        let mom = zinb_moments(&z);
        let se = (mom.variance / xs.len() as f64).sqrt();
        assert!((m - mom.mean).abs() < 4.0 * se);
    }

    #[test]
    fn zero_sample_size_rejected() {
        assert!(sample_nb(&nb(1.0, 1.0), 0, 1).is_err());
    }

    #[test]
    fn poisson_pmf_basic() {
        assert!((poisson_log_pmf(0, 2.0).unwrap() + 2.0).abs() < 1e-15);
        let v = poisson_log_pmf(3, 2.0).unwrap();
        assert!((v - (3.0 * 2f64.ln() - 2.0 - 6f64.ln())).abs() < 1e-14);
        assert!(poisson_log_pmf(1, 0.0).is_err());
    }
}
