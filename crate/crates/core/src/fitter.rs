//! Maximum-likelihood fitting, standard errors and incidence-rate-ratio
//! tables for the Poisson, NB and ZINB regressions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data_model::{Dataset, Family, ModelSpec, INTERCEPT_LABEL};
use crate::error::{Error, Result};
use crate::likelihood::{log_likelihood, value_and_gradient, ModelData, ParamVector};
use crate::optim::{maximize, OptimOptions};
use crate::special::{logit, significance_stars, two_sided_normal_p};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FitOptions {
    pub optim: OptimOptions,
    /// Holds `log τ` at this value instead of estimating it.
    pub fixed_log_tau: Option<f64>,
    /// Holds the zero-part coefficients at these values.
    pub fixed_gamma: Option<Vec<f64>>,
    /// Overrides the staged starting values.
    pub start: Option<ParamVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub family: Family,
    pub estimates: ParamVector,
    pub count_labels: Vec<String>,
    pub zero_labels: Vec<String>,
    /// Which entries of the flat `[β, γ, log τ]` vector were estimated.
    pub free: Vec<bool>,
    /// Row-major covariance over the free parameters, in flat order.
    pub covariance: Option<Vec<f64>>,
    pub covariance_error: Option<String>,
    pub log_likelihood: f64,
    pub n_obs: usize,
    pub n_iterations: usize,
    pub converged: bool,
    /// Infinity norm of the gradient over the free parameters.
    pub gradient_norm: f64,
    /// Log-likelihood of every accepted iterate, starting point first.
    pub trace: Vec<f64>,
    pub message: String,
}

impl FitResult {
    pub fn n_free_params(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }

    pub fn aic(&self) -> f64 {
        2.0 * self.n_free_params() as f64 - 2.0 * self.log_likelihood
    }

    /// Covariance of the free parameters as a matrix.
    pub fn covariance_matrix(&self) -> Option<DMatrix<f64>> {
        let k = self.n_free_params();
        self.covariance.as_ref().map(|c| DMatrix::from_row_slice(k, k, c))
    }

    /// Standard error for every flat parameter; `None` when fixed or when the
    /// covariance is unavailable.
    pub fn std_errors(&self) -> Vec<Option<f64>> {
        let cov = self.covariance_matrix();
        let mut free_idx = 0;
        self.free
            .iter()
            .map(|&is_free| {
                if !is_free {
                    return None;
                }
                let k = free_idx;
                free_idx += 1;
                cov.as_ref().map(|c| c[(k, k)].max(0.0).sqrt())
            })
            .collect()
    }

    pub fn tau(&self) -> Option<f64> {
        self.estimates.tau()
    }

    /// Wald standard error of `log τ`.
    pub fn log_tau_se(&self) -> Option<f64> {
        self.estimates.log_tau?;
        *self.std_errors().last()?
    }

    /// All regression coefficients, intercepts included.
    pub fn coefficient_rows(&self) -> Vec<CoefficientRow> {
        let se = self.std_errors();
        let count = self.count_labels.iter().zip(&self.estimates.beta).map(|(l, &b)| (Part::Count, l, b));
        let zero = self.zero_labels.iter().zip(&self.estimates.gamma).map(|(l, &g)| (Part::Zero, l, g));
        count
            .chain(zero)
            .zip(se)
            .map(|((part, label, estimate), se)| CoefficientRow::new(label.clone(), part, estimate, se))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// Log-linked mean; exponentiated coefficients are IRRs.
    Count,
    /// Logit-linked structural-zero probability; exponentiated coefficients
    /// are odds ratios.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub label: String,
    pub part: Part,
    pub estimate: f64,
    /// `exp(estimate)`.
    pub irr: f64,
    /// Standard error of the coefficient, not of the IRR.
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    pub stars: String,
}

impl CoefficientRow {
    pub fn new(label: String, part: Part, estimate: f64, se: Option<f64>) -> Self {
        let se = se.filter(|s| s.is_finite() && *s > 0.0);
        let z = se.map(|s| estimate / s);
        let p = z.map(two_sided_normal_p);
        Self {
            label,
            part,
            estimate,
            irr: estimate.exp(),
            se,
            z,
            p,
            stars: p.map(significance_stars).unwrap_or("").to_string(),
        }
    }

    /// `IRR{stars}(SE)` to three decimals, e.g. `0.872***(0.030)`.
    pub fn formatted(&self) -> String {
        match self.se {
            Some(se) => format!("{:.3}{}({:.3})", self.irr, self.stars, se),
            None => format!("{:.3}(NA)", self.irr),
        }
    }
}

/// One row per non-intercept column of each part.
pub fn irr_table(fit: &FitResult) -> Vec<CoefficientRow> {
    fit.coefficient_rows()
        .into_iter()
        .filter(|r| r.label != INTERCEPT_LABEL)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    /// Position of the fit in the input list.
    pub index: usize,
    pub family: Family,
    pub log_likelihood: f64,
    pub n_params: usize,
    pub aic: f64,
    pub converged: bool,
}

/// AIC table in ascending order; ties keep input order.
pub fn compare_models(fits: &[FitResult]) -> Result<Vec<ComparisonRow>> {
    let first = fits
        .first()
        .ok_or_else(|| Error::Comparison("no fits to compare".into()))?;
    if let Some(bad) = fits.iter().find(|f| f.n_obs != first.n_obs) {
        return Err(Error::Comparison(format!(
            "fits use different observation counts ({} vs {})",
            first.n_obs, bad.n_obs
        )));
    }
    let mut rows: Vec<ComparisonRow> = fits
        .iter()
        .enumerate()
        .map(|(index, f)| ComparisonRow {
            index,
            family: f.family,
            log_likelihood: f.log_likelihood,
            n_params: f.n_free_params(),
            aic: f.aic(),
            converged: f.converged,
        })
        .collect();
    rows.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    Ok(rows)
}

pub fn fit(spec: &ModelSpec, ds: &Dataset, options: &FitOptions) -> Result<FitResult> {
    let data = ModelData::from_spec(spec, ds)?;
    fit_model(&data, options)
}

/// Fits with staged starting values: a Poisson fit from `β₀ = log(ȳ + 0.1)`
/// seeds `β`, the shape starts at `τ = 1`, and the zero-part intercept starts
/// at the logit of the excess-zero fraction (at least 0.01).
pub fn fit_model(data: &ModelData, options: &FitOptions) -> Result<FitResult> {
    let layout = Layout::new(data, options)?;
    let n_free = layout.free.iter().filter(|&&f| f).count();
    if data.n_obs() <= n_free {
        return Err(Error::InsufficientData(format!(
            "{} observations for {n_free} free parameters",
            data.n_obs()
        )));
    }

    let start = match &options.start {
        Some(s) => s.clone(),
        None => staged_start(data, options)?,
    };
    let mut start_flat = start.to_flat();
    if start_flat.len() != data.n_params() {
        return Err(Error::Spec("starting values do not match the model layout".into()));
    }
    layout.apply_fixed(&mut start_flat);

    let free_start = layout.gather(&start_flat);
    // Surface the evaluation error itself if the start is unusable.
    value_and_gradient(data, &ParamVector::from_flat(data, &start_flat)?)?;
    let outcome = maximize(
        |free| {
            let flat = layout.scatter(&start_flat, free);
            let p = ParamVector::from_flat(data, &flat).ok()?;
            let (v, g) = value_and_gradient(data, &p).ok()?;
            Some((v, layout.gather(&g)))
        },
        &free_start,
        &options.optim,
    )
    .expect("start evaluated above");

    let flat = layout.scatter(&start_flat, &outcome.x);
    let estimates = ParamVector::from_flat(data, &flat)?;
    let (covariance, covariance_error) = match covariance(data, &layout, &flat) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };

    Ok(FitResult {
        family: data.family(),
        estimates,
        count_labels: data.x().labels().to_vec(),
        zero_labels: data.z().map(|z| z.labels().to_vec()).unwrap_or_default(),
        free: layout.free.clone(),
        covariance,
        covariance_error,
        log_likelihood: outcome.value,
        n_obs: data.n_obs(),
        n_iterations: outcome.iterations,
        converged: outcome.converged,
        gradient_norm: outcome.gradient_norm(),
        trace: outcome.trace,
        message: outcome.message,
    })
}

/// Free/fixed partition of the flat parameter vector.
struct Layout {
    free: Vec<bool>,
    fixed_values: Vec<(usize, f64)>,
}

impl Layout {
    fn new(data: &ModelData, options: &FitOptions) -> Result<Self> {
        let mut free = vec![true; data.n_params()];
        let mut fixed_values = Vec::new();
        if let Some(lt) = options.fixed_log_tau {
            let k = data
                .log_tau_index()
                .ok_or_else(|| Error::Spec("the poisson family has no shape to fix".into()))?;
            if !lt.is_finite() {
                return Err(Error::Domain("fixed log-shape must be finite".into()));
            }
            free[k] = false;
            fixed_values.push((k, lt));
        }
        if let Some(gamma) = &options.fixed_gamma {
            if data.family() != Family::Zinb || gamma.len() != data.n_zero() {
                return Err(Error::Spec("fixed zero-part coefficients do not match the model".into()));
            }
            for (j, &g) in gamma.iter().enumerate() {
                let k = data.n_count() + j;
                free[k] = false;
                fixed_values.push((k, g));
            }
        }
        Ok(Self { free, fixed_values })
    }

    fn apply_fixed(&self, flat: &mut [f64]) {
        for &(k, v) in &self.fixed_values {
            flat[k] = v;
        }
    }

    fn gather(&self, flat: &[f64]) -> Vec<f64> {
        flat.iter().zip(&self.free).filter(|(_, &f)| f).map(|(v, _)| *v).collect()
    }

    fn scatter(&self, base: &[f64], free_values: &[f64]) -> Vec<f64> {
        let mut out = base.to_vec();
        let mut it = free_values.iter();
        for (slot, &is_free) in out.iter_mut().zip(&self.free) {
            if is_free {
                *slot = *it.next().expect("free value count");
            }
        }
        out
    }
}

fn staged_start(data: &ModelData, options: &FitOptions) -> Result<ParamVector> {
    let n = data.n_obs() as f64;
    let ybar = data.y().iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut beta = vec![0.0; data.n_count()];
    beta[0] = (ybar + 0.1).ln();

    let poisson = data.with_family(Family::Poisson)?;
    let pstart = ParamVector {
        beta,
        gamma: vec![],
        log_tau: None,
    };
    let poisson_fit = maximize(
        |b| {
            let p = ParamVector {
                beta: b.to_vec(),
                gamma: vec![],
                log_tau: None,
            };
            value_and_gradient(&poisson, &p).ok()
        },
        &pstart.beta,
        &options.optim,
    );
    let beta = match poisson_fit {
        Some(out) => out.x,
        None => pstart.beta,
    };
    if data.family() == Family::Poisson {
        return Ok(ParamVector {
            beta,
            gamma: vec![],
            log_tau: None,
        });
    }

    let log_tau = options.fixed_log_tau.unwrap_or(0.0);
    let gamma = if data.family() == Family::Zinb {
        let tau = log_tau.exp();
        let observed_zero = data.y().iter().filter(|&&v| v == 0).count() as f64 / n;
        let implied_zero = (0..data.n_obs())
            .map(|i| {
                let mu = data.x().linear_predictor(i, &beta).exp();
                (-tau * (mu / tau).ln_1p()).exp()
            })
            .sum::<f64>()
            / n;
        let excess = (observed_zero - implied_zero).max(0.0);
        let mut gamma = vec![0.0; data.n_zero()];
        gamma[0] = logit(excess.clamp(0.01, 0.99));
        gamma
    } else {
        vec![]
    };
    Ok(ParamVector {
        beta,
        gamma,
        log_tau: Some(log_tau),
    })
}

/// Inverse of the negative Hessian over the free parameters. The Hessian
/// is built from central differences of the analytic gradient with step
/// `max(1e-5, 1e-5·|θⱼ|)`.
fn covariance(data: &ModelData, layout: &Layout, flat: &[f64]) -> Result<Vec<f64>> {
    let free_idx: Vec<usize> = (0..flat.len()).filter(|&k| layout.free[k]).collect();
    let k = free_idx.len();
    let mut hess = DMatrix::<f64>::zeros(k, k);
    for (col, &j) in free_idx.iter().enumerate() {
        let h = 1e-5f64.max(1e-5 * flat[j].abs());
        let mut plus = flat.to_vec();
        let mut minus = flat.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let gp = value_and_gradient(data, &ParamVector::from_flat(data, &plus)?)?.1;
        let gm = value_and_gradient(data, &ParamVector::from_flat(data, &minus)?)?.1;
        for (row, &i) in free_idx.iter().enumerate() {
            hess[(row, col)] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
    let neg = -(&hess + hess.transpose()) * 0.5;
    if neg.iter().any(|v| !v.is_finite()) {
        return Err(Error::CovarianceUnavailable("non-finite Hessian".into()));
    }
    let chol = neg
        .cholesky()
        .ok_or_else(|| Error::CovarianceUnavailable("negative Hessian is not positive definite".into()))?;
    let inv = chol.inverse();
    let mut out = Vec::with_capacity(k * k);
    for r in 0..k {
        for c in 0..k {
            out.push(inv[(r, c)]);
        }
    }
    Ok(out)
}

/// `P(Y = 0)` averaged over the observations under a fitted model.
pub fn expected_zero_fraction(fit: &FitResult, data: &ModelData) -> Result<f64> {
    let probs = crate::likelihood::zero_probabilities(data, &fit.estimates)?;
    Ok(probs.iter().sum::<f64>() / probs.len() as f64)
}

/// Re-evaluates the log-likelihood of a fit on its data.
pub fn refit_log_likelihood(fit: &FitResult, data: &ModelData) -> Result<f64> {
    log_likelihood(data, &fit.estimates)
}
