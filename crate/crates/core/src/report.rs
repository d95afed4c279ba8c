//! JSON and text renderings of fits, screens, diagnostics and comparisons.
//!
//! Text output rounds to three decimals; JSON keeps full precision.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::data_model::{Family, INTERCEPT_LABEL};
use crate::diagnostics::{ContingencyResult, DispersionSummary, ZeroSummary};
use crate::fitter::{CoefficientRow, ComparisonRow, FitResult, Part};

const STAR_NOTE: &str = "Note: '*' 10%, '**' 5%, '***' 1% significance level.";

#[derive(Debug, Clone, Serialize)]
pub struct CovarianceReport {
    pub labels: Vec<String>,
    /// Row-major.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub config: Value,
    pub family: Family,
    pub n_obs: usize,
    pub dropped_rows: usize,
    pub coefficients: Vec<CoefficientRow>,
    pub tau: Option<f64>,
    pub log_tau_se: Option<f64>,
    pub log_likelihood: f64,
    pub aic: f64,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub covariance: Option<CovarianceReport>,
    pub covariance_error: Option<String>,
    pub message: String,
}

impl FitReport {
    pub fn new(fit: &FitResult, dropped_rows: usize, config: Value) -> Self {
        let mut labels: Vec<String> = fit
            .count_labels
            .iter()
            .map(|l| format!("count:{l}"))
            .chain(fit.zero_labels.iter().map(|l| format!("zero:{l}")))
            .collect();
        if fit.estimates.log_tau.is_some() {
            labels.push("log_tau".into());
        }
        let free_labels: Vec<String> = labels
            .into_iter()
            .zip(&fit.free)
            .filter(|(_, &f)| f)
            .map(|(l, _)| l)
            .collect();
        Self {
            config,
            family: fit.family,
            n_obs: fit.n_obs,
            dropped_rows,
            coefficients: fit.coefficient_rows(),
            tau: fit.tau(),
            log_tau_se: fit.log_tau_se(),
            log_likelihood: fit.log_likelihood,
            aic: fit.aic(),
            converged: fit.converged,
            iterations: fit.n_iterations,
            gradient_norm: fit.gradient_norm,
            covariance: fit.covariance.as_ref().map(|values| CovarianceReport {
                labels: free_labels,
                values: values.clone(),
            }),
            covariance_error: fit.covariance_error.clone(),
            message: fit.message.clone(),
        }
    }
}

/// Splits `name=level` design labels into variable and level.
fn split_label(label: &str) -> (&str, &str) {
    label.split_once('=').unwrap_or((label, ""))
}

fn write_coefficient_block(out: &mut String, heading: &str, rows: &[&CoefficientRow]) {
    let _ = writeln!(out, "{heading}");
    let _ = writeln!(out, "{:<28} {:<16} Estimate(SE)", "Variable", "Level");
    for r in rows {
        let (var, level) = split_label(&r.label);
        let _ = writeln!(out, "{var:<28} {level:<16} {}", r.formatted());
    }
}

/// Table-style listing: one line per non-intercept coefficient with the
/// exponentiated estimate, stars and the coefficient standard error.
pub fn render_fit_text(report: &FitReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "configuration: {}", report.config);
    let _ = writeln!(
        out,
        "family: {}  n_obs: {}  dropped_rows: {}",
        report.family, report.n_obs, report.dropped_rows
    );
    let _ = writeln!(
        out,
        "log-likelihood: {:.3}  AIC: {:.3}  converged: {}  iterations: {}  gradient_norm: {:.3e}",
        report.log_likelihood,
        report.aic,
        if report.converged { "yes" } else { "NO" },
        report.iterations,
        report.gradient_norm
    );
    if let Some(tau) = report.tau {
        match report.log_tau_se {
            Some(se) => {
                let _ = writeln!(out, "tau: {tau:.3}  (SE of log tau: {se:.3})");
            }
            None => {
                let _ = writeln!(out, "tau: {tau:.3}");
            }
        }
    }
    if let Some(err) = &report.covariance_error {
        let _ = writeln!(out, "warning: {err}");
    }
    if !report.converged {
        let _ = writeln!(out, "warning: fit did not converge ({})", report.message);
    }
    let _ = writeln!(out);
    let count: Vec<&CoefficientRow> = report
        .coefficients
        .iter()
        .filter(|r| r.part == Part::Count && r.label != INTERCEPT_LABEL)
        .collect();
    write_coefficient_block(&mut out, "IRR (count part, link: log)", &count);
    if report.family == Family::Zinb {
        let zero: Vec<&CoefficientRow> = report
            .coefficients
            .iter()
            .filter(|r| r.part == Part::Zero && r.label != INTERCEPT_LABEL)
            .collect();
        let _ = writeln!(out);
        write_coefficient_block(&mut out, "OR (zero part, link: logit)", &zero);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{STAR_NOTE} Parentheses hold the standard error of the coefficient.");
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ScreenReport {
    pub config: Value,
    pub n_obs: usize,
    pub dropped_rows: usize,
    pub results: Vec<ContingencyResult>,
}

pub fn render_screen_text(report: &ScreenReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "configuration: {}", report.config);
    let _ = writeln!(out, "n_obs: {}  dropped_rows: {}", report.n_obs, report.dropped_rows);
    let _ = writeln!(out);
    let _ = writeln!(out, "{:<28} {:>14} {:>4} {:>10}", "Characteristic", "chi2", "df", "P-value");
    for r in &report.results {
        let chi = format!("{:.3}{}", r.chi2, r.stars);
        let flag = if r.low_expected_warning { "  (min expected < 5)" } else { "" };
        let _ = writeln!(out, "{:<28} {:>14} {:>4} {:>10.4}{flag}", r.row_variable, chi, r.df, r.p_value);
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{STAR_NOTE} Pearson chi-square without continuity correction.");
    for r in &report.results {
        let _ = writeln!(out);
        let _ = writeln!(out, "cross-table: {} x {}", r.row_variable, r.column_variable);
        let _ = write!(out, "{:<16}", "");
        for c in &r.column_labels {
            let _ = write!(out, " {c:>8}");
        }
        let _ = writeln!(out);
        for (label, row) in r.row_labels.iter().zip(&r.observed) {
            let _ = write!(out, "{label:<16}");
            for v in row {
                let _ = write!(out, " {v:>8}");
            }
            let _ = writeln!(out);
        }
    }
    out
}

pub fn render_screen_csv(report: &ScreenReport) -> String {
    let mut out = String::from("variable,chi2,df,p_value,stars,min_expected\n");
    for r in &report.results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.row_variable, r.chi2, r.df, r.p_value, r.stars, r.min_expected
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseReport {
    pub config: Value,
    pub dropped_rows: usize,
    pub dispersion: DispersionSummary,
    pub zeros: ZeroSummary,
}

pub fn render_diagnose_text(report: &DiagnoseReport) -> String {
    let mut out = String::new();
    let d = &report.dispersion;
    let z = &report.zeros;
    let _ = writeln!(out, "configuration: {}", report.config);
    let _ = writeln!(out, "n_obs: {}  dropped_rows: {}", d.n_obs, report.dropped_rows);
    let _ = writeln!(
        out,
        "mean: {:.3}  variance: {:.3}  variance/mean: {:.3}  verdict: {}",
        d.mean,
        d.variance,
        d.ratio,
        serde_json::to_value(d.verdict).unwrap().as_str().unwrap_or_default()
    );
    let _ = write!(out, "observed zero fraction: {:.3}", z.observed_zero_fraction);
    if let (Some(f), Some(e)) = (z.family, z.expected_zero_fraction) {
        let _ = write!(out, "  expected under {f}: {e:.3}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out);
    out.push_str(&crate::diagnostics::histogram_csv(z));
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub config: Value,
    pub n_obs: usize,
    pub ranking: Vec<ComparisonRow>,
}

pub fn render_compare_text(report: &CompareReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "configuration: {}", report.config);
    let _ = writeln!(out, "n_obs: {}", report.n_obs);
    let _ = writeln!(out);
    let _ = writeln!(
        out,
        "{:<4} {:<8} {:>16} {:>8} {:>14} {:>10}",
        "rank", "family", "log-likelihood", "params", "AIC", "converged"
    );
    for (i, r) in report.ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<4} {:<8} {:>16.3} {:>8} {:>14.3} {:>10}",
            i + 1,
            r.family,
            r.log_likelihood,
            r.n_params,
            r.aic,
            if r.converged { "yes" } else { "NO" }
        );
    }
    out
}

pub fn render_compare_csv(report: &CompareReport) -> String {
    let mut out = String::from("rank,family,log_likelihood,n_params,aic,converged\n");
    for (i, r) in report.ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            i + 1,
            r.family,
            r.log_likelihood,
            r.n_params,
            r.aic,
            r.converged
        );
    }
    out
}

pub fn render_fit_csv(report: &FitReport) -> String {
    let mut out = String::from("label,part,estimate,irr,se,z,p,stars\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.coefficients {
        let part = match r.part {
            Part::Count => "count",
            Part::Zero => "zero",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.label,
            part,
            r.estimate,
            r.irr,
            opt(r.se),
            opt(r.z),
            opt(r.p),
            r.stars
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::ParamVector;

    fn fit_with(beta: Vec<f64>, se: Vec<f64>) -> FitResult {
        let k = beta.len();
        let mut cov = vec![0.0; k * k];
        for i in 0..k {
            cov[i * k + i] = se[i] * se[i];
        }
        FitResult {
            family: Family::Poisson,
            estimates: ParamVector {
                beta,
                gamma: vec![],
                log_tau: None,
            },
            count_labels: vec!["(Intercept)".into(), "gender=female".into()],
            zero_labels: vec![],
            free: vec![true; k],
            covariance: Some(cov),
            covariance_error: None,
            log_likelihood: -10.0,
            n_obs: 100,
            n_iterations: 3,
            converged: true,
            gradient_norm: 0.0,
            trace: vec![],
            message: String::new(),
        }
    }

    #[test]
    fn text_contains_table_cell() {
        let fit = fit_with(vec![0.1, 0.872f64.ln()], vec![0.01, 0.030]);
        let report = FitReport::new(&fit, 2, Value::Null);
        let text = render_fit_text(&report);
        let line = text.lines().find(|l| l.starts_with("gender")).unwrap();
        assert!(line.contains("female"));
        assert!(line.ends_with("0.872***(0.030)"));
        assert!(!text.contains("(Intercept)"));
        assert_eq!(report.aic, 24.0);
        assert_eq!(report.dropped_rows, 2);
    }

    #[test]
    fn json_has_contract_fields() {
        let fit = fit_with(vec![0.1, 0.872f64.ln()], vec![0.01, 0.030]);
        let v = serde_json::to_value(FitReport::new(&fit, 0, Value::Null)).unwrap();
        for key in [
            "family",
            "n_obs",
            "dropped_rows",
            "coefficients",
            "tau",
            "log_likelihood",
            "aic",
            "converged",
            "iterations",
            "gradient_norm",
        ] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let c = &v["coefficients"][1];
        for key in ["label", "part", "estimate", "irr", "se", "z", "p", "stars"] {
            assert!(c.get(key).is_some(), "missing coefficient field {key}");
        }
        assert_eq!(c["part"], "count");
        assert_eq!(c["stars"], "***");
        assert_eq!(v["covariance"]["labels"][1], "count:gender=female");
    }
}
