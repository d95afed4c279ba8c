#![allow(dead_code)]

use std::collections::BTreeMap;

use countreg::{simulate, CovariateSpec, Dataset, Family, SimConfig};

/// One numeric covariate `x` in the count part and, for the ZINB, one numeric
/// covariate `w` in the zero part.
pub fn simple_config(family: Family, n: usize, seed: u64) -> SimConfig {
    let mut covariates = vec![CovariateSpec::numeric("x", -1.0, 1.0, false)];
    let mut true_beta = BTreeMap::from([("(Intercept)".to_string(), 0.5), ("x".to_string(), -0.3)]);
    let mut zero_covariates = vec![];
    let mut true_gamma = BTreeMap::new();
    if family == Family::Zinb {
        covariates.push(CovariateSpec::numeric("w", -1.0, 1.0, false));
        true_beta.insert("w".to_string(), 0.0);
        zero_covariates.push("w".to_string());
        true_gamma = BTreeMap::from([("(Intercept)".to_string(), -1.0), ("w".to_string(), 0.8)]);
    }
    SimConfig {
        n_rows: n,
        family,
        response: "y".into(),
        covariates,
        zero_covariates,
        true_beta,
        true_gamma,
        true_tau: (family != Family::Poisson).then_some(2.0),
        seed,
    }
}

/// Three count-part covariates (binary, three-level, numeric) and two
/// zero-part covariates (binary, numeric).
pub fn recovery_config(n: usize, seed: u64) -> SimConfig {
    let covariates = vec![
        CovariateSpec::categorical("sex", &["male", "female"], &[0.5, 0.5]),
        CovariateSpec::categorical("wealth", &["poor", "middle", "rich"], &[0.4, 0.3, 0.3]),
        CovariateSpec::numeric("births", 0.0, 4.0, false),
        CovariateSpec::categorical("anc", &["no", "yes"], &[0.4, 0.6]),
        CovariateSpec::numeric("size", -1.0, 1.0, false),
    ];
    let true_beta = BTreeMap::from([
        ("(Intercept)".to_string(), std::f64::consts::LN_2),
        ("sex=female".to_string(), -0.15),
        ("wealth=middle".to_string(), -0.1),
        ("wealth=rich".to_string(), -0.2),
        ("births".to_string(), 0.1),
        ("anc=yes".to_string(), 0.0),
        ("size".to_string(), 0.0),
    ]);
    let true_gamma = BTreeMap::from([
        ("(Intercept)".to_string(), -1.0),
        ("anc=yes".to_string(), 0.5),
        ("size".to_string(), -0.4),
    ]);
    SimConfig {
        n_rows: n,
        family: Family::Zinb,
        response: "y".into(),
        covariates,
        zero_covariates: vec!["anc".into(), "size".into()],
        true_beta,
        true_gamma,
        true_tau: Some(2.0),
        seed,
    }
}

pub const RECOVERY_COUNT_COVARIATES: [&str; 3] = ["sex", "wealth", "births"];
pub const RECOVERY_ZERO_COVARIATES: [&str; 2] = ["anc", "size"];

pub fn sim(config: &SimConfig) -> Dataset {
    simulate(config).expect("valid simulation config")
}
