//! Synthetic datasets from fully specified Poisson / NB / ZINB regressions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_model::{build_design, Column, Dataset, DesignMatrix, Family};
use crate::distributions::{draw_nb, draw_poisson, draw_zinb, MIN_TAU};
use crate::error::{Error, Result};
use crate::special::logistic;

/// Largest absolute linear predictor a configuration may produce.
pub const MAX_SIM_LINEAR_PREDICTOR: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CovariateKind {
    /// The first level is the reference level of the implied design.
    Categorical { levels: Vec<String>, probabilities: Vec<f64> },
    /// Uniform on `[low, high)`, or on the integers `low..=high`.
    Numeric { low: f64, high: f64, integer: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: CovariateKind,
}

impl CovariateSpec {
    pub fn categorical(name: &str, levels: &[&str], probabilities: &[f64]) -> Self {
        Self {
            name: name.to_string(),
            kind: CovariateKind::Categorical {
                levels: levels.iter().map(|s| s.to_string()).collect(),
                probabilities: probabilities.to_vec(),
            },
        }
    }

    pub fn numeric(name: &str, low: f64, high: f64, integer: bool) -> Self {
        Self {
            name: name.to_string(),
            kind: CovariateKind::Numeric { low, high, integer },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_rows: usize,
    pub family: Family,
    pub response: String,
    /// All covariates enter the count part, in this order.
    pub covariates: Vec<CovariateSpec>,
    /// Subset of covariate names entering the zero part (ZINB only).
    pub zero_covariates: Vec<String>,
    /// Keyed by count-design column label, e.g. `(Intercept)`, `wealth=rich`.
    pub true_beta: BTreeMap<String, f64>,
    /// Keyed by zero-design column label (ZINB only).
    pub true_gamma: BTreeMap<String, f64>,
    pub true_tau: Option<f64>,
    pub seed: u64,
}

/// Moments of the preset's marginal count distribution.
pub const PRESET_MEAN: f64 = 0.701;
pub const PRESET_VARIANCE: f64 = 1.003;

/// NB design whose marginal mean and variance are 0.701 and 1.003 in
/// expectation: every covariate has a zero coefficient, the intercept is
/// `ln 0.701`, and `τ = 0.701² / (1.003 − 0.701)`.
pub fn paper_like_preset() -> SimConfig {
    let covariates = vec![
        CovariateSpec::categorical("gender", &["male", "female"], &[0.51, 0.49]),
        CovariateSpec::categorical("area", &["urban", "rural"], &[0.3, 0.7]),
        CovariateSpec::categorical("wealth", &["poor", "middle", "rich"], &[0.4, 0.2, 0.4]),
        CovariateSpec::numeric("births", 1.0, 6.0, true),
    ];
    let true_beta = BTreeMap::from([
        ("(Intercept)".to_string(), PRESET_MEAN.ln()),
        ("gender=female".to_string(), 0.0),
        ("area=rural".to_string(), 0.0),
        ("wealth=middle".to_string(), 0.0),
        ("wealth=rich".to_string(), 0.0),
        ("births".to_string(), 0.0),
    ]);
    SimConfig {
        n_rows: 21_000,
        family: Family::Nb,
        response: "malnourished".to_string(),
        covariates,
        zero_covariates: vec![],
        true_beta,
        true_gamma: BTreeMap::new(),
        true_tau: Some(PRESET_MEAN * PRESET_MEAN / (PRESET_VARIANCE - PRESET_MEAN)),
        seed: 2019,
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::Config("n_rows must be at least 1".into()));
        }
        if self.covariates.iter().any(|c| c.name == self.response) {
            return Err(Error::Config("response name clashes with a covariate".into()));
        }
        for c in &self.covariates {
            match &c.kind {
                CovariateKind::Categorical { levels, probabilities } => {
                    if levels.len() < 2 || levels.len() != probabilities.len() {
                        return Err(Error::Config(format!(
                            "`{}` needs at least two levels and one probability per level",
                            c.name
                        )));
                    }
                    if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                        return Err(Error::Config(format!("`{}` has an invalid probability", c.name)));
                    }
                    let total: f64 = probabilities.iter().sum();
                    if (total - 1.0).abs() > 1e-9 {
                        return Err(Error::Config(format!(
                            "level probabilities of `{}` sum to {total}, not 1",
                            c.name
                        )));
                    }
                }
                CovariateKind::Numeric { low, high, .. } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return Err(Error::Config(format!("`{}` needs finite bounds low < high", c.name)));
                    }
                }
            }
        }
        for z in &self.zero_covariates {
            if !self.covariates.iter().any(|c| &c.name == z) {
                return Err(Error::Config(format!("zero covariate `{z}` is not a declared covariate")));
            }
        }
        match self.family {
            Family::Poisson => {
                if self.true_tau.is_some() {
                    return Err(Error::Config("poisson takes no shape".into()));
                }
            }
            _ => match self.true_tau {
                Some(t) if t.is_finite() && t > MIN_TAU => {}
                _ => return Err(Error::Config("nb and zinb need a finite positive shape".into())),
            },
        }
        if self.family != Family::Zinb && (!self.zero_covariates.is_empty() || !self.true_gamma.is_empty()) {
            return Err(Error::Config("zero-part settings are only valid for zinb".into()));
        }
        Ok(())
    }
}

fn ordered_truth(labels: &[String], truth: &BTreeMap<String, f64>, part: &str) -> Result<Vec<f64>> {
    let expected: std::collections::BTreeSet<&String> = labels.iter().collect();
    let given: std::collections::BTreeSet<&String> = truth.keys().collect();
    if expected != given {
        return Err(Error::Config(format!(
            "{part} coefficients must be keyed exactly by {labels:?}, got {:?}",
            truth.keys().collect::<Vec<_>>()
        )));
    }
    Ok(labels.iter().map(|l| truth[l]).collect())
}

fn linear_predictors(design: &DesignMatrix, coef: &[f64], part: &str) -> Result<Vec<f64>> {
    (0..design.n_rows())
        .map(|i| {
            let v = design.linear_predictor(i, coef);
            if v.abs() > MAX_SIM_LINEAR_PREDICTOR {
                Err(Error::Config(format!(
                    "{part} linear predictor {v} at row {i} exceeds ±{MAX_SIM_LINEAR_PREDICTOR}"
                )))
            } else {
                Ok(v)
            }
        })
        .collect()
}

/// Draws covariates row by row, then one count per row, all from a single
/// seeded stream.
pub fn simulate(config: &SimConfig) -> Result<Dataset> {
    config.validate()?;
    let n = config.n_rows;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut columns: Vec<(String, Column)> = config
        .covariates
        .iter()
        .map(|c| {
            let col = match &c.kind {
                CovariateKind::Categorical { levels, .. } => Column::Categorical {
                    levels: levels.clone(),
                    codes: Vec::with_capacity(n),
                },
                CovariateKind::Numeric { .. } => Column::Numeric(Vec::with_capacity(n)),
            };
            (c.name.clone(), col)
        })
        .collect();
    for _ in 0..n {
        for (spec, (_, col)) in config.covariates.iter().zip(columns.iter_mut()) {
            match (&spec.kind, col) {
                (CovariateKind::Categorical { probabilities, .. }, Column::Categorical { codes, .. }) => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut pick = probabilities.len() - 1;
                    for (k, p) in probabilities.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            pick = k;
                            break;
                        }
                    }
                    codes.push(pick);
                }
                (CovariateKind::Numeric { low, high, integer }, Column::Numeric(values)) => {
                    let v = if *integer {
                        rng.random_range(low.ceil() as i64..=high.floor() as i64) as f64
                    } else {
                        rng.random_range(*low..*high)
                    };
                    values.push(v);
                }
                _ => unreachable!("column built from the same spec"),
            }
        }
    }

    // A placeholder response column keeps the row count when there are no
    // covariates.
    let mut design_columns = vec![(String::new(), Column::Count(vec![0; n]))];
    design_columns.extend(columns.iter().cloned());
    let covariates = Dataset::new(design_columns)?;
    let names: Vec<String> = config.covariates.iter().map(|c| c.name.clone()).collect();
    let x = build_design(&covariates, &names, &BTreeMap::new())?;
    let beta = ordered_truth(x.labels(), &config.true_beta, "count-part")?;
    let eta = linear_predictors(&x, &beta, "count")?;
    let zeta = if config.family == Family::Zinb {
        let z = build_design(&covariates, &config.zero_covariates, &BTreeMap::new())?;
        let gamma = ordered_truth(z.labels(), &config.true_gamma, "zero-part")?;
        Some(linear_predictors(&z, &gamma, "zero")?)
    } else {
        None
    };

    let tau = config.true_tau.unwrap_or(f64::INFINITY);
    let y: Vec<u64> = (0..n)
        .map(|i| {
            let mu = eta[i].exp();
            match config.family {
                Family::Poisson => draw_poisson(&mut rng, mu),
                Family::Nb => draw_nb(&mut rng, mu, tau),
                Family::Zinb => {
                    let p = logistic(zeta.as_ref().expect("zinb")[i]);
                    draw_zinb(&mut rng, mu, tau, p)
                }
            }
        })
        .collect();

    let mut all = vec![(config.response.clone(), Column::Count(y))];
    all.extend(columns);
    Dataset::new(all)
}

/// Contents of the truth sidecar written next to a simulated CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// Schema string that loads the CSV back with the same vocabularies.
    pub schema: String,
    pub config: SimConfig,
}

pub fn truth_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".truth.json");
    PathBuf::from(s)
}

/// Writes the CSV and its `<csv>.truth.json` sidecar; returns the sidecar path.
pub fn write_simulation(csv_path: &Path, config: &SimConfig, ds: &Dataset) -> Result<PathBuf> {
    let file = std::fs::File::create(csv_path)?;
    ds.write_csv(std::io::BufWriter::new(file))?;
    let truth = Truth {
        schema: ds.schema().to_string(),
        config: config.clone(),
    };
    let path = truth_path(csv_path);
    std::fs::write(&path, serde_json::to_string_pretty(&truth)? + "\n")?;
    Ok(path)
}

pub fn read_truth(path: &Path) -> Result<Truth> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
