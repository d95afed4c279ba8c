//! Log-likelihood and analytic gradient of the count regression families.
//!
//! The mean follows `log λᵢ = xᵢ'β` and, for the ZINB, the structural-zero
//! probability follows `logit pᵢ = zᵢ'γ`. The shape enters as `log τ`.
//! Every per-observation term is the log-pmf from [`crate::distributions`], so
//! the likelihood is the sum of log-probabilities of the observed counts.

use serde::{Deserialize, Serialize};

use crate::data_model::{build_design, DesignMatrix, Family, ModelSpec};
use crate::data_model::Dataset;
use crate::distributions::{nb_log_pmf_eta, poisson_log_pmf_eta, zinb_log_pmf_parts, MIN_TAU};
use crate::error::{Error, Result};
use crate::special::{digamma_diff, logistic, softplus};

/// Linear predictors above this overflow the mean in double precision.
pub const MAX_LINEAR_PREDICTOR: f64 = 700.0;

/// Response, designs and family for one model, validated for shape.
#[derive(Debug, Clone)]
pub struct ModelData {
    family: Family,
    x: DesignMatrix,
    z: Option<DesignMatrix>,
    y: Vec<u64>,
}

impl ModelData {
    /// For the ZINB, `z` defaults to an intercept-only zero part.
    pub fn new(family: Family, x: DesignMatrix, z: Option<DesignMatrix>, y: Vec<u64>) -> Result<Self> {
        let n = y.len();
        if x.n_rows() != n {
            return Err(Error::Spec(format!("count design has {} rows, response has {n}", x.n_rows())));
        }
        let z = match family {
            Family::Zinb => {
                let z = z.unwrap_or_else(|| DesignMatrix::intercept_only(n));
                if z.n_rows() != n {
                    return Err(Error::Spec(format!("zero design has {} rows, response has {n}", z.n_rows())));
                }
                Some(z)
            }
            _ if z.is_some() => {
                return Err(Error::Spec("a zero-part design is only allowed for the zinb family".into()))
            }
            _ => None,
        };
        Ok(Self { family, x, z, y })
    }

    pub fn from_spec(spec: &ModelSpec, ds: &Dataset) -> Result<Self> {
        spec.validate(ds)?;
        let y = ds.counts(&spec.response)?.to_vec();
        let x = build_design(ds, &spec.count_covariates, &spec.reference_levels)?;
        let z = match spec.family {
            Family::Zinb => Some(build_design(ds, &spec.zero_covariates, &spec.reference_levels)?),
            _ => None,
        };
        Self::new(spec.family, x, z, y)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn x(&self) -> &DesignMatrix {
        &self.x
    }

    pub fn z(&self) -> Option<&DesignMatrix> {
        self.z.as_ref()
    }

    pub fn y(&self) -> &[u64] {
        &self.y
    }

    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_count(&self) -> usize {
        self.x.n_cols()
    }

    pub fn n_zero(&self) -> usize {
        self.z.as_ref().map_or(0, |z| z.n_cols())
    }

    /// Length of the flat parameter vector `[β, γ, log τ]`.
    pub fn n_params(&self) -> usize {
        self.n_count() + self.n_zero() + usize::from(self.family.has_shape())
    }

    /// Flat-vector index of `log τ`, if the family has a shape.
    pub fn log_tau_index(&self) -> Option<usize> {
        self.family.has_shape().then(|| self.n_count() + self.n_zero())
    }

    /// Same model with a different family, reusing the designs.
    pub fn with_family(&self, family: Family) -> Result<Self> {
        let z = if family == Family::Zinb { self.z.clone() } else { None };
        Self::new(family, self.x.clone(), z, self.y.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub log_tau: Option<f64>,
}

impl ParamVector {
    pub fn tau(&self) -> Option<f64> {
        self.log_tau.map(f64::exp)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.beta.len() + self.gamma.len() + 1);
        v.extend_from_slice(&self.beta);
        v.extend_from_slice(&self.gamma);
        v.extend(self.log_tau);
        v
    }

    pub fn from_flat(data: &ModelData, flat: &[f64]) -> Result<Self> {
        if flat.len() != data.n_params() {
            return Err(Error::Spec(format!(
                "expected {} parameters, got {}",
                data.n_params(),
                flat.len()
            )));
        }
        let d = data.n_count();
        let q = data.n_zero();
        Ok(Self {
            beta: flat[..d].to_vec(),
            gamma: flat[d..d + q].to_vec(),
            log_tau: data.log_tau_index().map(|i| flat[i]),
        })
    }

    fn check(&self, data: &ModelData) -> Result<()> {
        if self.beta.len() != data.n_count()
            || self.gamma.len() != data.n_zero()
            || self.log_tau.is_some() != data.family.has_shape()
        {
            return Err(Error::Spec("parameter vector does not match the model layout".into()));
        }
        if self.beta.iter().chain(&self.gamma).chain(&self.log_tau).any(|v| !v.is_finite()) {
            return Err(Error::Domain("parameters must be finite".into()));
        }
        Ok(())
    }
}

/// Per-observation log-pmf and its derivatives with respect to the count
/// linear predictor, the zero linear predictor and `log τ`.
struct RowTerms {
    log_pmf: f64,
    d_eta: f64,
    d_zeta: f64,
    d_log_tau: f64,
}

struct Evaluator<'a> {
    data: &'a ModelData,
    params: &'a ParamVector,
    tau: f64,
}

impl<'a> Evaluator<'a> {
    fn new(data: &'a ModelData, params: &'a ParamVector) -> Result<Self> {
        params.check(data)?;
        let tau = match params.log_tau {
            Some(lt) => {
                let tau = lt.exp();
                if !tau.is_finite() || tau <= MIN_TAU {
                    return Err(Error::Domain(format!("shape exp({lt}) is outside (1e-10, inf)")));
                }
                tau
            }
            None => f64::INFINITY,
        };
        Ok(Self { data, params, tau })
    }

    fn row(&self, i: usize, want_grad: bool) -> Result<RowTerms> {
        let y = self.data.y[i];
        let eta = self.data.x.linear_predictor(i, &self.params.beta);
        if !eta.is_finite() || eta > MAX_LINEAR_PREDICTOR {
            return Err(Error::Evaluation {
                row: i,
                message: format!("count linear predictor {eta} overflows the mean"),
            });
        }
        let mu = eta.exp();
        let tau = self.tau;
        let mut t = RowTerms {
            log_pmf: 0.0,
            d_eta: 0.0,
            d_zeta: 0.0,
            d_log_tau: 0.0,
        };
        let yf = y as f64;
        match self.data.family {
            Family::Poisson => {
                t.log_pmf = poisson_log_pmf_eta(y, eta, mu);
                if want_grad {
                    t.d_eta = yf - mu;
                }
            }
            Family::Nb => {
                t.log_pmf = nb_log_pmf_eta(y, eta, mu, tau);
                if want_grad {
                    t.d_eta = tau * (yf - mu) / (tau + mu);
                    t.d_log_tau = tau * nb_shape_score(y, mu, tau);
                }
            }
            Family::Zinb => {
                let z = self.data.z.as_ref().expect("zinb has a zero design");
                let zeta = z.linear_predictor(i, &self.params.gamma);
                if !zeta.is_finite() {
                    return Err(Error::Evaluation {
                        row: i,
                        message: "zero-part linear predictor is not finite".into(),
                    });
                }
                let log_p = -softplus(-zeta);
                let log_1mp = -softplus(zeta);
                let nb_at_y = nb_log_pmf_eta(y, eta, mu, tau);
                t.log_pmf = zinb_log_pmf_parts(y, log_p, log_1mp, nb_at_y);
                if want_grad {
                    let p = logistic(zeta);
                    let nb_d_eta = tau * (yf - mu) / (tau + mu);
                    let nb_d_log_tau = tau * nb_shape_score(y, mu, tau);
                    if y == 0 {
                        // Posterior weight of the NB component given a zero.
                        let w = (log_1mp + nb_at_y - t.log_pmf).exp();
                        t.d_zeta = (1.0 - w) - p;
                        t.d_eta = w * nb_d_eta;
                        t.d_log_tau = w * nb_d_log_tau;
                    } else {
                        t.d_zeta = -p;
                        t.d_eta = nb_d_eta;
                        t.d_log_tau = nb_d_log_tau;
                    }
                }
            }
        }
        if !t.log_pmf.is_finite() {
            return Err(Error::Evaluation {
                row: i,
                message: format!("log-probability of y={y} is not finite"),
            });
        }
        Ok(t)
    }
}

/// `∂ ln P_NB(y) / ∂τ`.
fn nb_shape_score(y: u64, mu: f64, tau: f64) -> f64 {
    digamma_diff(y, tau) - (mu / tau).ln_1p() + (mu - y as f64) / (tau + mu)
}

pub fn log_likelihood(data: &ModelData, params: &ParamVector) -> Result<f64> {
    let ev = Evaluator::new(data, params)?;
    let mut total = 0.0;
    for i in 0..data.n_obs() {
        total += ev.row(i, false)?.log_pmf;
    }
    Ok(total)
}

/// Gradient over the flat layout `[β, γ, log τ]`.
pub fn gradient(data: &ModelData, params: &ParamVector) -> Result<Vec<f64>> {
    value_and_gradient(data, params).map(|(_, g)| g)
}

pub fn value_and_gradient(data: &ModelData, params: &ParamVector) -> Result<(f64, Vec<f64>)> {
    let ev = Evaluator::new(data, params)?;
    let d = data.n_count();
    let q = data.n_zero();
    let mut grad = vec![0.0; data.n_params()];
    let mut total = 0.0;
    // Sequential accumulation keeps results bit-identical across runs.
    for i in 0..data.n_obs() {
        let t = ev.row(i, true)?;
        total += t.log_pmf;
        for (g, x) in grad[..d].iter_mut().zip(data.x.row(i)) {
            *g += t.d_eta * x;
        }
        if let Some(z) = &data.z {
            for (g, zv) in grad[d..d + q].iter_mut().zip(z.row(i)) {
                *g += t.d_zeta * zv;
            }
        }
        if let Some(k) = data.log_tau_index() {
            grad[k] += t.d_log_tau;
        }
    }
    Ok((total, grad))
}

/// `P(Y = 0 | xᵢ, zᵢ)` for every observation.
pub fn zero_probabilities(data: &ModelData, params: &ParamVector) -> Result<Vec<f64>> {
    let zeros = ModelData {
        y: vec![0; data.n_obs()],
        ..data.clone()
    };
    let ev = Evaluator::new(&zeros, params)?;
    (0..zeros.n_obs()).map(|i| ev.row(i, false).map(|t| t.log_pmf.exp())).collect()
}
