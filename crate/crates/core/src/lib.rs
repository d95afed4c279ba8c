//! Count-data regression: Poisson, negative binomial and zero-inflated
//! negative binomial models fitted by maximum likelihood, with chi-square
//! screening, dispersion and zero-inflation diagnostics, and a simulator for
//! parameter-recovery checks.

pub mod cli;
pub mod data_model;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod fitter;
pub mod likelihood;
pub mod optim;
pub mod report;
pub mod simulation;
mod special;

pub use data_model::{build_design, load_csv, read_csv, Column, Dataset, DesignMatrix, Family, ModelSpec, Schema};
pub use diagnostics::{
    chi_square_independence, chi_square_sf, dispersion_summary, histogram_csv, zero_summary, ContingencyResult,
    DispersionSummary, DispersionVerdict, ZeroSummary,
};
pub use distributions::{
    nb_log_pmf, nb_moments, sample_nb, sample_zinb, zinb_log_pmf, zinb_moments, Moments, NbParams, ZinbParams,
};
pub use error::{Error, Result};
pub use fitter::{compare_models, fit, fit_model, irr_table, CoefficientRow, ComparisonRow, FitOptions, FitResult, Part};
pub use likelihood::{gradient, log_likelihood, ModelData, ParamVector};
pub use simulation::{paper_like_preset, simulate, CovariateSpec, SimConfig};
pub use special::significance_stars;
