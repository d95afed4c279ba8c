//! Bivariate screening and dispersion / zero-inflation summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::checked_gamma_ur;

use crate::data_model::{Column, Dataset, Family};
use crate::error::{Error, Result};
use crate::fitter::{expected_zero_fraction, FitResult};
use crate::likelihood::ModelData;
use crate::special::significance_stars;

/// Expected cell counts below this trigger a warning.
pub const MIN_EXPECTED_WARNING: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyResult {
    pub row_variable: String,
    pub column_variable: String,
    pub row_labels: Vec<String>,
    pub column_labels: Vec<String>,
    pub observed: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    pub chi2: f64,
    pub df: u32,
    pub p_value: f64,
    pub min_expected: f64,
    /// Set when some expected count is below [`MIN_EXPECTED_WARNING`].
    pub low_expected_warning: bool,
    pub stars: String,
    /// Always false; the statistic is the uncorrected Pearson chi-square.
    pub continuity_correction: bool,
}

/// Upper tail of the chi-square distribution, `Q(df/2, x/2)`.
pub fn chi_square_sf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square degrees of freedom must be positive".into()));
    }
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("chi-square statistic must be >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    checked_gamma_ur(df as f64 / 2.0, x / 2.0)
        .map(|p| p.clamp(0.0, 1.0))
        .map_err(|e| Error::Domain(e.to_string()))
}

/// Pearson chi-square test of independence on an `r × c` table of counts.
pub fn chi_square_table(observed: &[Vec<u64>]) -> Result<(Vec<Vec<f64>>, f64, u32, f64)> {
    let r = observed.len();
    let c = observed.first().map_or(0, |row| row.len());
    if r < 2 || c < 2 {
        return Err(Error::DegenerateTable(format!("table is {r}x{c}; need at least 2x2")));
    }
    if observed.iter().any(|row| row.len() != c) {
        return Err(Error::DegenerateTable("ragged table".into()));
    }
    let row_sums: Vec<f64> = observed.iter().map(|row| row.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..c).map(|j| observed.iter().map(|row| row[j]).sum::<u64>() as f64).collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateTable(format!("row {i} has a zero margin")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateTable(format!("column {j} has a zero margin")));
    }
    let total: f64 = row_sums.iter().sum();
    let mut expected = vec![vec![0.0; c]; r];
    let mut chi2 = 0.0;
    for i in 0..r {
        for j in 0..c {
            let e = row_sums[i] * col_sums[j] / total;
            expected[i][j] = e;
            let d = observed[i][j] as f64 - e;
            chi2 += d * d / e;
        }
    }
    let df = ((r - 1) * (c - 1)) as u32;
    let p = chi_square_sf(chi2, df)?;
    Ok((expected, chi2, df, p))
}

/// Observed distinct values of a categorical or count column, as labels and
/// per-row codes.
fn categories(ds: &Dataset, name: &str) -> Result<(Vec<String>, Vec<usize>)> {
    match ds.column(name)? {
        Column::Categorical { levels, codes } => {
            let mut used: Vec<usize> = codes.clone();
            used.sort_unstable();
            used.dedup();
            let remap: BTreeMap<usize, usize> = used.iter().enumerate().map(|(new, &old)| (old, new)).collect();
            let labels = used.iter().map(|&k| levels[k].clone()).collect();
            Ok((labels, codes.iter().map(|k| remap[k]).collect()))
        }
        Column::Count(values) => {
            let mut distinct = values.clone();
            distinct.sort_unstable();
            distinct.dedup();
            let index: BTreeMap<u64, usize> = distinct.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let labels = distinct.iter().map(|v| v.to_string()).collect();
            Ok((labels, values.iter().map(|v| index[v]).collect()))
        }
        Column::Numeric(_) => Err(Error::Spec(format!(
            "column `{name}` is numeric; chi-square screening needs categorical or count columns"
        ))),
    }
}

/// Cross-tabulates `covariate` (rows) against `response` (columns) over the
/// values that occur, then tests independence.
pub fn chi_square_independence(ds: &Dataset, covariate: &str, response: &str) -> Result<ContingencyResult> {
    let (row_labels, row_codes) = categories(ds, covariate)?;
    let (column_labels, col_codes) = categories(ds, response)?;
    let mut observed = vec![vec![0u64; column_labels.len()]; row_labels.len()];
    for (&i, &j) in row_codes.iter().zip(&col_codes) {
        observed[i][j] += 1;
    }
    let (expected, chi2, df, p_value) = chi_square_table(&observed)?;
    let min_expected = expected.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    Ok(ContingencyResult {
        row_variable: covariate.to_string(),
        column_variable: response.to_string(),
        row_labels,
        column_labels,
        observed,
        expected,
        chi2,
        df,
        p_value,
        min_expected,
        low_expected_warning: min_expected < MIN_EXPECTED_WARNING,
        stars: significance_stars(p_value).to_string(),
        continuity_correction: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DispersionVerdict {
    Equidispersed,
    Overdispersed,
    Underdispersed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSummary {
    pub n_obs: usize,
    pub mean: f64,
    /// Sample variance with denominator n − 1.
    pub variance: f64,
    /// `variance / mean`; zero when the variance is zero.
    pub ratio: f64,
    pub verdict: DispersionVerdict,
}

pub fn dispersion_summary(y: &[u64]) -> Result<DispersionSummary> {
    let n = y.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!("dispersion needs at least 2 observations, got {n}")));
    }
    let nf = n as f64;
    let mean = y.iter().map(|&v| v as f64).sum::<f64>() / nf;
    let variance = y.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let ratio = if variance == 0.0 { 0.0 } else { variance / mean };
    let verdict = if ratio > 1.0 {
        DispersionVerdict::Overdispersed
    } else if ratio < 1.0 {
        DispersionVerdict::Underdispersed
    } else {
        DispersionVerdict::Equidispersed
    };
    Ok(DispersionSummary {
        n_obs: n,
        mean,
        variance,
        ratio,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSummary {
    pub n_obs: usize,
    pub observed_zero_fraction: f64,
    /// Family of the fit used for the expected fraction, if any.
    pub family: Option<Family>,
    /// Mean fitted `P(Y = 0)` over the observations.
    pub expected_zero_fraction: Option<f64>,
    /// `(value, count)` for every value from 0 to the maximum.
    pub histogram: Vec<(u64, u64)>,
}

pub fn zero_summary(y: &[u64], fit: Option<(&FitResult, &ModelData)>) -> Result<ZeroSummary> {
    if y.is_empty() {
        return Err(Error::InsufficientData("zero summary needs at least 1 observation".into()));
    }
    let max = *y.iter().max().expect("non-empty");
    let mut counts = vec![0u64; max as usize + 1];
    for &v in y {
        counts[v as usize] += 1;
    }
    let (family, expected) = match fit {
        Some((f, data)) => {
            if data.n_obs() != y.len() {
                return Err(Error::Spec("fit data and response have different lengths".into()));
            }
            (Some(f.family), Some(expected_zero_fraction(f, data)?))
        }
        None => (None, None),
    };
    Ok(ZeroSummary {
        n_obs: y.len(),
        observed_zero_fraction: counts[0] as f64 / y.len() as f64,
        family,
        expected_zero_fraction: expected,
        histogram: counts.into_iter().enumerate().map(|(v, c)| (v as u64, c)).collect(),
    })
}

/// `value,count` lines with a header, for external plotting.
pub fn histogram_csv(summary: &ZeroSummary) -> String {
    let mut out = String::from("value,count\n");
    for (v, c) in &summary.histogram {
        let _ = writeln!(out, "{v},{c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_model::DesignMatrix;
    use crate::fitter::{fit_model, FitOptions};
    use proptest::prelude::*;

    /// Composite Simpson integral of the chi-square density on `[x, upper]`.
    fn sf_by_quadrature(x: f64, df: u32) -> f64 {
        let k = df as f64 / 2.0;
        let norm = 2f64.powf(k) * statrs::function::gamma::gamma(k);
        let density = |t: f64| t.powf(k - 1.0) * (-t / 2.0).exp() / norm;
        let upper = x + 200.0;
        let m = 200_000;
        let h = (upper - x) / m as f64;
        let mut s = density(x) + density(upper);
        for i in 1..m {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * density(x + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn sf_examples() {
        for df in 1..6 {
            assert_eq!(chi_square_sf(0.0, df).unwrap(), 1.0);
        }
        let p = chi_square_sf(6.667, 1).unwrap();
        assert!((p - sf_by_quadrature(6.667, 1)).abs() < 1e-9);
        assert!((p - 0.0098).abs() < 5e-5);
        assert!((chi_square_sf(2.0, 2).unwrap() - (-1f64).exp()).abs() < 1e-14);
        assert!(chi_square_sf(-1.0, 1).is_err());
        assert!(chi_square_sf(1.0, 0).is_err());
    }

    #[test]
    fn sf_matches_quadrature_grid() {
        for df in [1, 2, 3, 7, 12] {
            for x in [0.5, 3.0, 9.0, 20.0] {
                let a = chi_square_sf(x, df).unwrap();
                let b = sf_by_quadrature(x, df);
                assert!((a - b).abs() < 1e-9, "df={df} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn table_examples() {
        let (_, chi2, df, p) = chi_square_table(&[vec![10, 10], vec![10, 10]]).unwrap();
        assert_eq!((chi2, df, p), (0.0, 1, 1.0));

        let (expected, chi2, df, _) = chi_square_table(&[vec![20, 10], vec![10, 20]]).unwrap();
        assert!((chi2 - 20.0 / 3.0).abs() < 1e-12);
        assert_eq!(df, 1);
        assert!(expected.iter().flatten().all(|&e| e == 15.0));

        assert!(matches!(chi_square_table(&[vec![1, 2, 3]]), Err(Error::DegenerateTable(_))));
        assert!(matches!(chi_square_table(&[vec![1], vec![2]]), Err(Error::DegenerateTable(_))));
        assert!(matches!(
            chi_square_table(&[vec![0, 0], vec![1, 2]]),
            Err(Error::DegenerateTable(_))
        ));
    }

    #[test]
    fn independence_from_dataset() {
        let ds = Dataset::new(vec![
            ("y".into(), Column::Count(vec![0, 0, 1, 1, 0, 2, 2, 1])),
            (
                "g".into(),
                Column::Categorical {
                    levels: vec!["a".into(), "b".into(), "unused".into()],
                    codes: vec![0, 0, 0, 1, 1, 1, 1, 0],
                },
            ),
            ("x".into(), Column::Numeric(vec![0.0; 8])),
        ])
        .unwrap();
        let r = chi_square_independence(&ds, "g", "y").unwrap();
        assert_eq!(r.row_labels, vec!["a", "b"]);
        assert_eq!(r.column_labels, vec!["0", "1", "2"]);
        assert_eq!(r.observed, vec![vec![2, 2, 0], vec![1, 1, 2]]);
        assert_eq!(r.df, 2);
        assert!(r.low_expected_warning);
        for (o_row, e_row) in r.observed.iter().zip(&r.expected) {
            let so: u64 = o_row.iter().sum();
            let se: f64 = e_row.iter().sum();
            assert!((so as f64 - se).abs() < 1e-8);
        }
        assert!(chi_square_independence(&ds, "x", "y").is_err());
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion_summary(&[3, 3, 3, 3]).unwrap();
        assert_eq!(d.variance, 0.0);
        assert_eq!(d.verdict, DispersionVerdict::Underdispersed);

        let y: Vec<u64> = (0..30).map(|i| i % 3).collect();
        let d = dispersion_summary(&y).unwrap();
        assert!((d.mean - 1.0).abs() < 1e-15);
        assert!((d.variance - 2.0 / 3.0 * 30.0 / 29.0).abs() < 1e-14);

        assert!(dispersion_summary(&[1]).is_err());
        let d = dispersion_summary(&[0, 2]).unwrap();
        assert_eq!(d.verdict, DispersionVerdict::Overdispersed);
        let d = dispersion_summary(&[0, 1, 2, 1]).unwrap();
        assert_eq!(d.ratio, 2.0 / 3.0);
    }

    #[test]
    fn dispersion_of_nb_draws() {
        let p = crate::distributions::NbParams::new(0.7, 1.6).unwrap();
        let y = crate::distributions::sample_nb(&p, 100_000, 8).unwrap();
        let d = dispersion_summary(&y).unwrap();
        // 1 + λ/τ = 1.4375; the ratio's Monte Carlo SE here is about 0.01.
        assert!((d.ratio - 1.4375).abs() < 0.04, "{}", d.ratio);
        assert_eq!(d.verdict, DispersionVerdict::Overdispersed);
    }

    #[test]
    fn zero_summary_basics() {
        let s = zero_summary(&[1, 2, 3, 1], None).unwrap();
        assert_eq!(s.observed_zero_fraction, 0.0);
        assert_eq!(s.histogram, vec![(0, 0), (1, 2), (2, 1), (3, 1)]);
        assert_eq!(histogram_csv(&s), "value,count\n0,0\n1,2\n2,1\n3,1\n");
        assert!(zero_summary(&[], None).is_err());
    }

    #[test]
    fn zero_summary_with_intercept_poisson_fit() {
        let y: Vec<u64> = vec![0, 1, 2, 1, 0, 2, 1, 1];
        let data = ModelData::new(Family::Poisson, DesignMatrix::intercept_only(8), None, y.clone()).unwrap();
        let fit = fit_model(&data, &FitOptions::default()).unwrap();
        let s = zero_summary(&y, Some((&fit, &data))).unwrap();
        assert!((s.expected_zero_fraction.unwrap() - (-1f64).exp()).abs() < 1e-8);
        assert_eq!(s.observed_zero_fraction, 0.25);
        assert_eq!(s.histogram.iter().map(|(_, c)| c).sum::<u64>(), 8);
    }

    proptest! {
        #[test]
        fn chi2_permutation_and_scaling(
            cells in prop::collection::vec(1u64..40, 6),
            k in 1u64..6,
        ) {
            let table = vec![cells[0..3].to_vec(), cells[3..6].to_vec()];
            let (_, base, _, _) = chi_square_table(&table).unwrap();

            let swapped_rows = vec![table[1].clone(), table[0].clone()];
            let (_, a, _, _) = chi_square_table(&swapped_rows).unwrap();
            prop_assert!((a - base).abs() < 1e-9 * (1.0 + base));

            let permuted_cols: Vec<Vec<u64>> = table.iter().map(|r| vec![r[2], r[0], r[1]]).collect();
            let (_, b, _, _) = chi_square_table(&permuted_cols).unwrap();
            prop_assert!((b - base).abs() < 1e-9 * (1.0 + base));

            let scaled: Vec<Vec<u64>> = table.iter().map(|r| r.iter().map(|v| v * k).collect()).collect();
            let (_, c, _, _) = chi_square_table(&scaled).unwrap();
            prop_assert!((c - k as f64 * base).abs() < 1e-9 * (1.0 + c));
        }

        #[test]
        fn sf_monotone(x in 0.0f64..50.0, dx in 0.01f64..5.0, df in 1u32..20) {
            let a = chi_square_sf(x, df).unwrap();
            let b = chi_square_sf(x + dx, df).unwrap();
            prop_assert!(b <= a);
            let xd = x.max(df as f64 + 1.0);
            prop_assert!(chi_square_sf(xd, df + 1).unwrap() >= chi_square_sf(xd, df).unwrap());
        }
    }
}
