//! Typed datasets, CSV ingestion and dummy-coded design matrices.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const INTERCEPT_LABEL: &str = "(Intercept)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ColumnKind {
    Count,
    /// `levels`, when given, fixes the vocabulary and its order.
    Categorical { levels: Option<Vec<String>> },
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDecl {
    pub name: String,
    pub kind: ColumnKind,
}

/// Column-type declarations. Textual form is a comma or newline separated
/// list of `name:type` entries where type is `count`, `numeric` or
/// `categorical`, the latter optionally followed by `[l1|l2|...]`:
///
/// ```text
/// malnourished:count,wealth:categorical[poor|middle|rich],births:numeric
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnDecl>,
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut columns = Vec::new();
        let mut seen = BTreeSet::new();
        for entry in split_schema_entries(s) {
            let entry = entry.trim();
            if entry.is_empty() || entry.starts_with('#') {
                continue;
            }
            let (name, ty) = entry
                .split_once(':')
                .ok_or_else(|| Error::Schema(format!("entry `{entry}` is not of the form name:type")))?;
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(Error::Schema(format!("entry `{entry}` has an empty column name")));
            }
            let ty = ty.trim();
            let kind = match ty {
                "count" => ColumnKind::Count,
                "numeric" => ColumnKind::Numeric,
                "categorical" => ColumnKind::Categorical { levels: None },
                _ if ty.starts_with("categorical[") && ty.ends_with(']') => {
                    let inner = &ty["categorical[".len()..ty.len() - 1];
                    let levels: Vec<String> = inner.split('|').map(|l| l.trim().to_string()).collect();
                    let distinct: BTreeSet<&String> = levels.iter().collect();
                    if levels.iter().any(|l| l.is_empty()) || distinct.len() != levels.len() {
                        return Err(Error::Schema(format!(
                            "column `{name}`: level list must be non-empty and distinct"
                        )));
                    }
                    ColumnKind::Categorical { levels: Some(levels) }
                }
                other => return Err(Error::Schema(format!("column `{name}`: unknown type `{other}`"))),
            };
            if !seen.insert(name.clone()) {
                return Err(Error::Schema(format!("column `{name}` declared twice")));
            }
            columns.push(ColumnDecl { name, kind });
        }
        if columns.is_empty() {
            return Err(Error::Schema("no columns declared".into()));
        }
        Ok(Schema { columns })
    }
}

/// Splits on commas and newlines that are not inside a `[...]` level list.
fn split_schema_entries(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth = depth.saturating_sub(1),
            ',' | '\n' if depth == 0 => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.columns.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match &c.kind {
                ColumnKind::Count => write!(f, "{}:count", c.name)?,
                ColumnKind::Numeric => write!(f, "{}:numeric", c.name)?,
                ColumnKind::Categorical { levels: None } => write!(f, "{}:categorical", c.name)?,
                ColumnKind::Categorical { levels: Some(l) } => {
                    write!(f, "{}:categorical[{}]", c.name, l.join("|"))?
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Count(Vec<u64>),
    /// `codes[i]` indexes into `levels`. The vocabulary may contain levels
    /// that no row uses.
    Categorical { levels: Vec<String>, codes: Vec<usize> },
    Numeric(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Count(v) => v.len(),
            Column::Categorical { codes, .. } => codes.len(),
            Column::Numeric(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn cell_string(&self, row: usize) -> String {
        match self {
            Column::Count(v) => v[row].to_string(),
            Column::Categorical { levels, codes } => levels[codes[row]].clone(),
            Column::Numeric(v) => format!("{}", v[row]),
        }
    }

    fn kind(&self) -> ColumnKind {
        match self {
            Column::Count(_) => ColumnKind::Count,
            Column::Categorical { levels, .. } => ColumnKind::Categorical {
                levels: Some(levels.clone()),
            },
            Column::Numeric(_) => ColumnKind::Numeric,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    names: Vec<String>,
    columns: Vec<Column>,
    n_rows: usize,
    dropped_rows: usize,
}

impl Dataset {
    pub fn new(columns: Vec<(String, Column)>) -> Result<Self> {
        let n_rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        let mut seen = BTreeSet::new();
        for (name, col) in &columns {
            if col.len() != n_rows {
                return Err(Error::Schema(format!(
                    "column `{name}` has {} rows, expected {n_rows}",
                    col.len()
                )));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate column `{name}`")));
            }
            if let Column::Categorical { levels, codes } = col {
                if codes.iter().any(|&c| c >= levels.len()) {
                    return Err(Error::Schema(format!("column `{name}` has a code outside its vocabulary")));
                }
            }
        }
        let (names, columns) = columns.into_iter().unzip();
        Ok(Self {
            names,
            columns,
            n_rows,
            dropped_rows: 0,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Rows removed by listwise deletion during loading.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    pub fn column_names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| Error::Spec(format!("no column named `{name}`")))
    }

    pub fn counts(&self, name: &str) -> Result<&[u64]> {
        match self.column(name)? {
            Column::Count(v) => Ok(v),
            _ => Err(Error::Spec(format!("column `{name}` is not a count column"))),
        }
    }

    /// Schema that reproduces this dataset's column types and vocabularies.
    pub fn schema(&self) -> Schema {
        Schema {
            columns: self
                .names
                .iter()
                .zip(&self.columns)
                .map(|(name, col)| ColumnDecl {
                    name: name.clone(),
                    kind: col.kind(),
                })
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.names)?;
        for row in 0..self.n_rows {
            w.write_record(self.columns.iter().map(|c| c.cell_string(row)))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t == "NA"
}

pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

/// Reads a headed CSV, keeping only the declared columns. Rows with a
/// missing value in any declared column are dropped and counted.
pub fn read_csv<R: Read>(reader: R, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let positions: Vec<usize> = schema
        .columns
        .iter()
        .map(|decl| {
            headers
                .iter()
                .position(|h| h.trim() == decl.name)
                .ok_or_else(|| Error::Schema(format!("declared column `{}` not found in header", decl.name)))
        })
        .collect::<Result<_>>()?;

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); schema.columns.len()];
    let mut vocab: Vec<BTreeSet<String>> = vec![BTreeSet::new(); schema.columns.len()];
    let mut dropped = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let row = idx + 1;
        let cells: Vec<&str> = positions
            .iter()
            .map(|&p| record.get(p).unwrap_or(""))
            .collect();
        // Vocabularies include levels seen on rows that are later dropped.
        for (j, decl) in schema.columns.iter().enumerate() {
            if let ColumnKind::Categorical { levels } = &decl.kind {
                let cell = cells[j].trim();
                if is_missing(cell) {
                    continue;
                }
                match levels {
                    Some(levels) if !levels.iter().any(|l| l == cell) => {
                        return Err(Error::Parse {
                            row,
                            column: decl.name.clone(),
                            message: format!("level `{cell}` is not in the declared vocabulary"),
                        })
                    }
                    Some(_) => {}
                    None => {
                        vocab[j].insert(cell.to_string());
                    }
                }
            }
        }
        if cells.iter().any(|c| is_missing(c)) {
            dropped += 1;
            continue;
        }
        for (j, decl) in schema.columns.iter().enumerate() {
            let cell = cells[j].trim();
            let bad = |message: String| Error::Parse {
                row,
                column: decl.name.clone(),
                message,
            };
            match decl.kind {
                ColumnKind::Count => {
                    cell.parse::<u64>()
                        .map_err(|_| bad(format!("`{cell}` is not a nonnegative integer count")))?;
                }
                ColumnKind::Numeric => {
                    let v = cell
                        .parse::<f64>()
                        .map_err(|_| bad(format!("`{cell}` is not a number")))?;
                    if !v.is_finite() {
                        return Err(bad(format!("`{cell}` is not finite")));
                    }
                }
                ColumnKind::Categorical { .. } => {}
            }
            raw[j].push(cell.to_string());
        }
    }

    let mut columns = Vec::with_capacity(schema.columns.len());
    for ((decl, cells), seen) in schema.columns.iter().zip(raw).zip(vocab) {
        let col = match &decl.kind {
            ColumnKind::Count => Column::Count(cells.iter().map(|c| c.parse().unwrap()).collect()),
            ColumnKind::Numeric => Column::Numeric(cells.iter().map(|c| c.parse().unwrap()).collect()),
            ColumnKind::Categorical { levels } => {
                let levels = levels.clone().unwrap_or_else(|| seen.into_iter().collect());
                let index: BTreeMap<&str, usize> =
                    levels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
                let codes = cells.iter().map(|c| index[c.as_str()]).collect();
                Column::Categorical { levels, codes }
            }
        };
        columns.push((decl.name.clone(), col));
    }
    let mut ds = Dataset::new(columns)?;
    ds.dropped_rows = dropped;
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    Nb,
    Zinb,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Poisson => "poisson",
            Family::Nb => "nb",
            Family::Zinb => "zinb",
        }
    }

    pub fn has_shape(&self) -> bool {
        !matches!(self, Family::Poisson)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "poisson" => Ok(Family::Poisson),
            "nb" | "negbin" => Ok(Family::Nb),
            "zinb" => Ok(Family::Zinb),
            other => Err(Error::Spec(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    pub response: String,
    /// Covariates of the log-linked mean.
    pub count_covariates: Vec<String>,
    /// Covariates of the logit-linked zero-inflation probability (ZINB only).
    pub zero_covariates: Vec<String>,
    /// Reference level per categorical column; unlisted columns use the
    /// first level of their vocabulary.
    pub reference_levels: BTreeMap<String, String>,
}

impl ModelSpec {
    pub fn new(family: Family, response: impl Into<String>) -> Self {
        Self {
            family,
            response: response.into(),
            count_covariates: Vec::new(),
            zero_covariates: Vec::new(),
            reference_levels: BTreeMap::new(),
        }
    }

    pub fn with_count_covariates<S: AsRef<str>>(mut self, covs: &[S]) -> Self {
        self.count_covariates = covs.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn with_zero_covariates<S: AsRef<str>>(mut self, covs: &[S]) -> Self {
        self.zero_covariates = covs.iter().map(|s| s.as_ref().to_string()).collect();
        self
    }

    pub fn with_reference(mut self, column: impl Into<String>, level: impl Into<String>) -> Self {
        self.reference_levels.insert(column.into(), level.into());
        self
    }

    pub fn validate(&self, ds: &Dataset) -> Result<()> {
        ds.counts(&self.response)?;
        if self.family != Family::Zinb && !self.zero_covariates.is_empty() {
            return Err(Error::Spec("zero-part covariates are only allowed for the zinb family".into()));
        }
        for (col, level) in &self.reference_levels {
            match ds.column(col)? {
                Column::Categorical { levels, .. } => {
                    if !levels.contains(level) {
                        return Err(Error::Spec(format!(
                            "reference level `{level}` is not in the vocabulary of `{col}`"
                        )));
                    }
                }
                _ => return Err(Error::Spec(format!("reference level given for non-categorical `{col}`"))),
            }
        }
        for cov in self.count_covariates.iter().chain(&self.zero_covariates) {
            if cov == &self.response {
                return Err(Error::Spec(format!("response `{cov}` cannot also be a covariate")));
            }
        }
        Ok(())
    }
}

/// Row-major `n_rows × n_cols` matrix whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl DesignMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn intercept_only(n_rows: usize) -> Self {
        Self {
            n_rows,
            n_cols: 1,
            values: vec![1.0; n_rows],
            labels: vec![INTERCEPT_LABEL.to_string()],
        }
    }

    /// `x_i' β`.
    pub fn linear_predictor(&self, i: usize, coef: &[f64]) -> f64 {
        self.row(i).iter().zip(coef).map(|(x, b)| x * b).sum()
    }
}

/// Intercept followed by one block per covariate in the given order. A
/// categorical with k levels contributes k−1 indicator columns labeled
/// `name=level`, omitting its reference level; numeric and count columns
/// pass through unchanged.
pub fn build_design(
    ds: &Dataset,
    covariates: &[String],
    reference_levels: &BTreeMap<String, String>,
) -> Result<DesignMatrix> {
    let n = ds.n_rows();
    let mut seen = BTreeSet::new();
    let mut blocks: Vec<(String, Vec<f64>)> = Vec::new();
    for cov in covariates {
        if !seen.insert(cov.as_str()) {
            return Err(Error::Spec(format!("covariate `{cov}` listed twice")));
        }
        match ds.column(cov)? {
            Column::Numeric(v) => blocks.push((cov.clone(), v.clone())),
            Column::Count(v) => blocks.push((cov.clone(), v.iter().map(|&c| c as f64).collect())),
            Column::Categorical { levels, codes } => {
                if levels.len() < 2 {
                    return Err(Error::DegenerateCovariate(cov.clone()));
                }
                let reference = match reference_levels.get(cov) {
                    Some(r) => levels.iter().position(|l| l == r).ok_or_else(|| {
                        Error::Spec(format!("reference level `{r}` is not in the vocabulary of `{cov}`"))
                    })?,
                    None => 0,
                };
                for (k, level) in levels.iter().enumerate() {
                    if k == reference {
                        continue;
                    }
                    let col = codes.iter().map(|&c| if c == k { 1.0 } else { 0.0 }).collect();
                    blocks.push((format!("{cov}={level}"), col));
                }
            }
        }
    }
    let n_cols = 1 + blocks.len();
    let mut values = Vec::with_capacity(n * n_cols);
    for i in 0..n {
        values.push(1.0);
        values.extend(blocks.iter().map(|(_, col)| col[i]));
    }
    let mut labels = vec![INTERCEPT_LABEL.to_string()];
    labels.extend(blocks.into_iter().map(|(l, _)| l));
    Ok(DesignMatrix {
        n_rows: n,
        n_cols,
        values,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCHEMA: &str = "y:count,wealth:categorical[poor|middle|rich],births:numeric";

    fn schema() -> Schema {
        SCHEMA.parse().unwrap()
    }

    #[test]
    fn schema_round_trips() {
        let s = schema();
        assert_eq!(s.to_string(), SCHEMA);
        assert_eq!(s.to_string().parse::<Schema>().unwrap(), s);
        assert!("y:int".parse::<Schema>().is_err());
        assert!("y:count,y:numeric".parse::<Schema>().is_err());
        assert!("y".parse::<Schema>().is_err());
        assert!("w:categorical[a|a]".parse::<Schema>().is_err());
        let multi: Schema = "y:count\nw:categorical\n# comment\nx:numeric\n".parse().unwrap();
        assert_eq!(multi.columns.len(), 3);
    }

    #[test]
    fn listwise_deletion_reports_drops() {
        let csv = "y,wealth,births\n1,poor,2\n,rich,1\n0,middle,3\n2,rich,NA\n3,poor,1\n0,rich,2\n";
        let ds = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(ds.n_rows(), 4);
        assert_eq!(ds.dropped_rows(), 2);
        assert_eq!(ds.counts("y").unwrap(), &[1, 0, 3, 0]);
    }

    #[test]
    fn fractional_count_is_a_row_error() {
        let csv = "y,wealth,births\n1,poor,2\n2.5,rich,1\n";
        match read_csv(csv.as_bytes(), &schema()) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
        let csv = "y,wealth,births\n-1,poor,2\n";
        assert!(matches!(read_csv(csv.as_bytes(), &schema()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn missing_declared_column_is_schema_error() {
        let csv = "y,births\n1,2\n";
        assert!(matches!(read_csv(csv.as_bytes(), &schema()), Err(Error::Schema(_))));
    }

    #[test]
    fn undeclared_level_is_rejected() {
        let csv = "y,wealth,births\n1,ultra,2\n";
        assert!(matches!(read_csv(csv.as_bytes(), &schema()), Err(Error::Parse { .. })));
    }

    #[test]
    fn vocabulary_keeps_levels_from_dropped_rows() {
        let s: Schema = "y:count,area:categorical".parse().unwrap();
        let csv = "y,area,extra\n1,urban,x\n,rural,y\n2,urban,z\n";
        let ds = read_csv(csv.as_bytes(), &s).unwrap();
        match ds.column("area").unwrap() {
            Column::Categorical { levels, codes } => {
                assert_eq!(levels, &["rural".to_string(), "urban".to_string()]);
                assert_eq!(codes, &[1, 1]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn csv_round_trip_preserves_names_and_levels() {
        let csv = "y,wealth,births\n1,poor,2\n0,middle,3.5\n3,rich,1\n";
        let ds = read_csv(csv.as_bytes(), &schema()).unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), &ds.schema()).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.column_names(), &["y", "wealth", "births"]);
    }

    fn wealth_ds() -> Dataset {
        let csv = "y,wealth,births\n1,poor,2\n0,middle,3\n3,rich,1\n2,rich,4\n";
        read_csv(csv.as_bytes(), &schema()).unwrap()
    }

    #[test]
    fn dummy_coding_omits_reference() {
        let ds = wealth_ds();
        let refs = BTreeMap::from([("wealth".to_string(), "poor".to_string())]);
        let x = build_design(&ds, &["wealth".into()], &refs).unwrap();
        assert_eq!(x.labels(), &["(Intercept)", "wealth=middle", "wealth=rich"]);
        assert_eq!(x.row(0), &[1.0, 0.0, 0.0]);
        assert_eq!(x.row(1), &[1.0, 1.0, 0.0]);
        assert_eq!(x.row(2), &[1.0, 0.0, 1.0]);

        let refs = BTreeMap::from([("wealth".to_string(), "rich".to_string())]);
        let x = build_design(&ds, &["wealth".into()], &refs).unwrap();
        assert_eq!(x.labels(), &["(Intercept)", "wealth=poor", "wealth=middle"]);
    }

    #[test]
    fn numeric_passes_through() {
        let ds = wealth_ds();
        let x = build_design(&ds, &["births".into()], &BTreeMap::new()).unwrap();
        assert_eq!(x.labels(), &["(Intercept)", "births"]);
        let col: Vec<f64> = (0..4).map(|i| x.get(i, 1)).collect();
        assert_eq!(col, vec![2.0, 3.0, 1.0, 4.0]);
    }

    #[test]
    fn no_covariates_gives_intercept_column() {
        let ds = wealth_ds();
        let x = build_design(&ds, &[], &BTreeMap::new()).unwrap();
        assert_eq!(x, DesignMatrix::intercept_only(4));
    }

    #[test]
    fn single_level_covariate_is_degenerate() {
        let s: Schema = "y:count,g:categorical[only]".parse().unwrap();
        let ds = read_csv("y,g\n1,only\n2,only\n".as_bytes(), &s).unwrap();
        assert!(matches!(
            build_design(&ds, &["g".into()], &BTreeMap::new()),
            Err(Error::DegenerateCovariate(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let ds = wealth_ds();
        assert!(ModelSpec::new(Family::Nb, "y").validate(&ds).is_ok());
        assert!(ModelSpec::new(Family::Nb, "births").validate(&ds).is_err());
        assert!(ModelSpec::new(Family::Nb, "y")
            .with_zero_covariates(&["wealth"])
            .validate(&ds)
            .is_err());
        assert!(ModelSpec::new(Family::Zinb, "y")
            .with_zero_covariates(&["wealth"])
            .validate(&ds)
            .is_ok());
        assert!(ModelSpec::new(Family::Nb, "y")
            .with_reference("wealth", "ultra")
            .validate(&ds)
            .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn dummy_rows_sum_to_indicator(codes in prop::collection::vec(0usize..4, 1..60), reference in 0usize..4) {
                let levels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
                let n = codes.len();
                let ds = Dataset::new(vec![
                    ("y".into(), Column::Count(vec![0; n])),
                    ("g".into(), Column::Categorical { levels: levels.clone(), codes: codes.clone() }),
                ]).unwrap();
                let refs = BTreeMap::from([("g".to_string(), levels[reference].clone())]);
                let x = build_design(&ds, &["g".into()], &refs).unwrap();
                prop_assert_eq!(x.n_cols(), 4);
                for (i, &c) in codes.iter().enumerate() {
                    let s: f64 = x.row(i)[1..].iter().sum();
                    prop_assert_eq!(s, if c == reference { 0.0 } else { 1.0 });
                }
                let again = build_design(&ds, &["g".into()], &refs).unwrap();
                prop_assert_eq!(again, x);
            }
        }
    }
}
