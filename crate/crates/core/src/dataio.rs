//! Loading labeled benchmark tables from CSV.

use std::fmt;
use std::fs::File;
use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use crate::dataset::{Dataset, Matrix, Vector};
use crate::error::{Error, Result};

/// Cells treated as missing.
pub const MISSING_TOKENS: [&str; 4] = ["", "?", "NA", "NaN"];

/// A column given by zero-based position or by header name.
#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl FromStr for ColumnRef {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => ColumnRef::Index(i),
            Err(_) => ColumnRef::Name(s.to_string()),
        })
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "#{i}"),
            ColumnRef::Name(n) => write!(f, "{n:?}"),
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_delimiter() -> char {
    ','
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSchema {
    pub target_column: ColumnRef,
    #[serde(default)]
    pub categorical_columns: Vec<ColumnRef>,
    #[serde(default = "default_true")]
    pub has_header: bool,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

impl CsvSchema {
    pub fn new(target_column: ColumnRef) -> Self {
        CsvSchema {
            target_column,
            categorical_columns: Vec::new(),
            has_header: true,
            delimiter: ',',
        }
    }

    /// Parses a TOML schema such as
    ///
    /// ```toml
    /// target_column = "rings"
    /// categorical_columns = ["sex"]
    /// ```
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(Error::Schema(format!("delimiter {:?} is not a single-byte character", self.delimiter)))
        }
    }
}

fn resolve(col: &ColumnRef, names: &[String]) -> Result<usize> {
    match col {
        ColumnRef::Index(i) if *i < names.len() => Some(*i),
        ColumnRef::Name(n) => names.iter().position(|h| h == n),
        _ => None,
    }
    .ok_or_else(|| Error::Schema(format!("column {col} not found; available: {}", names.join(", "))))
}

fn is_missing(cell: &str) -> bool {
    MISSING_TOKENS.contains(&cell)
}

fn parse_number(cell: &str) -> Option<f64> {
    if is_missing(cell) {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads a labeled table. Numeric cells become features, categorical
/// columns are one-hot encoded in place (categories in order of first
/// appearance, features named `column=value`), and rows with a missing,
/// unparseable or absent cell are dropped. Returns the dataset and the
/// number of dropped rows.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<(Dataset, usize)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter_byte()?)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let records = reader
        .records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(csv_err)?;
    let names: Vec<String> = if schema.has_header {
        reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect()
    } else {
        let width = records.first().map_or(0, |r| r.len());
        (0..width).map(|i| format!("col{i}")).collect()
    };
    let width = names.len();
    let target = resolve(&schema.target_column, &names)?;
    let mut categorical = vec![false; width];
    for c in &schema.categorical_columns {
        let i = resolve(c, &names)?;
        if i == target {
            return Err(Error::Schema(format!("column {c} is both the target and categorical")));
        }
        categorical[i] = true;
    }
    if width < 2 {
        return Err(Error::Schema("need at least one feature column besides the target".into()));
    }

    let kept: Vec<&csv::StringRecord> = records
        .iter()
        .filter(|r| {
            r.len() == width
                && r.iter().enumerate().all(|(i, cell)| {
                    if categorical[i] {
                        !is_missing(cell)
                    } else {
                        parse_number(cell).is_some()
                    }
                })
        })
        .collect();
    let dropped = records.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptyData(path.display().to_string()));
    }

    let mut levels: Vec<Vec<String>> = vec![Vec::new(); width];
    for r in &kept {
        for (i, cell) in r.iter().enumerate() {
            if categorical[i] && !levels[i].iter().any(|l| l == cell) {
                levels[i].push(cell.to_string());
            }
        }
    }
    let mut feature_names = Vec::new();
    for i in (0..width).filter(|&i| i != target) {
        if categorical[i] {
            feature_names.extend(levels[i].iter().map(|l| format!("{}={l}", names[i])));
        } else {
            feature_names.push(names[i].clone());
        }
    }
    let d = feature_names.len();
    let mut values = Vec::with_capacity(kept.len() * d);
    let mut targets = Vec::with_capacity(kept.len());
    for r in &kept {
        for (i, cell) in r.iter().enumerate() {
            if i == target {
                targets.push(parse_number(cell).expect("validated"));
            } else if categorical[i] {
                values.extend(levels[i].iter().map(|l| f64::from(u8::from(l == cell))));
            } else {
                values.push(parse_number(cell).expect("validated"));
            }
        }
    }
    let data = Dataset::new(Matrix::from_row_slice(kept.len(), d, &values), Some(Vector::from_vec(targets)))?
        .with_feature_names(feature_names)?;
    Ok((data, dropped))
}

/// Per-column affine map to zero mean and unit standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    /// Population standard deviations (divisor `n`).
    pub stds: Vec<f64>,
    /// Columns whose spread is below `1e-12`; these are only centered.
    pub degenerate: Vec<bool>,
}

const DEGENERATE_STD: f64 = 1e-12;

impl Standardization {
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.means.len() {
            return Err(Error::shape(format!(
                "matrix has {} columns, transform has {}",
                x.ncols(),
                self.means.len()
            )));
        }
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            let c = x[(i, j)] - self.means[j];
            if self.degenerate[j] {
                c
            } else {
                c / self.stds[j]
            }
        }))
    }
}

/// Standardizes the feature columns; targets and names are kept.
pub fn standardize(data: &Dataset) -> Result<(Dataset, Standardization)> {
    let x = data.features();
    let n = x.nrows() as f64;
    let means: Vec<f64> = x.column_iter().map(|c| c.sum() / n).collect();
    let stds: Vec<f64> = x
        .column_iter()
        .zip(&means)
        .map(|(c, m)| (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
        .collect();
    let degenerate = stds.iter().map(|&s| s < DEGENERATE_STD).collect();
    let record = Standardization {
        means,
        stds,
        degenerate,
    };
    let mut out = Dataset::new(record.apply(x)?, data.targets().cloned())?;
    if let Some(names) = data.feature_names() {
        out = out.with_feature_names(names.to_vec())?;
    }
    Ok((out, record))
}
