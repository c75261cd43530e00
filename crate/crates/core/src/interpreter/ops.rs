//! The reference semantics of each supported stereotype.

use std::cmp::Ordering;

use thiserror::Error;

use crate::datetime::{self, DatetimeError};

use super::ols::{least_squares, OlsError};
use super::rng::permutation;
use super::table::{Table, Value};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpError {
    #[error("column `{0}` does not exist")]
    MissingColumn(String),
    #[error("column `{0}` is not numeric")]
    NotNumeric(String),
    #[error("column `{0}` is constant; its z-score is undefined")]
    ConstantColumn(String),
    #[error("split ratio {0} is outside (0, 1)")]
    BadRatio(f64),
    #[error("column `{column}`: {source}")]
    Datetime {
        column: String,
        #[source]
        source: DatetimeError,
    },
    #[error("column `{0}` holds a non-text value where a date was expected")]
    NotText(String),
    #[error("{0} is empty")]
    Empty(&'static str),
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cosine distance of a zero vector is undefined")]
    ZeroVector,
    #[error(transparent)]
    Ols(#[from] OlsError),
    #[error("{0}")]
    Invalid(String),
}

fn col(t: &Table, name: &str) -> Result<usize, OpError> {
    t.column_index(name)
        .ok_or_else(|| OpError::MissingColumn(name.to_string()))
}

/// Re-formats one date column. With `utc` the result is seconds since the
/// epoch instead of text.
pub fn convert_dates(
    table: &Table,
    column: &str,
    input_format: &str,
    output_format: &str,
    utc: bool,
) -> Result<Table, OpError> {
    let idx = col(table, column)?;
    let mut out = table.clone();
    for row in &mut out.rows {
        let cell = &mut row[idx];
        let text = match cell {
            Value::Null => continue,
            Value::Str(s) => s.clone(),
            _ => return Err(OpError::NotText(column.to_string())),
        };
        let wrap = |source| OpError::Datetime {
            column: column.to_string(),
            source,
        };
        let parsed = datetime::parse(&text, input_format).map_err(wrap)?;
        *cell = if utc {
            Value::Int(datetime::epoch_seconds(&parsed))
        } else {
            Value::Str(datetime::format(&parsed, output_format).map_err(wrap)?)
        };
    }
    Ok(out)
}

/// Inner join on `left_key = right_key`. Null keys never match. A key with
/// the same name on both sides appears once; other shared names get `_x` /
/// `_y` suffixes. Rows are sorted by key, then by the full row, so the
/// result does not depend on input row order.
pub fn merge(left: &Table, right: &Table, left_key: &str, right_key: &str) -> Result<Table, OpError> {
    let li = col(left, left_key)?;
    let ri = col(right, right_key)?;
    let same_key = left_key == right_key;
    let right_keep: Vec<usize> = (0..right.columns.len())
        .filter(|&i| !(same_key && i == ri))
        .collect();
    let mut columns: Vec<String> = Vec::new();
    for (i, c) in left.columns.iter().enumerate() {
        let clash = !(same_key && i == li) && right_keep.iter().any(|&j| right.columns[j] == *c);
        columns.push(if clash { format!("{c}_x") } else { c.clone() });
    }
    for &j in &right_keep {
        let c = &right.columns[j];
        let clash = left
            .columns
            .iter()
            .enumerate()
            .any(|(i, l)| l == c && !(same_key && i == li));
        columns.push(if clash { format!("{c}_y") } else { c.clone() });
    }
    let mut out = Table::new(columns);
    for lrow in &left.rows {
        for rrow in &right.rows {
            if lrow[li].key_eq(&rrow[ri]) {
                let mut row = lrow.clone();
                row.extend(right_keep.iter().map(|&j| rrow[j].clone()));
                out.rows.push(row);
            }
        }
    }
    out.rows.sort_by(|a, b| {
        a[li].total_cmp(&b[li]).then_with(|| {
            a.iter()
                .zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMethod {
    MaxAbs,
    MinMax,
    ZScore,
}

impl NormMethod {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "MaxAbsScalar" => Some(Self::MaxAbs),
            "MinMax" => Some(Self::MinMax),
            "ZScore" => Some(Self::ZScore),
            _ => None,
        }
    }
}

/// Scales numeric columns (all of them when `columns` is empty). Nulls stay
/// null and are ignored by the statistics; z-scores use the population
/// standard deviation.
pub fn normalize(table: &Table, method: NormMethod, columns: &[String]) -> Result<Table, OpError> {
    let targets = if columns.is_empty() {
        table.numeric_columns()
    } else {
        columns.to_vec()
    };
    let mut out = table.clone();
    for name in &targets {
        let idx = col(table, name)?;
        let mut xs = Vec::new();
        for r in &table.rows {
            match &r[idx] {
                Value::Null => {}
                v => xs.push(v.as_f64().ok_or_else(|| OpError::NotNumeric(name.clone()))?),
            }
        }
        if xs.is_empty() {
            continue;
        }
        let n = xs.len() as f64;
        let f: Box<dyn Fn(f64) -> f64> = match method {
            NormMethod::MaxAbs => {
                let m = xs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
                if m == 0.0 {
                    Box::new(|_| 0.0)
                } else {
                    Box::new(move |x| x / m)
                }
            }
            NormMethod::MinMax => {
                let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if hi == lo {
                    Box::new(|_| 0.0)
                } else {
                    Box::new(move |x| (x - lo) / (hi - lo))
                }
            }
            NormMethod::ZScore => {
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                if var == 0.0 {
                    return Err(OpError::ConstantColumn(name.clone()));
                }
                let sd = var.sqrt();
                Box::new(move |x| (x - mean) / sd)
            }
        };
        for r in &mut out.rows {
            if let Some(x) = r[idx].as_f64() {
                r[idx] = Value::Float(f(x));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FillMethod {
    Mean,
    Median,
    Zero,
    Drop,
}

impl FillMethod {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "Mean" => Some(Self::Mean),
            "Median" => Some(Self::Median),
            "Zero" => Some(Self::Zero),
            "Drop" => Some(Self::Drop),
            _ => None,
        }
    }
}

pub fn fill_missing(table: &Table, column: &str, method: FillMethod) -> Result<Table, OpError> {
    let idx = col(table, column)?;
    let mut out = table.clone();
    if method == FillMethod::Drop {
        out.rows.retain(|r| !r[idx].is_null());
        return Ok(out);
    }
    let mut xs: Vec<f64> = Vec::new();
    for r in &table.rows {
        match &r[idx] {
            Value::Null => {}
            v => xs.push(v.as_f64().ok_or_else(|| OpError::NotNumeric(column.to_string()))?),
        }
    }
    let fill = match method {
        FillMethod::Zero => {
            if table.rows.iter().any(|r| matches!(r[idx], Value::Float(_))) {
                Value::Float(0.0)
            } else {
                Value::Int(0)
            }
        }
        _ if xs.is_empty() => return Err(OpError::Empty("column")),
        FillMethod::Mean => Value::Float(xs.iter().sum::<f64>() / xs.len() as f64),
        _ => {
            xs.sort_by(f64::total_cmp);
            let n = xs.len();
            Value::Float(if n % 2 == 1 {
                xs[n / 2]
            } else {
                (xs[n / 2 - 1] + xs[n / 2]) / 2.0
            })
        }
    };
    for r in &mut out.rows {
        if r[idx].is_null() {
            r[idx] = fill.clone();
        }
    }
    Ok(out)
}

/// Shuffles rows with the seeded LCG; the first `floor(ratio·n)` shuffled
/// rows train, the rest test.
pub fn train_test_split(table: &Table, ratio: f64, seed: u64) -> Result<(Table, Table), OpError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(OpError::BadRatio(ratio));
    }
    let order = permutation(table.len(), seed);
    let n_train = (ratio * table.len() as f64).floor() as usize;
    Ok((
        table.select_rows(&order[..n_train]),
        table.select_rows(&order[n_train..]),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub target: String,
    pub features: Vec<String>,
    /// Intercept first, then one coefficient per feature.
    pub coefficients: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, xs: &[f64]) -> f64 {
        self.coefficients[0]
            + self.coefficients[1..]
                .iter()
                .zip(xs)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Complete numeric rows over `features` and `target`.
pub fn design(table: &Table, features: &[String], target: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>), OpError> {
    let fidx: Vec<usize> = features.iter().map(|f| col(table, f)).collect::<Result<_, _>>()?;
    let tidx = col(table, target)?;
    let mut x = Vec::new();
    let mut y = Vec::new();
    'rows: for r in &table.rows {
        let mut row = Vec::with_capacity(fidx.len());
        for (&i, name) in fidx.iter().zip(features) {
            match &r[i] {
                Value::Null => continue 'rows,
                v => row.push(v.as_f64().ok_or_else(|| OpError::NotNumeric(name.clone()))?),
            }
        }
        match &r[tidx] {
            Value::Null => continue,
            v => y.push(v.as_f64().ok_or_else(|| OpError::NotNumeric(target.to_string()))?),
        }
        x.push(row);
    }
    Ok((x, y))
}

/// OLS with intercept. Features default to every numeric column except the
/// target.
pub fn fit_linear(table: &Table, target: &str, features: &[String]) -> Result<LinearModel, OpError> {
    let features: Vec<String> = if features.is_empty() {
        table
            .numeric_columns()
            .into_iter()
            .filter(|c| c != target)
            .collect()
    } else {
        features.to_vec()
    };
    let (x, y) = design(table, &features, target)?;
    let with_intercept: Vec<Vec<f64>> = x
        .into_iter()
        .map(|r| std::iter::once(1.0).chain(r).collect())
        .collect();
    let coefficients = least_squares(&with_intercept, &y)?;
    Ok(LinearModel {
        target: target.to_string(),
        features,
        coefficients,
    })
}

pub fn predict(model: &LinearModel, table: &Table) -> Result<(Vec<f64>, Vec<f64>), OpError> {
    let (x, y) = design(table, &model.features, &model.target)?;
    let pred = x.iter().map(|r| model.predict_row(r)).collect();
    Ok((y, pred))
}

fn check_pair(y: &[f64], p: &[f64]) -> Result<(), OpError> {
    if y.len() != p.len() {
        return Err(OpError::LengthMismatch(y.len(), p.len()));
    }
    if y.is_empty() {
        return Err(OpError::Empty("prediction set"));
    }
    Ok(())
}

pub fn mae(y: &[f64], p: &[f64]) -> Result<f64, OpError> {
    check_pair(y, p)?;
    Ok(y.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / y.len() as f64)
}

pub fn mse(y: &[f64], p: &[f64]) -> Result<f64, OpError> {
    check_pair(y, p)?;
    Ok(y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64)
}

/// Coefficient of determination. A constant target gives 1 for a perfect
/// fit and 0 otherwise instead of dividing by zero.
pub fn r2(y: &[f64], p: &[f64]) -> Result<f64, OpError> {
    check_pair(y, p)?;
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = y.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    Ok(match (ss_tot == 0.0, ss_res == 0.0) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => 1.0 - ss_res / ss_tot,
    })
}

pub fn cosine_distance(a: &[f64], b: &[f64]) -> Result<f64, OpError> {
    if a.len() != b.len() {
        return Err(OpError::LengthMismatch(a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(OpError::ZeroVector);
    }
    Ok(1.0 - dot / (na * nb))
}
