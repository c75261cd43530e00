//! Reference interpreter for pipeline plans over small tabular data.
//!
//! Steps run in plan order. Stereotypes without a reference implementation
//! (images, SQL, forests, ...) are skipped together with everything that
//! depends on them; the result lists what was skipped and why.

pub mod load;
pub mod ols;
pub mod ops;
pub mod rng;
pub mod table;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use indexmap::IndexMap;
use thiserror::Error;

use crate::codegen::metric_key;
use crate::literal::Literal;
use crate::profile::StereotypeRegistry;
use crate::scheduler::{PipelinePlan, PlanStep};

use ops::{FillMethod, LinearModel, NormMethod, OpError};
pub use table::{Table, Value};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub data_dir: PathBuf,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            data_dir: PathBuf::from("."),
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutput {
    Table(Table),
    Split { train: Table, test: Table },
    Model(LinearModel),
    Predictions { y_true: Vec<f64>, y_pred: Vec<f64> },
    Metric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Skipped {
    pub block: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct RunResult {
    pub outputs: IndexMap<String, StepOutput>,
    /// Metric values keyed like the generated code records them.
    pub metrics: BTreeMap<String, f64>,
    /// The `text` of each metric step, keyed like `metrics`.
    pub labels: BTreeMap<String, String>,
    pub skipped: Vec<Skipped>,
}

impl RunResult {
    /// A step's table; for a split this is the training part.
    pub fn table(&self, block: &str) -> Option<&Table> {
        match self.outputs.get(block)? {
            StepOutput::Table(t) => Some(t),
            StepOutput::Split { train, .. } => Some(train),
            _ => None,
        }
    }

    pub fn model(&self, block: &str) -> Option<&LinearModel> {
        match self.outputs.get(block)? {
            StepOutput::Model(m) => Some(m),
            _ => None,
        }
    }

    /// `{ "<key>": value, ... }` with sorted keys, the same shape the
    /// generated code writes.
    pub fn metrics_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(&self.metrics).expect("metrics serialize");
        out.push('\n');
        out
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("block `{block}`: cannot read {}: {source}", path.display())]
    Io {
        block: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("block `{block}`: {message}")]
    Data { block: String, message: String },
    #[error("block `{block}`: {source}")]
    Op {
        block: String,
        #[source]
        source: OpError,
    },
}

/// Stereotypes with a reference implementation. Others run through their
/// nearest listed ancestor, if any.
pub const SUPPORTED: &[&str] = &[
    "CSV",
    "TextFile",
    "DateConversion",
    "DataFrame_Merge",
    "Normalization",
    "MissingValues",
    "TrainTestSplit",
    "LinearRegression",
    "Predict",
    "MAE",
    "MSE",
    "R2",
    "CosineDistance",
];

pub fn implementation(registry: &StereotypeRegistry, function: &str) -> Option<&'static str> {
    let chain = registry.ancestors(function).ok()?;
    chain
        .iter()
        .find_map(|s| SUPPORTED.iter().find(|n| **n == s.name).copied())
}

pub fn run(
    plan: &PipelinePlan,
    registry: &StereotypeRegistry,
    options: &RunOptions,
) -> Result<RunResult, RunError> {
    let mut result = RunResult::default();
    for step in &plan.steps {
        let skipped_input = step
            .inputs
            .iter()
            .find(|i| result.skipped.iter().any(|s| &s.block == *i));
        let reason = if step.blackbox {
            Some(format!("`{}` is a black box", step.function))
        } else if let Some(input) = skipped_input {
            Some(format!("input `{input}` was skipped"))
        } else if implementation(registry, &step.function).is_none() {
            Some(format!("no reference implementation for `{}`", step.function))
        } else {
            None
        };
        if let Some(reason) = reason {
            result.skipped.push(Skipped {
                block: step.block.clone(),
                reason,
            });
            continue;
        }
        let kind = implementation(registry, &step.function).expect("checked above");
        let inputs: Vec<&StepOutput> = step.inputs.iter().map(|i| &result.outputs[i]).collect();
        let output = execute(kind, step, &inputs, options)?;
        if let StepOutput::Metric(v) = output {
            let key = metric_key(plan, step);
            if let Some(Literal::Str(text)) = step.params.get("text") {
                result.labels.insert(key.clone(), text.clone());
            }
            result.metrics.insert(key, v);
        }
        result.outputs.insert(step.block.clone(), output);
    }
    Ok(result)
}

struct Ctx<'a> {
    step: &'a PlanStep,
}

impl Ctx<'_> {
    fn data(&self, message: impl Into<String>) -> RunError {
        RunError::Data {
            block: self.step.block.clone(),
            message: message.into(),
        }
    }

    fn lift<T>(&self, r: Result<T, OpError>) -> Result<T, RunError> {
        r.map_err(|source| RunError::Op {
            block: self.step.block.clone(),
            source,
        })
    }

    fn str_param(&self, key: &str) -> Result<&str, RunError> {
        self.step
            .params
            .get(key)
            .and_then(Literal::as_str)
            .ok_or_else(|| self.data(format!("parameter `{key}` must be a string")))
    }

    fn list_param(&self, key: &str) -> Result<Vec<String>, RunError> {
        match self.step.params.get(key) {
            None => Ok(Vec::new()),
            Some(lit) => lit
                .string_items()
                .map(|v| v.into_iter().map(String::from).collect())
                .ok_or_else(|| self.data(format!("parameter `{key}` must be a list of strings"))),
        }
    }

    fn table<'o>(&self, input: Option<&&'o StepOutput>) -> Result<&'o Table, RunError> {
        match input {
            Some(StepOutput::Table(t)) => Ok(t),
            Some(StepOutput::Split { train, .. }) => Ok(train),
            _ => Err(self.data("expected a table input")),
        }
    }
}

fn execute(
    kind: &str,
    step: &PlanStep,
    inputs: &[&StepOutput],
    options: &RunOptions,
) -> Result<StepOutput, RunError> {
    let cx = Ctx { step };
    Ok(match kind {
        "CSV" | "TextFile" => {
            let path = load::resolve_path(&options.data_dir, cx.str_param("file")?);
            let bytes = fs::read(&path).map_err(|source| RunError::Io {
                block: step.block.clone(),
                path: path.clone(),
                source,
            })?;
            let text = load::decode(&bytes, cx.str_param("Encoding")?).map_err(|m| cx.data(m))?;
            match step.params.get("Delimiter").and_then(Literal::as_str) {
                Some(delim) => StepOutput::Table(
                    load::parse_csv(&text, delim, &step.columns).map_err(|m| cx.data(m))?,
                ),
                None => {
                    let mut t = Table::new(vec!["text".into()]);
                    t.rows = text.lines().map(|l| vec![Value::Str(l.into())]).collect();
                    StepOutput::Table(t)
                }
            }
        }
        "DateConversion" => {
            let table = cx.table(inputs.first())?;
            let column = cx.str_param("input_attribute")?;
            let input_format = cx.str_param("input_format")?;
            let utc = step
                .params
                .get("utc")
                .and_then(Literal::as_bool)
                .unwrap_or(false);
            StepOutput::Table(cx.lift(ops::convert_dates(
                table,
                column,
                input_format,
                cx.str_param("format")?,
                utc,
            ))?)
        }
        "DataFrame_Merge" => {
            let keys = cx.list_param("MergeOn")?;
            let (l, r) = match keys.as_slice() {
                [k] => (k.as_str(), k.as_str()),
                [l, r] => (l.as_str(), r.as_str()),
                _ => return Err(cx.data("MergeOn needs one key or a [left, right] pair")),
            };
            if inputs.len() != 2 {
                return Err(cx.data("a merge needs exactly two inputs"));
            }
            let left = cx.table(inputs.first())?;
            let right = cx.table(inputs.get(1))?;
            StepOutput::Table(cx.lift(ops::merge(left, right, l, r))?)
        }
        "Normalization" => {
            let method = NormMethod::from_name(cx.str_param("method")?)
                .ok_or_else(|| cx.data("unknown normalization method"))?;
            let columns = cx.list_param("columns")?;
            StepOutput::Table(cx.lift(ops::normalize(cx.table(inputs.first())?, method, &columns))?)
        }
        "MissingValues" => {
            let column = cx.str_param("column")?;
            let column = column.rsplit('.').next().unwrap_or(column);
            let method = FillMethod::from_name(cx.str_param("MissingValueFunction")?)
                .ok_or_else(|| cx.data("unknown missing-value function"))?;
            StepOutput::Table(cx.lift(ops::fill_missing(cx.table(inputs.first())?, column, method))?)
        }
        "TrainTestSplit" => {
            let ratio = step
                .params
                .get("ratio")
                .and_then(Literal::as_f64)
                .unwrap_or(0.75);
            let (train, test) = cx.lift(ops::train_test_split(
                cx.table(inputs.first())?,
                ratio,
                options.seed,
            ))?;
            StepOutput::Split { train, test }
        }
        "LinearRegression" => {
            let table = cx.table(inputs.first())?;
            let features = cx.list_param("features")?;
            StepOutput::Model(cx.lift(ops::fit_linear(table, cx.str_param("target")?, &features))?)
        }
        "Predict" => {
            let model = inputs
                .iter()
                .find_map(|o| match o {
                    StepOutput::Model(m) => Some(m),
                    _ => None,
                })
                .ok_or_else(|| cx.data("no model among the inputs"))?;
            let data = inputs
                .iter()
                .find_map(|o| match o {
                    StepOutput::Split { test, .. } => Some(test),
                    StepOutput::Table(t) => Some(t),
                    _ => None,
                })
                .ok_or_else(|| cx.data("no data among the inputs"))?;
            let (y_true, y_pred) = cx.lift(ops::predict(model, data))?;
            StepOutput::Predictions { y_true, y_pred }
        }
        "MAE" | "MSE" | "R2" => {
            let Some(StepOutput::Predictions { y_true, y_pred }) = inputs.first() else {
                return Err(cx.data("metrics need a prediction input"));
            };
            let f = match kind {
                "MAE" => ops::mae,
                "MSE" => ops::mse,
                _ => ops::r2,
            };
            StepOutput::Metric(cx.lift(f(y_true, y_pred))?)
        }
        "CosineDistance" => {
            let (a, b) = match inputs {
                [StepOutput::Predictions { y_true, y_pred }] => (y_true.clone(), y_pred.clone()),
                [x, y] => (vector(x), vector(y)),
                _ => return Err(cx.data("cosine distance needs one prediction or two vector inputs")),
            };
            StepOutput::Metric(cx.lift(ops::cosine_distance(&a, &b))?)
        }
        other => return Err(cx.data(format!("`{other}` has no reference implementation"))),
    })
}

fn vector(output: &StepOutput) -> Vec<f64> {
    match output {
        StepOutput::Table(t) | StepOutput::Split { train: t, .. } => t
            .rows
            .iter()
            .flat_map(|r| r.iter().filter_map(Value::as_f64))
            .collect(),
        StepOutput::Predictions { y_pred, .. } => y_pred.clone(),
        StepOutput::Metric(v) => vec![*v],
        StepOutput::Model(m) => m.coefficients.clone(),
    }
}
