//! Parsing, validation, scheduling, code generation and reference execution
//! for MLSysML models.

pub mod ast;
pub mod codegen;
pub mod dataflow;
pub mod datetime;
pub mod diagnostics;
pub mod graph;
pub mod interpreter;
pub mod lexer;
pub mod literal;
pub mod parser;
pub mod profile;
pub mod scheduler;
pub(crate) mod syntax;
pub mod validator;

use ast::Model;
use diagnostics::{sort_diagnostics, Diagnostic};
use profile::StereotypeRegistry;
use validator::ValidationConfig;

/// Outcome of [`check_source`]: the model, if it parsed, and every parse and
/// validation diagnostic in canonical order.
#[derive(Debug, Clone)]
pub struct Checked {
    pub model: Option<Model>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses `source` and, when that succeeds, validates the model.
pub fn check_source(
    source: &str,
    file: &str,
    registry: &StereotypeRegistry,
    config: &ValidationConfig,
) -> Checked {
    let parsed = parser::parse_model_named(source, file, registry);
    let mut diagnostics = parsed.diagnostics;
    if let Some(model) = &parsed.model {
        diagnostics.extend(validator::validate(model, registry, config));
    }
    sort_diagnostics(&mut diagnostics);
    Checked {
        model: parsed.model,
        diagnostics,
    }
}
