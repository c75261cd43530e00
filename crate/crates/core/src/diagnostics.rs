//! Diagnostics with stable codes.
//!
//! `P-1xx` are syntax and reference errors raised while parsing, `E-2xx`
//! semantic errors, `W-3xx` warnings and `I-3xx` informational notes.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::ast::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
    Info,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Info => "info",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diagnostic {
    pub code: &'static str,
    pub severity: Severity,
    pub message: String,
    pub span: SourceSpan,
    pub related: Vec<SourceSpan>,
}

impl Diagnostic {
    /// Builds a diagnostic for a catalog code, taking the severity from the
    /// catalog.
    pub fn new(code: &'static str, message: impl Into<String>, span: SourceSpan) -> Self {
        let severity = lookup(code)
            .unwrap_or_else(|| panic!("diagnostic code {code} is not in the catalog"))
            .severity;
        Self {
            code,
            severity,
            message: message.into(),
            span,
            related: Vec::new(),
        }
    }

    pub fn with_severity(mut self, severity: Severity) -> Self {
        self.severity = severity;
        self
    }

    pub fn with_related(mut self, span: SourceSpan) -> Self {
        self.related.push(span);
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// One line-delimited JSON record.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            code: &'a str,
            severity: Severity,
            file: &'a str,
            line: usize,
            column: usize,
            message: &'a str,
        }
        serde_json::to_string(&Record {
            code: self.code,
            severity: self.severity,
            file: &self.span.file,
            line: self.span.line,
            column: self.span.column,
            message: &self.message,
        })
        .expect("diagnostic record serializes")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {}[{}]: {}",
            self.span, self.severity, self.code, self.message
        )?;
        for r in &self.related {
            write!(f, "\n  note: see {r}")?;
        }
        Ok(())
    }
}

/// Sorts by file, line, code, then column and message, and removes exact
/// duplicates.
pub fn sort_diagnostics(diags: &mut Vec<Diagnostic>) {
    diags.sort_by(|a, b| {
        (&a.span.file, a.span.line, a.code, a.span.column, &a.message).cmp(&(
            &b.span.file,
            b.span.line,
            b.code,
            b.span.column,
            &b.message,
        ))
    });
    diags.dedup();
}

pub struct CatalogEntry {
    pub code: &'static str,
    pub severity: Severity,
    pub title: &'static str,
    pub explanation: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        code: "P-101",
        severity: Severity::Error,
        title: "syntax error",
        explanation: "The model text does not follow the grammar in docs/grammar.md. The parser \
                      skips to the next `;` or `}` and keeps going, so one file can report \
                      several syntax errors.",
    },
    CatalogEntry {
        code: "P-102",
        severity: Severity::Error,
        title: "unknown stereotype",
        explanation: "A block, attribute or state applies a stereotype that the loaded profile \
                      does not define. Check the spelling or extend the profile.",
    },
    CatalogEntry {
        code: "P-103",
        severity: Severity::Error,
        title: "stereotype applied to the wrong element",
        explanation: "Each stereotype applies to exactly one kind of element: blocks, block \
                      attributes, or workflow states. Attribute stereotypes such as Datetime \
                      cannot be applied to a block, and block stereotypes cannot be used as `@` \
                      annotations.",
    },
    CatalogEntry {
        code: "P-104",
        severity: Severity::Error,
        title: "duplicate name",
        explanation: "Block names are unique per model; attribute names and bindings are \
                      unique per block; state names are unique per workflow. Names are \
                      case-sensitive.",
    },
    CatalogEntry {
        code: "P-105",
        severity: Severity::Error,
        title: "more than one functional stereotype",
        explanation: "A block's functional identity is its single stereotype descending from \
                      ML. Applying two such stereotypes leaves the function ambiguous; split the \
                      block instead.",
    },
    CatalogEntry {
        code: "P-106",
        severity: Severity::Error,
        title: "unresolved block reference",
        explanation: "An `input`, `extends`, `realizes` or workflow state names a block that \
                      does not exist in the model.",
    },
    CatalogEntry {
        code: "P-107",
        severity: Severity::Error,
        title: "block uses itself as input",
        explanation: "A block cannot consume its own output.",
    },
    CatalogEntry {
        code: "P-108",
        severity: Severity::Error,
        title: "unknown workflow state",
        explanation: "A transition, `initial` or `final` declaration names a state that the \
                      workflow does not declare.",
    },
    CatalogEntry {
        code: "P-109",
        severity: Severity::Error,
        title: "lexical error",
        explanation: "The text contains a character or literal that cannot be tokenized, such \
                      as an unterminated string or an unknown escape sequence.",
    },
    CatalogEntry {
        code: "P-110",
        severity: Severity::Error,
        title: "invalid multiplicity",
        explanation: "Multiplicities are written `[n]`, `[*]` or `[lo..hi]` with integer or `*` \
                      bounds and lo <= hi.",
    },
    CatalogEntry {
        code: "P-111",
        severity: Severity::Error,
        title: "workflow outside the Workflow stage",
        explanation: "State machines fix the execution order and belong in the Workflow stage.",
    },
    CatalogEntry {
        code: "P-112",
        severity: Severity::Error,
        title: "block inheritance cycle",
        explanation: "Following `extends` links from this block leads back to it.",
    },
    CatalogEntry {
        code: "P-113",
        severity: Severity::Error,
        title: "unknown data type",
        explanation: "Block attributes are typed String, Integer, Float, Boolean, Datetime or \
                      Image.",
    },
    CatalogEntry {
        code: "E-201",
        severity: Severity::Error,
        title: "abstract stereotype instantiated",
        explanation: "Abstract stereotypes such as DataTransformation only group their \
                      descendants and need further detail before they can be used. Apply a \
                      concrete descendant instead.",
    },
    CatalogEntry {
        code: "E-202",
        severity: Severity::Error,
        title: "mandatory attribute unbound",
        explanation: "Attributes declared on a stereotype are the mandatory inputs of the \
                      function it stands for. Every block (or attribute) applying the \
                      stereotype must bind them unless the profile supplies a default, e.g. \
                      DataFrame_Merge requires MergeOn.",
    },
    CatalogEntry {
        code: "E-203",
        severity: Severity::Error,
        title: "value outside enumeration",
        explanation: "The attribute is typed by an enumeration and the bound value is not one \
                      of its literals.",
    },
    CatalogEntry {
        code: "E-204",
        severity: Severity::Error,
        title: "reference to element without required stereotype",
        explanation: "A stereotype-typed attribute only accepts elements carrying that \
                      stereotype or a descendant. For attribute stereotypes the value names an \
                      attribute of an input block (`name` or `Block.name`); for block \
                      stereotypes it names a block.",
    },
    CatalogEntry {
        code: "E-205",
        severity: Severity::Error,
        title: "ambiguous input attribute",
        explanation: "The block's function consumes one attribute of a given attribute \
                      stereotype, but its inputs expose zero or several candidates. Add an \
                      explicit selector such as `input_attribute = \"<name>\"`.",
    },
    CatalogEntry {
        code: "E-206",
        severity: Severity::Error,
        title: "dataflow cycle",
        explanation: "Input associations form a cycle, so no block in it can be computed \
                      first.",
    },
    CatalogEntry {
        code: "E-207",
        severity: Severity::Error,
        title: "workflow state targets a non-functional block",
        explanation: "Each workflow state references a block whose stereotype descends from ML; \
                      business-level blocks without such a stereotype cannot be executed.",
    },
    CatalogEntry {
        code: "E-208",
        severity: Severity::Error,
        title: "workflow order contradicts dataflow",
        explanation: "Along some path of the workflow a block is scheduled before one of its \
                      producers, or consumes a processing block that is never scheduled. Data \
                      sources are scheduled automatically and are exempt.",
    },
    CatalogEntry {
        code: "E-209",
        severity: Severity::Error,
        title: "malformed workflow",
        explanation: "The workflow has no initial state, or some of its states cannot be \
                      reached from the initial state.",
    },
    CatalogEntry {
        code: "E-210",
        severity: Severity::Error,
        title: "inherited attribute changes kind",
        explanation: "A block extending another may override inherited values and attributes, \
                      but only with a value of the same kind (text, number, boolean, list) or an \
                      attribute of the same type and stereotype.",
    },
    CatalogEntry {
        code: "E-211",
        severity: Severity::Error,
        title: "CustomCode not allowed",
        explanation: "CustomCode injects verbatim program text into the pipeline, which \
                      undermines documentation, reproducibility and safety. Model the step with \
                      a dedicated stereotype, or relax the policy with --allow-custom-code.",
    },
    CatalogEntry {
        code: "E-212",
        severity: Severity::Error,
        title: "value does not match attribute kind",
        explanation: "The bound literal has the wrong shape for the attribute: e.g. a number \
                      for a string attribute, a scalar for a list, or a datetime format using \
                      tokens other than %Y %m %d %H %M %S.",
    },
    CatalogEntry {
        code: "W-301",
        severity: Severity::Warning,
        title: "dead block",
        explanation: "The block carries an ML stereotype but is neither the target of a \
                      workflow state nor a transitive input of one. It is left out of the \
                      workflow and will not be part of the implementation; typically an \
                      artifact of earlier modeling.",
    },
    CatalogEntry {
        code: "W-302",
        severity: Severity::Warning,
        title: "CustomCode used",
        explanation: "CustomCode is permitted by the current policy but bypasses the modeling \
                      method; consider a dedicated stereotype.",
    },
    CatalogEntry {
        code: "W-303",
        severity: Severity::Warning,
        title: "unknown optional value",
        explanation: "The block sets a value that matches no attribute of its stereotype, so no \
                      code template can use it. It is kept for documentation only.",
    },
    CatalogEntry {
        code: "I-301",
        severity: Severity::Info,
        title: "shared association",
        explanation: "Shared associations have a weaker lifecycle than part associations; for \
                      dataflow both are treated as a single input dataset.",
    },
];

pub fn lookup(code: &str) -> Option<&'static CatalogEntry> {
    CATALOG.iter().find(|e| e.code == code)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown diagnostic code `{0}`")]
pub struct UnknownCode(pub String);

/// Rule description for a catalog code.
pub fn explain(code: &str) -> Result<String, UnknownCode> {
    let entry = lookup(code).ok_or_else(|| UnknownCode(code.to_string()))?;
    Ok(format!(
        "{} ({}): {}\n\n{}",
        entry.code, entry.severity, entry.title, entry.explanation
    ))
}
