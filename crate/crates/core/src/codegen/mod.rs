//! Template-driven code generation from a pipeline plan.
//!
//! Each plan step becomes one cell: a provenance comment followed by the
//! step's stereotype template (or the nearest ancestor's) with parameters
//! substituted as Python literals. A preamble cell comes first.

pub mod escape;
pub mod notebook;
pub mod template;

use thiserror::Error;

use crate::literal::Literal;
use crate::profile::{StereotypeRegistry, CUSTOM_CODE};
use crate::scheduler::{PipelinePlan, PlanStep};

use escape::{py_comment, py_ident, py_literal, py_str, EscapingError};
pub use template::{builtin_templates_dir, RenderError, Template, TemplateError, TemplateSet};

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error("no `{target}` template for `{stereotype}` (block `{block}`) or any of its ancestors")]
    NoTemplate {
        target: String,
        block: String,
        stereotype: String,
    },
    #[error("target `{0}` has no preamble template")]
    NoPreamble(String),
    #[error("block `{block}`: template `{template}` requires parameter `{param}`")]
    MissingParam {
        block: String,
        template: String,
        param: String,
    },
    #[error("block `{0}` uses CustomCode, which the current policy does not allow")]
    CustomCodeNotAllowed(String),
    #[error("block `{block}`: {source}")]
    Escaping {
        block: String,
        #[source]
        source: EscapingError,
    },
    #[error(transparent)]
    Render(#[from] RenderError),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CodegenOptions {
    pub allow_custom_code: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub target: String,
    pub file_name: String,
    /// Preamble first, then one cell per plan step.
    pub cells: Vec<String>,
    pub content: String,
}

/// Python variable holding a step's result.
pub fn result_name(step: &PlanStep) -> String {
    format!("r{}_{}", step.index, py_ident(&step.block))
}

/// Key under which a metric step records its value: the stereotype name,
/// qualified with the block when several steps share the stereotype.
pub fn metric_key(plan: &PipelinePlan, step: &PlanStep) -> String {
    let shared = plan
        .steps
        .iter()
        .filter(|s| s.function == step.function)
        .count()
        > 1;
    if shared {
        format!("{}:{}", step.function, step.block)
    } else {
        step.function.clone()
    }
}

pub fn generate(
    plan: &PipelinePlan,
    registry: &StereotypeRegistry,
    templates: &TemplateSet,
    options: &CodegenOptions,
) -> Result<Artifact, CodegenError> {
    let preamble = templates
        .get(template::PREAMBLE)
        .ok_or_else(|| CodegenError::NoPreamble(templates.target.clone()))?;
    let mut cells = vec![preamble.render(|key| match key {
        "model" => Ok(py_comment(&plan.model)),
        "source_model" => Ok(py_comment(&plan.source_model)),
        "profile_hash" => Ok(py_comment(&plan.profile_hash)),
        other => Err(format!("unknown preamble placeholder `{other}`")),
    })?];
    for step in &plan.steps {
        cells.push(render_step(plan, step, registry, templates, options)?);
    }
    let notebook = templates.target.ends_with("notebook");
    let content = if notebook {
        notebook::write_notebook(&cells)
    } else {
        let mut text = cells
            .iter()
            .map(|c| c.trim_end_matches('\n'))
            .collect::<Vec<_>>()
            .join("\n\n\n");
        text.push('\n');
        text
    };
    Ok(Artifact {
        target: templates.target.clone(),
        file_name: if notebook { "pipeline.ipynb" } else { "pipeline.py" }.to_string(),
        cells,
        content,
    })
}

fn render_step(
    plan: &PipelinePlan,
    step: &PlanStep,
    registry: &StereotypeRegistry,
    templates: &TemplateSet,
    options: &CodegenOptions,
) -> Result<String, CodegenError> {
    let out = result_name(step);
    let mut cell = format!(
        "# [{}] {} <<{}>> | model {} | profile {}\n",
        step.index,
        py_comment(&step.block),
        py_comment(&step.function),
        py_comment(&plan.source_model),
        py_comment(&plan.profile_hash),
    );
    if step.blackbox {
        cell.push_str(&format!(
            "# TODO: `{}` is a black box; supply its implementation here.\n\
             {out} = None\n\
             raise NotImplementedError({})\n",
            py_comment(&step.function),
            py_str(&format!("black-box step {}", step.block)),
        ));
        return Ok(cell);
    }
    if registry.descends(&step.function, CUSTOM_CODE) && !options.allow_custom_code {
        return Err(CodegenError::CustomCodeNotAllowed(step.block.clone()));
    }
    let ancestors: Vec<String> = registry
        .ancestors(&step.function)
        .map(|chain| chain.iter().map(|s| s.name.clone()).collect())
        .unwrap_or_else(|_| vec![step.function.clone()]);
    let tmpl = ancestors
        .iter()
        .find_map(|name| templates.get(name))
        .ok_or_else(|| CodegenError::NoTemplate {
            target: templates.target.clone(),
            block: step.block.clone(),
            stereotype: step.function.clone(),
        })?;
    for param in &tmpl.required {
        if !step.params.contains_key(param) {
            return Err(CodegenError::MissingParam {
                block: step.block.clone(),
                template: tmpl.stereotype.clone(),
                param: param.clone(),
            });
        }
    }
    let input_names: Vec<String> = step
        .input_steps
        .iter()
        .map(|&i| result_name(&plan.steps[i]))
        .collect();
    let mut escaping: Option<EscapingError> = None;
    let mut escape = |lit: &Literal| -> Result<String, String> {
        py_literal(lit).map_err(|e| {
            let message = e.to_string();
            escaping = Some(e);
            message
        })
    };
    let body = tmpl.render(|key| {
        if let Some(n) = key.strip_prefix("input.") {
            let idx: usize = n.parse().map_err(|_| format!("bad input index `{n}`"))?;
            return input_names
                .get(idx)
                .cloned()
                .ok_or_else(|| format!("block `{}` has no input #{idx}", step.block));
        }
        if let Some(k) = key.strip_prefix("raw:") {
            return match step.params.get(k) {
                Some(Literal::Str(s)) => Ok(s.clone()),
                Some(other) => Ok(other.to_string()),
                None => Err(format!("block `{}` binds no `{k}`", step.block)),
            };
        }
        match key {
            "out" => Ok(out.clone()),
            "block" => Ok(py_str(&step.block)),
            "inputs" => Ok(format!("[{}]", input_names.join(", "))),
            "metric_key" => Ok(py_str(&metric_key(plan, step))),
            "columns" => columns_literal(step).map_err(|e| e.to_string()),
            _ => match step.params.get(key) {
                Some(lit) => escape(lit),
                None => Ok("None".into()),
            },
        }
    });
    if let Some(source) = escaping {
        return Err(CodegenError::Escaping {
            block: step.block.clone(),
            source,
        });
    }
    let body = body?;
    cell.push_str(body.trim_end_matches('\n'));
    cell.push('\n');
    Ok(cell)
}

fn columns_literal(step: &PlanStep) -> Result<String, EscapingError> {
    let mut items = Vec::new();
    for c in &step.columns {
        let mut values = Vec::new();
        for (k, v) in &c.values {
            values.push(format!("{}: {}", py_str(k), py_literal(v)?));
        }
        items.push(format!(
            "{{\"name\": {}, \"type\": {}, \"stereotype\": {}, \"values\": {{{}}}}}",
            py_str(&c.name),
            py_str(c.declared_type.as_str()),
            c.stereotype.as_deref().map_or("None".to_string(), py_str),
            values.join(", ")
        ));
    }
    Ok(format!("[{}]", items.join(", ")))
}
