//! Graphviz rendering of a model's dataflow and workflows.

use std::fmt::Write as _;

use crate::ast::{AssociationKind, Model, Stage};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn quote(s: &str) -> String {
    format!("\"{}\"", escape(s))
}

/// Blocks are grouped into one cluster per non-empty stage; input
/// associations point from producer to consumer (dashed when shared) and
/// workflow states appear as ellipses linked to their target block.
pub fn to_dot(model: &Model) -> String {
    let name = if model.name.is_empty() { "model" } else { &model.name };
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(name));
    out.push_str("  rankdir=LR;\n  node [shape=box];\n");
    for (i, stage) in Stage::ALL.into_iter().enumerate() {
        let blocks: Vec<_> = model.blocks.iter().filter(|b| b.stage == stage).collect();
        if blocks.is_empty() {
            continue;
        }
        let _ = writeln!(out, "  subgraph cluster_{i} {{");
        let _ = writeln!(out, "    label={};", quote(stage.as_str()));
        for b in blocks {
            let label = if b.applied_stereotypes.is_empty() {
                quote(&b.name)
            } else {
                let st = escape(&b.applied_stereotypes.join(", "));
                format!("\"«{st}»\\n{}\"", escape(&b.name))
            };
            let _ = writeln!(out, "    {} [label={label}];", quote(&b.name));
        }
        out.push_str("  }\n");
    }
    for b in &model.blocks {
        for input in &b.inputs {
            let style = match input.kind {
                AssociationKind::Part => "",
                AssociationKind::Shared => " [style=dashed]",
            };
            let _ = writeln!(out, "  {} -> {}{style};", quote(&input.block), quote(&b.name));
        }
        if let Some(p) = &b.parent_block {
            let _ = writeln!(out, "  {} -> {} [arrowhead=empty];", quote(&b.name), quote(p));
        }
    }
    for sm in &model.state_machines {
        for s in &sm.states {
            let id = quote(&format!("{}::{}", sm.name, s.name));
            let shape = if sm.initial.as_deref() == Some(s.name.as_str()) {
                "doublecircle"
            } else {
                "ellipse"
            };
            let _ = writeln!(out, "  {id} [shape={shape}, label={}];", quote(&s.name));
            let _ = writeln!(out, "  {id} -> {} [style=dotted];", quote(&s.target_block));
        }
        for t in &sm.transitions {
            let _ = writeln!(
                out,
                "  {} -> {} [color=blue];",
                quote(&format!("{}::{}", sm.name, t.from)),
                quote(&format!("{}::{}", sm.name, t.to))
            );
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use crate::profile::default_registry;

    #[test]
    fn empty_model_is_valid_dot() {
        let dot = to_dot(&Model::default());
        assert!(dot.starts_with("digraph \"model\" {"));
        assert!(dot.trim_end().ends_with('}'));
        assert!(!dot.contains("subgraph"));
    }

    #[test]
    fn edges_and_clusters() {
        let reg = default_registry();
        let src = "stage PreProcessing { block A { } block B { input shared A; } }";
        let dot = to_dot(&parse_model(src, &reg).model.unwrap());
        assert!(dot.contains("\"A\" -> \"B\" [style=dashed];"));
        assert_eq!(dot.matches("subgraph").count(), 1);
        assert_eq!(dot.matches('{').count(), dot.matches('}').count());
    }
}
