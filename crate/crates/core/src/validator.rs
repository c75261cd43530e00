//! Semantic checks over a parsed model (`E-2xx`, `W-3xx`, `I-301`).

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::ast::{effective_block, Model, SourceSpan, StateMachine};
use crate::dataflow::{Dataflow, Selection};
use crate::diagnostics::{sort_diagnostics, Diagnostic, Severity};
use crate::literal::Literal;
use crate::profile::{
    AppliesTo, AttrKind, AttributeSpec, LiteralCheck, StereotypeRegistry, CUSTOM_CODE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CustomCodePolicy {
    Allow,
    Warn,
    #[default]
    Error,
}

impl CustomCodePolicy {
    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "allow" => Some(Self::Allow),
            "warn" => Some(Self::Warn),
            "error" => Some(Self::Error),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnknownOptionalPolicy {
    Allow,
    #[default]
    Warn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ValidationConfig {
    pub custom_code_policy: CustomCodePolicy,
    pub unknown_optional_attrs: UnknownOptionalPolicy,
}

/// Runs every semantic rule; the result is sorted and free of duplicates.
pub fn validate(
    model: &Model,
    registry: &StereotypeRegistry,
    config: &ValidationConfig,
) -> Vec<Diagnostic> {
    let df = Dataflow::new(model, registry);
    let mut v = Validator {
        model,
        registry,
        config,
        df: &df,
        out: Vec::new(),
    };
    v.abstract_stereotypes();
    v.values();
    v.mandatory();
    v.references();
    v.overrides();
    v.custom_code();
    let cyclic = v.cycles();
    for sm in &model.state_machines {
        v.workflow(sm, &cyclic);
    }
    v.dead_blocks();
    v.shared_inputs();
    let mut out = v.out;
    sort_diagnostics(&mut out);
    out
}

struct Validator<'a> {
    model: &'a Model,
    registry: &'a StereotypeRegistry,
    config: &'a ValidationConfig,
    df: &'a Dataflow<'a>,
    out: Vec<Diagnostic>,
}

impl Validator<'_> {
    fn push(&mut self, code: &'static str, message: String, span: &SourceSpan) {
        self.out.push(Diagnostic::new(code, message, span.clone()));
    }

    fn abstract_stereotypes(&mut self) {
        let reg = self.registry;
        let is_abstract = |st: &str| reg.stereotype(st).is_some_and(|d| d.is_abstract);
        for b in &self.model.blocks {
            for st in b.applied_stereotypes.iter().filter(|s| is_abstract(s)) {
                self.push(
                    "E-201",
                    format!("block `{}` applies abstract stereotype `{st}`", b.name),
                    &b.span,
                );
            }
            for a in &b.attributes {
                if let Some(st) = a.applied_stereotype.as_deref().filter(|s| is_abstract(s)) {
                    self.push(
                        "E-201",
                        format!("attribute `{}.{}` applies abstract stereotype `{st}`", b.name, a.name),
                        &a.span,
                    );
                }
            }
        }
        for sm in &self.model.state_machines {
            for s in sm.states.iter().filter(|s| is_abstract(&s.stereotype)) {
                self.push(
                    "E-201",
                    format!("state `{}` applies abstract stereotype `{}`", s.name, s.stereotype),
                    &s.span,
                );
            }
        }
    }

    /// Shape and enumeration checks on every binding a block or attribute
    /// makes itself, plus unknown optional values.
    fn values(&mut self) {
        for b in &self.model.blocks {
            let specs = self.df.specs(&b.name);
            let has_stereotypes = !self.model.effective_stereotypes(&b.name).is_empty();
            for (key, lit) in b.values() {
                match specs.iter().find(|s| &s.name == key) {
                    Some(spec) => {
                        let span = b.value_span(key).clone();
                        self.check_value(&format!("`{}.{key}`", b.name), spec, lit, &span);
                    }
                    None if has_stereotypes
                        && self.config.unknown_optional_attrs == UnknownOptionalPolicy::Warn =>
                    {
                        self.push(
                            "W-303",
                            format!(
                                "`{key}` on block `{}` is not an attribute of its stereotypes",
                                b.name
                            ),
                            b.value_span(key),
                        );
                    }
                    None => {}
                }
            }
            for a in &b.attributes {
                let Some(st) = &a.applied_stereotype else { continue };
                let specs = self.registry.effective_attributes(st).unwrap_or_default();
                for (key, lit) in &a.stereotype_values {
                    match specs.iter().find(|s| &s.name == key) {
                        Some(spec) => {
                            let what = format!("`{}.{}` @{st}({key})", b.name, a.name);
                            self.check_value(&what, spec, lit, &a.span);
                        }
                        None if self.config.unknown_optional_attrs
                            == UnknownOptionalPolicy::Warn =>
                        {
                            self.push(
                                "W-303",
                                format!("`{key}` is not an attribute of stereotype `{st}`"),
                                &a.span,
                            );
                        }
                        None => {}
                    }
                }
            }
        }
    }

    fn check_value(&mut self, what: &str, spec: &AttributeSpec, lit: &Literal, span: &SourceSpan) {
        match self.registry.check_literal(&spec.kind, lit) {
            LiteralCheck::Ok => {}
            LiteralCheck::KindMismatch(m) => {
                self.push("E-212", format!("{what}: {m}"), span);
            }
            LiteralCheck::NotInEnum { value, enumeration } => {
                let allowed = self
                    .registry
                    .enumeration(&enumeration)
                    .map(|e| e.values.join(", "))
                    .unwrap_or_default();
                self.push(
                    "E-203",
                    format!("{what}: `{value}` is not in {enumeration} ({allowed})"),
                    span,
                );
            }
        }
    }

    fn mandatory(&mut self) {
        for b in &self.model.blocks {
            let Some(eff) = self.df.block(&b.name) else { continue };
            for spec in self.df.specs(&b.name) {
                if spec.mandatory && spec.default.is_none() && eff.value(&spec.name).is_none() {
                    self.push(
                        "E-202",
                        format!(
                            "block `{}` does not bind mandatory attribute `{}` ({})",
                            b.name, spec.name, spec.kind
                        ),
                        &b.span,
                    );
                }
            }
            for a in &b.attributes {
                let Some(st) = &a.applied_stereotype else { continue };
                for spec in self.registry.effective_attributes(st).unwrap_or_default() {
                    if spec.mandatory
                        && spec.default.is_none()
                        && !a.stereotype_values.contains_key(&spec.name)
                    {
                        self.push(
                            "E-202",
                            format!(
                                "attribute `{}.{}` does not bind `{}` required by @{st}",
                                b.name, a.name, spec.name
                            ),
                            &a.span,
                        );
                    }
                }
            }
        }
    }

    fn references(&mut self) {
        for b in &self.model.blocks {
            // Attribute references resolve against the inputs; reported on
            // every block whose effective bindings fail.
            for sel in self.df.selections(&b.name) {
                match sel {
                    Selection::Bound {
                        key,
                        target,
                        value,
                        resolved: None,
                    } => {
                        let span = self
                            .df
                            .block(&b.name)
                            .map(|e| e.value_span(&key).clone())
                            .unwrap_or_else(|| b.span.clone());
                        self.push(
                            "E-204",
                            format!(
                                "`{}.{key}` = \"{value}\" names no input attribute carrying @{target}",
                                b.name
                            ),
                            &span,
                        );
                    }
                    Selection::Implicit {
                        key,
                        target,
                        candidates,
                    } if candidates.len() != 1 => {
                        let found = if candidates.is_empty() {
                            "none".to_string()
                        } else {
                            candidates
                                .iter()
                                .map(|c| c.qualified())
                                .collect::<Vec<_>>()
                                .join(", ")
                        };
                        self.push(
                            "E-205",
                            format!(
                                "block `{}` needs one input attribute carrying @{target} for `{key}`, found {found}",
                                b.name
                            ),
                            &b.span,
                        );
                    }
                    _ => {}
                }
            }
            // Block references.
            for spec in self.df.specs(&b.name) {
                let AttrKind::StereotypeRef(target) = &spec.kind else { continue };
                let is_block_ref = self
                    .registry
                    .stereotype(target)
                    .is_some_and(|d| d.applies_to == AppliesTo::Block);
                let Some(Literal::Str(value)) = b.value(&spec.name) else { continue };
                if !is_block_ref {
                    continue;
                }
                let ok = self.model.block(value).is_some_and(|_| {
                    self.model
                        .effective_stereotypes(value)
                        .iter()
                        .any(|s| self.registry.descends(s, target))
                });
                if !ok {
                    self.push(
                        "E-204",
                        format!(
                            "`{}.{}` = \"{value}\" is not a block carrying @{target}",
                            b.name, spec.name
                        ),
                        b.value_span(&spec.name),
                    );
                }
            }
        }
    }

    fn overrides(&mut self) {
        for b in &self.model.blocks {
            let Some(parent) = &b.parent_block else { continue };
            let Ok(base) = effective_block(self.model, self.registry, parent) else {
                continue;
            };
            for (key, lit) in b.values() {
                if let Some(old) = base.value(key) {
                    if old.class() != lit.class() {
                        self.push(
                            "E-210",
                            format!(
                                "`{}.{key}` overrides a {:?} value from `{parent}` with a {:?} value",
                                b.name,
                                old.class(),
                                lit.class()
                            ),
                            b.value_span(key),
                        );
                    }
                }
            }
            for a in &b.attributes {
                if let Some(old) = base.attribute(&a.name) {
                    if old.declared_type != a.declared_type
                        || old.applied_stereotype != a.applied_stereotype
                    {
                        self.push(
                            "E-210",
                            format!(
                                "attribute `{}.{}` changes type or stereotype inherited from `{parent}`",
                                b.name, a.name
                            ),
                            &a.span,
                        );
                    }
                }
            }
        }
    }

    fn custom_code(&mut self) {
        let (code, severity) = match self.config.custom_code_policy {
            CustomCodePolicy::Allow => return,
            CustomCodePolicy::Warn => ("W-302", Severity::Warning),
            CustomCodePolicy::Error => ("E-211", Severity::Error),
        };
        for b in &self.model.blocks {
            let uses = self
                .model
                .effective_stereotypes(&b.name)
                .iter()
                .any(|s| self.registry.descends(s, CUSTOM_CODE));
            if uses {
                self.out.push(
                    Diagnostic::new(code, format!("block `{}` uses CustomCode", b.name), b.span.clone())
                        .with_severity(severity),
                );
            }
        }
    }

    /// Reports each dataflow cycle once and returns every block on one.
    fn cycles(&mut self) -> HashSet<String> {
        let mut cyclic = HashSet::new();
        for cycle in self.df.cycles() {
            let first = self.model.block(&cycle[0]).expect("cycle member exists");
            let mut d = Diagnostic::new(
                "E-206",
                format!("dataflow cycle through {}", cycle.join(", ")),
                first.span.clone(),
            );
            for other in &cycle[1..] {
                if let Some(b) = self.model.block(other) {
                    d = d.with_related(b.span.clone());
                }
            }
            self.out.push(d);
            cyclic.extend(cycle);
        }
        cyclic
    }

    fn workflow(&mut self, sm: &StateMachine, cyclic: &HashSet<String>) {
        for s in &sm.states {
            if self.df.function(&s.target_block).is_none() {
                self.push(
                    "E-207",
                    format!(
                        "state `{}` targets `{}`, which carries no ML stereotype",
                        s.name, s.target_block
                    ),
                    &s.span,
                );
            }
        }
        let Some(initial) = sm.initial.as_deref().filter(|i| sm.state(i).is_some()) else {
            self.push(
                "E-209",
                format!("workflow `{}` has no initial state", sm.name),
                &sm.span,
            );
            return;
        };
        let mut reached = HashSet::from([initial]);
        let mut stack = vec![initial];
        while let Some(s) = stack.pop() {
            for next in sm.successors(s) {
                if reached.insert(next) {
                    stack.push(next);
                }
            }
        }
        for s in sm.states.iter().filter(|s| !reached.contains(s.name.as_str())) {
            self.push(
                "E-209",
                format!("state `{}` is unreachable from `{initial}`", s.name),
                &s.span,
            );
        }
        self.workflow_order(sm, initial, cyclic);
    }

    /// Every simple path from the initial state must schedule each consumed
    /// processing block before its consumer.
    fn workflow_order(&mut self, sm: &StateMachine, initial: &str, cyclic: &HashSet<String>) {
        const MAX_PATHS: usize = 10_000;
        let finals: HashSet<&str> = sm.final_states.iter().map(String::as_str).collect();
        let mut paths: Vec<Vec<&str>> = Vec::new();
        let mut stack: Vec<Vec<&str>> = vec![vec![initial]];
        while let Some(path) = stack.pop() {
            if paths.len() >= MAX_PATHS {
                break;
            }
            let last = *path.last().expect("non-empty path");
            let next: Vec<&str> = sm.successors(last).filter(|n| !path.contains(n)).collect();
            if finals.contains(last) || next.is_empty() {
                paths.push(path.clone());
            }
            for n in next {
                let mut p = path.clone();
                p.push(n);
                stack.push(p);
            }
        }
        let mut reported = BTreeSet::new();
        for path in paths {
            let mut position: HashMap<&str, usize> = HashMap::new();
            for (i, s) in path.iter().enumerate() {
                if let Some(state) = sm.state(s) {
                    position.entry(state.target_block.as_str()).or_insert(i);
                }
            }
            for (i, s) in path.iter().enumerate() {
                let Some(state) = sm.state(s) else { continue };
                let consumer = state.target_block.as_str();
                if cyclic.contains(consumer) {
                    continue;
                }
                for producer in self.df.inputs(consumer) {
                    if cyclic.contains(producer)
                        || self.df.is_source(producer)
                        || self.df.function(producer).is_none()
                    {
                        continue;
                    }
                    let problem = match position.get(producer) {
                        Some(&p) if p < i => continue,
                        Some(_) => "after",
                        None => "never",
                    };
                    if !reported.insert((state.name.clone(), producer.to_string())) {
                        continue;
                    }
                    let message = if problem == "after" {
                        format!(
                            "state `{}` runs `{consumer}` before its input `{producer}`",
                            state.name
                        )
                    } else {
                        format!(
                            "state `{}` runs `{consumer}`, but its input `{producer}` is never scheduled on path {}",
                            state.name,
                            path.join(" -> ")
                        )
                    };
                    self.push("E-208", message, &state.span);
                }
            }
        }
    }

    fn dead_blocks(&mut self) {
        let mut live: BTreeSet<String> = BTreeSet::new();
        for sm in &self.model.state_machines {
            for s in &sm.states {
                live.insert(s.target_block.clone());
                live.extend(self.df.upstream(&s.target_block));
            }
        }
        for b in &self.model.blocks {
            if self.df.function(&b.name).is_some() && !live.contains(&b.name) {
                self.push(
                    "W-301",
                    format!(
                        "block `{}` is not used by any workflow and will not be implemented",
                        b.name
                    ),
                    &b.span,
                );
            }
        }
    }

    fn shared_inputs(&mut self) {
        for b in &self.model.blocks {
            for i in b.inputs.iter().filter(|i| i.kind == crate::ast::AssociationKind::Shared) {
                self.push(
                    "I-301",
                    format!(
                        "`{}` shares `{}`; treated as a single input dataset",
                        b.name, i.block
                    ),
                    &i.span,
                );
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use crate::profile::default_registry;

    fn codes_with(src: &str, config: ValidationConfig) -> Vec<&'static str> {
        let reg = default_registry();
        let r = parse_model(src, &reg);
        let model = r.model.unwrap_or_else(|| panic!("{:#?}", r.diagnostics));
        validate(&model, &reg, &config).iter().map(|d| d.code).collect()
    }

    fn codes(src: &str) -> Vec<&'static str> {
        codes_with(src, ValidationConfig::default())
    }

    const CSV: &str = r#"block C : CSV { file = "c.csv"; Encoding = "UTF-8"; Delimiter = ",";
        attr d: String @Datetime(format = "%Y"); attr t: Float; }"#;

    fn wrap(pre: &str, wf: &str) -> String {
        format!(
            "stage DataUnderstanding {{ {CSV} }}\nstage PreProcessing {{ {pre} }}\nstage Workflow {{ workflow W {{ {wf} }} }}"
        )
    }

    #[test]
    fn clean_pipeline_has_no_diagnostics() {
        let src = wrap(
            r#"block F : DateConversion { format = "%Y-%m-%d"; input part C; }
               block N : Normalization { method = "MinMax"; input part F; }"#,
            "state S1 -> block F; state S2 -> block N; S1 -> S2; initial S1; final S2;",
        );
        assert_eq!(codes(&src), Vec::<&str>::new());
    }

    #[test]
    fn each_rule_fires() {
        let wf = "state S -> block F; initial S; final S;";
        assert_eq!(
            codes(&wrap("block F : DataTransformation { input part C; }", wf)),
            vec!["E-201"]
        );
        assert_eq!(
            codes(&wrap("block F : DateConversion { input part C; }", wf)),
            vec!["E-202"]
        );
        assert_eq!(
            codes(&wrap(r#"block F : Normalization { method = "Log"; input part C; }"#, wf)),
            vec!["E-203"]
        );
        assert_eq!(
            codes(&wrap(
                r#"block F : DateConversion { format = "%Y"; input_attribute = "t"; input part C; }"#,
                wf
            )),
            vec!["E-204"]
        );
        assert_eq!(
            codes(&wrap(r#"block F : DateConversion { format = "%Y"; }"#, wf)),
            vec!["W-301", "E-205"]
        );
        assert_eq!(
            codes(&wrap(r#"block F : DateConversion { format = "%j"; input part C; }"#, wf)),
            vec!["E-212"]
        );
        assert_eq!(
            codes(&wrap(
                r#"block F : CustomCode { code = "x = 1"; input part C; }"#,
                wf
            )),
            vec!["E-211"]
        );
        assert_eq!(
            codes(&wrap(
                r#"block F : DateConversion { format = "%Y"; input part C; bogus = 1; }"#,
                wf
            )),
            vec!["W-303"]
        );
        assert_eq!(
            codes(&wrap(
                r#"block F : DateConversion { format = "%Y"; input shared C; }"#,
                wf
            )),
            vec!["I-301"]
        );
    }

    #[test]
    fn policies() {
        let src = wrap(
            r#"block F : CustomCode { code = "x = 1"; input part C; extra = 1; }"#,
            "state S -> block F; initial S;",
        );
        let warn = ValidationConfig {
            custom_code_policy: CustomCodePolicy::Warn,
            unknown_optional_attrs: UnknownOptionalPolicy::Allow,
        };
        assert_eq!(codes_with(&src, warn), vec!["W-302"]);
        let allow = ValidationConfig {
            custom_code_policy: CustomCodePolicy::Allow,
            ..warn
        };
        assert!(codes_with(&src, allow).is_empty());
    }

    #[test]
    fn workflow_rules() {
        let pre = r#"block F : DateConversion { format = "%Y"; input part C; }
                     block N : Normalization { method = "MinMax"; input part F; }
                     block Biz { }"#;
        assert_eq!(
            codes(&wrap(pre, "state A -> block N; state B -> block F; A -> B; initial A;")),
            vec!["E-208"]
        );
        assert_eq!(
            codes(&wrap(pre, "state B -> block N; initial B;")),
            vec!["E-208"]
        );
        assert_eq!(
            codes(&wrap(pre, "state A -> block F; state B -> block N; A -> B;")),
            vec!["E-209"]
        );
        assert_eq!(
            codes(&wrap(pre, "state A -> block F; state B -> block N; initial A;")),
            vec!["E-209"]
        );
        assert_eq!(
            codes(&wrap(
                pre,
                "state A -> block F; state B -> block N; state Z -> block Biz; A -> B; B -> Z; initial A;"
            )),
            vec!["E-207"]
        );
    }

    #[test]
    fn dataflow_cycle_reported_once() {
        let src = wrap(
            r#"block F : DateConversion { format = "%Y"; input part C; input part N; }
               block N : Normalization { method = "MinMax"; input part F; }"#,
            "state A -> block F; state B -> block N; A -> B; initial A;",
        );
        assert_eq!(codes(&src), vec!["E-206"]);
    }

    #[test]
    fn override_kind_change() {
        let src = wrap(
            r#"block F : DateConversion { format = "%Y"; input part C; }
               block G extends F { format = 3; }"#,
            "state A -> block F; state B -> block G; A -> B; initial A;",
        );
        assert_eq!(codes(&src), vec!["E-210", "E-212"]);
    }
}
