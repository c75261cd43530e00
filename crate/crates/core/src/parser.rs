//! Parser and canonical formatter for `.mlsysml` model files.
//!
//! Parsing never stops at the first problem: syntax errors are recovered at
//! the next `;` or `}` and reference errors (unknown stereotypes, blocks,
//! states) are collected after the whole file has been read. A [`Model`] is
//! returned only when no error was found.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use crate::ast::{
    classify_values, AssociationKind, Block, BlockAttribute, DataType, Input, Model, SourceSpan,
    Stage, State, StateMachine, Transition,
};
use crate::diagnostics::{sort_diagnostics, Diagnostic};
use crate::lexer::{tokenize, Pos, TokenKind};
use crate::literal::Literal;
use crate::profile::{AppliesTo, StereotypeRegistry, STATE_ROOT};
use crate::syntax::{Cursor, SyntaxError};

#[derive(Debug, Clone)]
pub struct ParseResult {
    pub model: Option<Model>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseResult {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(Diagnostic::is_error)
    }
}

pub const DEFAULT_FILE_NAME: &str = "<input>";

pub fn parse_model(source: &str, profile: &StereotypeRegistry) -> ParseResult {
    parse_model_named(source, DEFAULT_FILE_NAME, profile)
}

/// Parses `source`, attributing spans to `file`.
pub fn parse_model_named(source: &str, file: &str, profile: &StereotypeRegistry) -> ParseResult {
    let (tokens, lex_errors) = tokenize(source);
    let mut p = Parser {
        cur: Cursor::new(tokens),
        file: file.to_string(),
        diags: Vec::new(),
    };
    for e in lex_errors {
        let span = p.span(e.pos);
        p.diags.push(Diagnostic::new("P-109", e.message, span));
    }
    let raw = p.parse_file();
    let mut diags = p.diags;
    let model = resolve(raw, profile, file, &mut diags);
    sort_diagnostics(&mut diags);
    let has_errors = diags.iter().any(Diagnostic::is_error);
    ParseResult {
        model: if has_errors { None } else { Some(model) },
        diagnostics: diags,
    }
}

struct Named {
    name: String,
    span: SourceSpan,
}

struct RawBlock {
    name: Named,
    stage: Stage,
    stereotypes: Vec<Named>,
    parent: Option<Named>,
    bindings: Vec<(String, Literal, SourceSpan)>,
    attributes: Vec<RawAttribute>,
    inputs: Vec<Input>,
    realizes: Vec<Named>,
}

struct RawAttribute {
    attr: BlockAttribute,
    stereotype_span: Option<SourceSpan>,
}

struct RawState {
    state: State,
    stereotype_span: SourceSpan,
    target_span: SourceSpan,
}

struct RawWorkflow {
    name: Named,
    states: Vec<RawState>,
    transitions: Vec<Transition>,
    initial: Option<Named>,
    finals: Vec<Named>,
}

#[derive(Default)]
struct RawFile {
    name: String,
    profile_ref: Option<String>,
    blocks: Vec<RawBlock>,
    workflows: Vec<RawWorkflow>,
}

struct Parser {
    cur: Cursor,
    file: String,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, SyntaxError>;

impl Parser {
    fn span(&self, pos: Pos) -> SourceSpan {
        SourceSpan {
            file: self.file.clone(),
            line: pos.line,
            column: pos.column,
            length: pos.len,
        }
    }

    fn syntax(&mut self, e: SyntaxError) {
        let span = self.span(e.pos);
        self.diags.push(Diagnostic::new("P-101", e.message, span));
    }

    fn ident(&mut self, what: &str) -> PResult<Named> {
        let (name, pos) = self.cur.expect_ident(what)?;
        Ok(Named {
            name,
            span: self.span(pos),
        })
    }

    fn parse_file(&mut self) -> RawFile {
        let mut file = RawFile::default();
        if self.cur.at_word("model") {
            self.cur.bump();
            match self.header() {
                Ok((name, profile_ref)) => {
                    file.name = name;
                    file.profile_ref = profile_ref;
                }
                Err(e) => {
                    self.syntax(e);
                    self.cur.recover_statement();
                }
            }
        }
        while !self.cur.at_eof() {
            if self.cur.eat_word("stage") {
                if let Err(e) = self.stage(&mut file) {
                    self.syntax(e);
                    self.cur.recover_block();
                }
            } else {
                let e = self.cur.error_here("`stage`");
                self.syntax(e);
                self.cur.bump();
                self.cur.recover_statement();
            }
        }
        file
    }

    fn header(&mut self) -> PResult<(String, Option<String>)> {
        let name = self.ident("model name")?.name;
        let profile_ref = if self.cur.eat_word("profile") {
            let tok = self.cur.bump();
            match tok.kind {
                TokenKind::Str(s) => Some(s),
                other => {
                    return Err(SyntaxError {
                        message: format!("expected profile path string, found {other}"),
                        pos: tok.pos,
                    })
                }
            }
        } else {
            None
        };
        self.cur.expect_punct(';')?;
        Ok((name, profile_ref))
    }

    fn stage(&mut self, file: &mut RawFile) -> PResult<()> {
        let named = self.ident("stage name")?;
        let stage = Stage::from_name(&named.name).ok_or_else(|| SyntaxError {
            message: format!(
                "unknown stage `{}`; expected one of {}",
                named.name,
                Stage::ALL.map(Stage::as_str).join(", ")
            ),
            pos: Pos {
                line: named.span.line,
                column: named.span.column,
                len: named.span.length,
                offset: 0,
            },
        })?;
        self.cur.expect_punct('{')?;
        loop {
            if self.cur.eat_punct('}') {
                return Ok(());
            }
            if self.cur.at_eof() {
                return Err(self.cur.error_here("`}`"));
            }
            if self.cur.eat_word("block") {
                match self.block(stage) {
                    Ok(b) => file.blocks.push(b),
                    Err(e) => {
                        self.syntax(e);
                        self.cur.recover_block();
                    }
                }
            } else if self.cur.at_word("workflow") {
                let kw = self.cur.bump();
                if stage != Stage::Workflow {
                    let span = self.span(kw.pos);
                    self.diags.push(Diagnostic::new(
                        "P-111",
                        format!("workflow declared in stage {}", stage.as_str()),
                        span,
                    ));
                }
                match self.workflow() {
                    Ok(w) => file.workflows.push(w),
                    Err(e) => {
                        self.syntax(e);
                        self.cur.recover_block();
                    }
                }
            } else {
                let e = self.cur.error_here("`block`, `workflow` or `}`");
                self.syntax(e);
                self.cur.bump();
                self.cur.recover_statement();
            }
        }
    }

    fn block(&mut self, stage: Stage) -> PResult<RawBlock> {
        let name = self.ident("block name")?;
        let mut stereotypes = Vec::new();
        if self.cur.eat_punct(':') {
            loop {
                stereotypes.push(self.ident("stereotype name")?);
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
        }
        let parent = if self.cur.eat_word("extends") {
            Some(self.ident("parent block")?)
        } else {
            None
        };
        self.cur.expect_punct('{')?;
        let mut block = RawBlock {
            name,
            stage,
            stereotypes,
            parent,
            bindings: Vec::new(),
            attributes: Vec::new(),
            inputs: Vec::new(),
            realizes: Vec::new(),
        };
        loop {
            if self.cur.eat_punct('}') {
                return Ok(block);
            }
            if self.cur.at_eof() {
                return Err(self.cur.error_here("`}`"));
            }
            if let Err(e) = self.block_item(&mut block) {
                self.syntax(e);
                self.cur.recover_statement();
            }
        }
    }

    fn block_item(&mut self, block: &mut RawBlock) -> PResult<()> {
        let is_binding = self.cur.peek_nth(1).kind == TokenKind::Punct('=');
        if !is_binding && self.cur.eat_word("attr") {
            let attr = self.attribute()?;
            if block.attributes.iter().any(|a| a.attr.name == attr.attr.name) {
                self.diags.push(Diagnostic::new(
                    "P-104",
                    format!("duplicate attribute `{}` in block `{}`", attr.attr.name, block.name.name),
                    attr.attr.span.clone(),
                ));
            } else {
                block.attributes.push(attr);
            }
        } else if !is_binding && self.cur.eat_word("input") {
            let kind = if self.cur.eat_word("part") {
                AssociationKind::Part
            } else if self.cur.eat_word("shared") {
                AssociationKind::Shared
            } else {
                return Err(self.cur.error_here("`part` or `shared`"));
            };
            let target = self.ident("input block")?;
            let multiplicity = if self.cur.at_punct('[') {
                self.multiplicity()?
            } else {
                "1".to_string()
            };
            self.cur.expect_punct(';')?;
            block.inputs.push(Input {
                block: target.name,
                kind,
                multiplicity,
                span: target.span,
            });
        } else if !is_binding && self.cur.eat_word("realizes") {
            loop {
                block.realizes.push(self.ident("realized block")?);
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
            self.cur.expect_punct(';')?;
        } else {
            let key = self.ident("`attr`, `input`, `realizes` or a binding")?;
            self.cur.expect_punct('=')?;
            let (value, _) = self.cur.literal()?;
            self.cur.expect_punct(';')?;
            if block.bindings.iter().any(|(k, _, _)| *k == key.name) {
                self.diags.push(Diagnostic::new(
                    "P-104",
                    format!("`{}` is bound twice in block `{}`", key.name, block.name.name),
                    key.span,
                ));
            } else {
                block.bindings.push((key.name, value, key.span));
            }
        }
        Ok(())
    }

    fn attribute(&mut self) -> PResult<RawAttribute> {
        let name = self.ident("attribute name")?;
        self.cur.expect_punct(':')?;
        let ty = self.ident("data type")?;
        let declared_type = match DataType::from_name(&ty.name) {
            Some(t) => t,
            None => {
                self.diags.push(Diagnostic::new(
                    "P-113",
                    format!(
                        "unknown data type `{}`; expected one of {}",
                        ty.name,
                        DataType::ALL.map(DataType::as_str).join(", ")
                    ),
                    ty.span,
                ));
                DataType::String
            }
        };
        let mut applied_stereotype = None;
        let mut stereotype_span = None;
        let mut stereotype_values = BTreeMap::new();
        if self.cur.eat_punct('@') {
            let st = self.ident("attribute stereotype")?;
            applied_stereotype = Some(st.name);
            stereotype_span = Some(st.span);
            if self.cur.eat_punct('(') {
                if !self.cur.at_punct(')') {
                    loop {
                        let key = self.ident("stereotype attribute")?;
                        self.cur.expect_punct('=')?;
                        let (value, _) = self.cur.literal()?;
                        if stereotype_values.insert(key.name.clone(), value).is_some() {
                            self.diags.push(Diagnostic::new(
                                "P-104",
                                format!("`{}` is bound twice", key.name),
                                key.span,
                            ));
                        }
                        if !self.cur.eat_punct(',') {
                            break;
                        }
                    }
                }
                self.cur.expect_punct(')')?;
            }
        }
        self.cur.expect_punct(';')?;
        Ok(RawAttribute {
            attr: BlockAttribute {
                name: name.name,
                declared_type,
                applied_stereotype,
                stereotype_values,
                span: name.span,
            },
            stereotype_span,
        })
    }

    fn multiplicity(&mut self) -> PResult<String> {
        let open = self.cur.expect_punct('[')?;
        let lo = self.bound()?;
        let hi = if self.cur.peek().kind == TokenKind::DotDot {
            self.cur.bump();
            Some(self.bound()?)
        } else {
            None
        };
        let close = self.cur.expect_punct(']')?;
        let valid = match (&lo, &hi) {
            (_, None) => true,
            (Some(_), Some(None)) => true,
            (Some(l), Some(Some(h))) => l <= h,
            (None, Some(_)) => false,
        };
        let text = |b: &Option<i64>| b.map_or("*".to_string(), |v| v.to_string());
        let rendered = match &hi {
            None => text(&lo),
            Some(h) => format!("{}..{}", text(&lo), text(h)),
        };
        if !valid {
            let mut span = self.span(open);
            span.length = close.offset + close.len - open.offset;
            self.diags.push(Diagnostic::new(
                "P-110",
                format!("invalid multiplicity `{rendered}`"),
                span,
            ));
        }
        Ok(rendered)
    }

    /// `Some(n)` for an integer bound, `None` for `*`.
    fn bound(&mut self) -> PResult<Option<i64>> {
        let tok = self.cur.peek().clone();
        match tok.kind {
            TokenKind::Int(n) if n >= 0 => {
                self.cur.bump();
                Ok(Some(n))
            }
            TokenKind::Punct('*') => {
                self.cur.bump();
                Ok(None)
            }
            _ => Err(self.cur.error_here("a multiplicity bound")),
        }
    }

    fn workflow(&mut self) -> PResult<RawWorkflow> {
        let name = self.ident("workflow name")?;
        self.cur.expect_punct('{')?;
        let mut wf = RawWorkflow {
            name,
            states: Vec::new(),
            transitions: Vec::new(),
            initial: None,
            finals: Vec::new(),
        };
        loop {
            if self.cur.eat_punct('}') {
                return Ok(wf);
            }
            if self.cur.at_eof() {
                return Err(self.cur.error_here("`}`"));
            }
            if let Err(e) = self.workflow_item(&mut wf) {
                self.syntax(e);
                self.cur.recover_statement();
            }
        }
    }

    fn workflow_item(&mut self, wf: &mut RawWorkflow) -> PResult<()> {
        if self.cur.peek_nth(1).kind == TokenKind::Arrow {
            let from = self.ident("state name")?;
            self.cur.expect_arrow()?;
            let to = self.ident("state name")?;
            self.cur.expect_punct(';')?;
            wf.transitions.push(Transition {
                from: from.name,
                to: to.name,
                span: from.span,
            });
        } else if self.cur.eat_word("state") {
            let name = self.ident("state name")?;
            let (stereotype, stereotype_span) = if self.cur.eat_punct(':') {
                let st = self.ident("state stereotype")?;
                (st.name, st.span)
            } else {
                (STATE_ROOT.to_string(), name.span.clone())
            };
            self.cur.expect_arrow()?;
            self.cur.expect_word("block")?;
            let target = self.ident("target block")?;
            self.cur.expect_punct(';')?;
            wf.states.push(RawState {
                state: State {
                    name: name.name,
                    stereotype,
                    target_block: target.name,
                    span: name.span,
                },
                stereotype_span,
                target_span: target.span,
            });
        } else if self.cur.eat_word("initial") {
            let name = self.ident("initial state")?;
            self.cur.expect_punct(';')?;
            if let Some(prev) = &wf.initial {
                self.diags.push(
                    Diagnostic::new(
                        "P-104",
                        format!("workflow `{}` declares more than one initial state", wf.name.name),
                        name.span.clone(),
                    )
                    .with_related(prev.span.clone()),
                );
            } else {
                wf.initial = Some(name);
            }
        } else if self.cur.eat_word("final") {
            loop {
                wf.finals.push(self.ident("final state")?);
                if !self.cur.eat_punct(',') {
                    break;
                }
            }
            self.cur.expect_punct(';')?;
        } else {
            return Err(self.cur.error_here("`state`, a transition, `initial` or `final`"));
        }
        Ok(())
    }
}

/// Reference resolution and AST invariant checks over the raw parse.
fn resolve(
    raw: RawFile,
    profile: &StereotypeRegistry,
    file: &str,
    diags: &mut Vec<Diagnostic>,
) -> Model {
    let mut seen: HashMap<String, SourceSpan> = HashMap::new();
    let mut blocks: Vec<RawBlock> = Vec::new();
    for b in raw.blocks {
        if let Some(prev) = seen.get(&b.name.name) {
            diags.push(
                Diagnostic::new(
                    "P-104",
                    format!("duplicate block name `{}`", b.name.name),
                    b.name.span.clone(),
                )
                .with_related(prev.clone()),
            );
            continue;
        }
        seen.insert(b.name.name.clone(), b.name.span.clone());
        blocks.push(b);
    }
    let names: HashSet<&str> = blocks.iter().map(|b| b.name.name.as_str()).collect();

    for b in &blocks {
        let mut ml_count = 0;
        for st in &b.stereotypes {
            match profile.stereotype(&st.name) {
                None => diags.push(Diagnostic::new(
                    "P-102",
                    format!("unknown stereotype `{}`", st.name),
                    st.span.clone(),
                )),
                Some(def) if def.applies_to != AppliesTo::Block => diags.push(Diagnostic::new(
                    "P-103",
                    format!(
                        "stereotype `{}` applies to {}s, not blocks",
                        st.name,
                        def.applies_to.as_str()
                    ),
                    st.span.clone(),
                )),
                Some(_) => {
                    if profile.is_ml(&st.name) {
                        ml_count += 1;
                        if ml_count == 2 {
                            diags.push(Diagnostic::new(
                                "P-105",
                                format!(
                                    "block `{}` applies more than one ML stereotype",
                                    b.name.name
                                ),
                                st.span.clone(),
                            ));
                        }
                    }
                }
            }
        }
        for a in &b.attributes {
            let (Some(st), Some(span)) = (&a.attr.applied_stereotype, &a.stereotype_span) else {
                continue;
            };
            match profile.stereotype(st) {
                None => diags.push(Diagnostic::new(
                    "P-102",
                    format!("unknown stereotype `{st}`"),
                    span.clone(),
                )),
                Some(def) if def.applies_to != AppliesTo::Attribute => {
                    diags.push(Diagnostic::new(
                        "P-103",
                        format!(
                            "stereotype `{st}` applies to {}s, not attributes",
                            def.applies_to.as_str()
                        ),
                        span.clone(),
                    ))
                }
                Some(_) => {}
            }
        }
        if let Some(parent) = &b.parent {
            if !names.contains(parent.name.as_str()) {
                diags.push(Diagnostic::new(
                    "P-106",
                    format!("`{}` extends unknown block `{}`", b.name.name, parent.name),
                    parent.span.clone(),
                ));
            }
        }
        let mut input_names = HashSet::new();
        for input in &b.inputs {
            if input.block == b.name.name {
                diags.push(Diagnostic::new(
                    "P-107",
                    format!("block `{}` uses itself as input", b.name.name),
                    input.span.clone(),
                ));
            } else if !names.contains(input.block.as_str()) {
                diags.push(Diagnostic::new(
                    "P-106",
                    format!("input references unknown block `{}`", input.block),
                    input.span.clone(),
                ));
            } else if !input_names.insert(input.block.as_str()) {
                diags.push(Diagnostic::new(
                    "P-104",
                    format!("block `{}` is listed as input twice", input.block),
                    input.span.clone(),
                ));
            }
        }
        for r in &b.realizes {
            if !names.contains(r.name.as_str()) {
                diags.push(Diagnostic::new(
                    "P-106",
                    format!("`{}` realizes unknown block `{}`", b.name.name, r.name),
                    r.span.clone(),
                ));
            }
        }
    }

    let parents: HashMap<&str, &str> = blocks
        .iter()
        .filter_map(|b| b.parent.as_ref().map(|p| (b.name.name.as_str(), p.name.as_str())))
        .collect();
    for b in &blocks {
        let mut chain = vec![b.name.name.as_str()];
        let mut cur = parents.get(b.name.name.as_str()).copied();
        while let Some(p) = cur {
            if p == b.name.name {
                chain.push(p);
                diags.push(Diagnostic::new(
                    "P-112",
                    format!("inheritance cycle: {}", chain.join(" -> ")),
                    b.name.span.clone(),
                ));
                break;
            }
            if chain.contains(&p) {
                break;
            }
            chain.push(p);
            cur = parents.get(p).copied();
        }
    }

    let mut machines = Vec::new();
    let mut wf_names: HashMap<String, SourceSpan> = HashMap::new();
    for wf in raw.workflows {
        if let Some(prev) = wf_names.get(&wf.name.name) {
            diags.push(
                Diagnostic::new(
                    "P-104",
                    format!("duplicate workflow name `{}`", wf.name.name),
                    wf.name.span.clone(),
                )
                .with_related(prev.clone()),
            );
        }
        wf_names.insert(wf.name.name.clone(), wf.name.span.clone());
        let mut states: Vec<State> = Vec::new();
        for rs in wf.states {
            match profile.stereotype(&rs.state.stereotype) {
                None => diags.push(Diagnostic::new(
                    "P-102",
                    format!("unknown stereotype `{}`", rs.state.stereotype),
                    rs.stereotype_span.clone(),
                )),
                Some(def) if def.applies_to != AppliesTo::State => diags.push(Diagnostic::new(
                    "P-103",
                    format!(
                        "stereotype `{}` applies to {}s, not states",
                        rs.state.stereotype,
                        def.applies_to.as_str()
                    ),
                    rs.stereotype_span.clone(),
                )),
                Some(_) => {}
            }
            if !names.contains(rs.state.target_block.as_str()) {
                diags.push(Diagnostic::new(
                    "P-106",
                    format!("state targets unknown block `{}`", rs.state.target_block),
                    rs.target_span.clone(),
                ));
            }
            if states.iter().any(|s| s.name == rs.state.name) {
                diags.push(Diagnostic::new(
                    "P-104",
                    format!("duplicate state `{}`", rs.state.name),
                    rs.state.span.clone(),
                ));
                continue;
            }
            states.push(rs.state);
        }
        let known: HashSet<&str> = states.iter().map(|s| s.name.as_str()).collect();
        let mut unknown = |name: &str, span: &SourceSpan| {
            if !known.contains(name) {
                diags.push(Diagnostic::new(
                    "P-108",
                    format!("unknown state `{name}` in workflow `{}`", wf.name.name),
                    span.clone(),
                ));
            }
        };
        for t in &wf.transitions {
            unknown(&t.from, &t.span);
            unknown(&t.to, &t.span);
        }
        if let Some(init) = &wf.initial {
            unknown(&init.name, &init.span);
        }
        for f in &wf.finals {
            unknown(&f.name, &f.span);
        }
        machines.push(StateMachine {
            name: wf.name.name,
            states,
            transitions: wf.transitions,
            initial: wf.initial.map(|n| n.name),
            final_states: wf.finals.into_iter().map(|n| n.name).collect(),
            span: wf.name.span,
        });
    }

    let mut model = Model {
        name: raw.name,
        blocks: blocks
            .iter()
            .map(|b| {
                let mut block = Block::new(b.name.name.clone(), b.stage);
                block.applied_stereotypes = b.stereotypes.iter().map(|s| s.name.clone()).collect();
                block.attributes = b.attributes.iter().map(|a| a.attr.clone()).collect();
                block.parent_block = b.parent.as_ref().map(|p| p.name.clone());
                block.inputs = b.inputs.clone();
                block.realizes = b.realizes.iter().map(|r| r.name.clone()).collect();
                block.span = b.name.span.clone();
                block.value_spans = b
                    .bindings
                    .iter()
                    .map(|(k, _, s)| (k.clone(), s.clone()))
                    .collect();
                block
            })
            .collect(),
        state_machines: machines,
        profile_ref: raw.profile_ref,
        file: file.to_string(),
    };

    let classified: Vec<_> = blocks
        .iter()
        .map(|b| {
            let stereotypes = model.effective_stereotypes(&b.name.name);
            classify_values(
                profile,
                &stereotypes,
                b.bindings.iter().map(|(k, v, _)| (k.clone(), v.clone())),
            )
        })
        .collect();
    for (block, (st, opt)) in model.blocks.iter_mut().zip(classified) {
        block.stereotype_values = st;
        block.optional_values = opt;
    }
    model.blocks.sort_by_key(|b| b.stage);
    model
}

/// Canonical source text. `parse_model(format_model(m))` reproduces `m`
/// up to spans.
pub fn format_model(model: &Model) -> String {
    let mut out = String::new();
    if !model.name.is_empty() {
        let _ = write!(out, "model {}", model.name);
        if let Some(p) = &model.profile_ref {
            let _ = write!(out, " profile {}", Literal::Str(p.clone()));
        }
        out.push_str(";\n\n");
    }
    for (i, stage) in Stage::ALL.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "stage {} {{", stage.as_str());
        for block in model.blocks.iter().filter(|b| b.stage == stage) {
            format_block(&mut out, block);
        }
        if stage == Stage::Workflow {
            for sm in &model.state_machines {
                format_workflow(&mut out, sm);
            }
        }
        out.push_str("}\n");
    }
    out
}

fn format_block(out: &mut String, block: &Block) {
    let _ = write!(out, "  block {}", block.name);
    if !block.applied_stereotypes.is_empty() {
        let _ = write!(out, " : {}", block.applied_stereotypes.join(", "));
    }
    if let Some(p) = &block.parent_block {
        let _ = write!(out, " extends {p}");
    }
    out.push_str(" {\n");
    for (k, v) in block.values() {
        let _ = writeln!(out, "    {k} = {v};");
    }
    for a in &block.attributes {
        let _ = write!(out, "    attr {}: {}", a.name, a.declared_type.as_str());
        if let Some(st) = &a.applied_stereotype {
            let _ = write!(out, " @{st}");
            if !a.stereotype_values.is_empty() {
                let args: Vec<String> = a
                    .stereotype_values
                    .iter()
                    .map(|(k, v)| format!("{k} = {v}"))
                    .collect();
                let _ = write!(out, "({})", args.join(", "));
            }
        }
        out.push_str(";\n");
    }
    for i in &block.inputs {
        let _ = write!(out, "    input {} {}", i.kind.as_str(), i.block);
        if i.multiplicity != "1" {
            let _ = write!(out, " [{}]", i.multiplicity);
        }
        out.push_str(";\n");
    }
    if !block.realizes.is_empty() {
        let _ = writeln!(out, "    realizes {};", block.realizes.join(", "));
    }
    out.push_str("  }\n");
}

fn format_workflow(out: &mut String, sm: &StateMachine) {
    let _ = writeln!(out, "  workflow {} {{", sm.name);
    for s in &sm.states {
        if s.stereotype == STATE_ROOT {
            let _ = writeln!(out, "    state {} -> block {};", s.name, s.target_block);
        } else {
            let _ = writeln!(
                out,
                "    state {} : {} -> block {};",
                s.name, s.stereotype, s.target_block
            );
        }
    }
    for t in &sm.transitions {
        let _ = writeln!(out, "    {} -> {};", t.from, t.to);
    }
    if let Some(init) = &sm.initial {
        let _ = writeln!(out, "    initial {init};");
    }
    if !sm.final_states.is_empty() {
        let _ = writeln!(out, "    final {};", sm.final_states.join(", "));
    }
    out.push_str("  }\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::default_registry;

    fn codes(src: &str) -> Vec<&'static str> {
        let reg = default_registry();
        parse_model(src, &reg)
            .diagnostics
            .iter()
            .map(|d| d.code)
            .collect()
    }

    #[test]
    fn empty_file_gives_empty_model() {
        let reg = default_registry();
        let r = parse_model("", &reg);
        assert!(r.diagnostics.is_empty());
        let m = r.model.unwrap();
        assert!(m.blocks.is_empty() && m.state_machines.is_empty());
    }

    #[test]
    fn empty_model_formats_as_stage_headers() {
        let text = format_model(&Model::default());
        assert_eq!(text.matches("stage ").count(), 6);
        assert!(!text.contains("block"));
        let reg = default_registry();
        let again = parse_model(&text, &reg).model.unwrap();
        assert_eq!(again.without_spans(), Model::default());
    }

    #[test]
    fn bindings_are_classified_by_mandatory_attributes() {
        let reg = default_registry();
        let src = r#"
            stage DataUnderstanding {
              block C : CSV { file = "a.csv"; Encoding = "UTF-8"; Delimiter = ";"; attr d: String @Datetime(format = "%d.%m.%Y"); }
            }
            stage PreProcessing {
              block F : DateConversion { format = "%Y-%m-%d"; input part C; }
              block F2 extends F { format = "%Y"; utc = true; }
            }"#;
        let m = parse_model(src, &reg).model.unwrap();
        let f2 = m.block("F2").unwrap();
        assert!(f2.stereotype_values.contains_key("format"));
        assert!(f2.optional_values.contains_key("utc"));
        assert_eq!(m.block("C").unwrap().stereotype_values.len(), 3);
    }

    #[test]
    fn unknown_stereotype_has_span() {
        let reg = default_registry();
        let r = parse_model("stage DataUnderstanding {\n  block X : CVS { }\n}", &reg);
        assert!(r.model.is_none());
        assert_eq!(r.diagnostics.len(), 1);
        let d = &r.diagnostics[0];
        assert_eq!(d.code, "P-102");
        assert_eq!((d.span.line, d.span.column, d.span.length), (2, 13, 3));
    }

    #[test]
    fn reference_errors() {
        assert_eq!(
            codes("stage PreProcessing { block A : Datetime { } }"),
            vec!["P-103"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A : DateConversion, MAE { } }"),
            vec!["P-105"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A { input part B; } }"),
            vec!["P-106"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A { input part A; } }"),
            vec!["P-107"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A extends B { } block B extends A { } }"),
            vec!["P-112", "P-112"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A { } block A { } }"),
            vec!["P-104"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A { attr x: Text; } }"),
            vec!["P-113"]
        );
        assert_eq!(
            codes("stage PreProcessing { block A { input part B [3..1]; } block B { } }"),
            vec!["P-110"]
        );
        assert_eq!(
            codes("stage Modeling { workflow W { } }"),
            vec!["P-111"]
        );
        assert_eq!(
            codes("stage Workflow { workflow W { initial S; } }"),
            vec!["P-108"]
        );
    }

    #[test]
    fn recovers_from_multiple_syntax_errors() {
        let src = "stage PreProcessing {\n\
                   block A { x = ; y = 1; }\n\
                   block B { input bogus A; }\n\
                   block C { attr : String; }\n\
                   }\n\
                   stage Nope { }\n\
                   stage Modeling { block D { z = \"open; } }";
        let r = parse_model(src, &default_registry());
        assert!(r.diagnostics.len() >= 5, "{:#?}", r.diagnostics);
    }

    #[test]
    fn multiplicity_and_shared_inputs_round_trip() {
        let reg = default_registry();
        let src = "stage PreProcessing { block A { } block B { input shared A [0..*]; } }";
        let m = parse_model(src, &reg).model.unwrap();
        let input = &m.block("B").unwrap().inputs[0];
        assert_eq!(input.kind, AssociationKind::Shared);
        assert_eq!(input.multiplicity, "0..*");
        let text = format_model(&m);
        assert!(text.contains("input shared A [0..*];"));
        assert_eq!(
            parse_model(&text, &reg).model.unwrap().without_spans(),
            m.without_spans()
        );
    }

    #[test]
    fn blocks_are_grouped_by_stage() {
        let reg = default_registry();
        let src = "stage Modeling { block M { } } stage DataUnderstanding { block D { } }";
        let m = parse_model(src, &reg).model.unwrap();
        let names: Vec<_> = m.blocks.iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, vec!["D", "M"]);
    }

    #[test]
    fn keywords_may_be_binding_keys() {
        let reg = default_registry();
        let src = "stage Modeling { block M { input = 1; attr = \"x\"; } }";
        let m = parse_model(src, &reg).model.unwrap();
        assert_eq!(m.blocks[0].optional_values.len(), 2);
    }
}
