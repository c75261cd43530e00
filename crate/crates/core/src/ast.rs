//! In-memory model: stage packages, blocks, attributes, associations and
//! workflow state machines.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::literal::Literal;
use crate::profile::StereotypeRegistry;

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based.
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Stage {
    BusinessUnderstanding,
    DataUnderstanding,
    PreProcessing,
    Modeling,
    Evaluation,
    Workflow,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::BusinessUnderstanding,
        Stage::DataUnderstanding,
        Stage::PreProcessing,
        Stage::Modeling,
        Stage::Evaluation,
        Stage::Workflow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::BusinessUnderstanding => "BusinessUnderstanding",
            Stage::DataUnderstanding => "DataUnderstanding",
            Stage::PreProcessing => "PreProcessing",
            Stage::Modeling => "Modeling",
            Stage::Evaluation => "Evaluation",
            Stage::Workflow => "Workflow",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    String,
    Integer,
    Float,
    Boolean,
    Datetime,
    Image,
}

impl DataType {
    pub const ALL: [DataType; 6] = [
        DataType::String,
        DataType::Integer,
        DataType::Float,
        DataType::Boolean,
        DataType::Datetime,
        DataType::Image,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DataType::String => "String",
            DataType::Integer => "Integer",
            DataType::Float => "Float",
            DataType::Boolean => "Boolean",
            DataType::Datetime => "Datetime",
            DataType::Image => "Image",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AssociationKind {
    Part,
    Shared,
}

impl AssociationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AssociationKind::Part => "part",
            AssociationKind::Shared => "shared",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Input {
    pub block: String,
    pub kind: AssociationKind,
    /// Literal multiplicity as written ("1", "0..2", "*").
    pub multiplicity: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockAttribute {
    pub name: String,
    pub declared_type: DataType,
    pub applied_stereotype: Option<String>,
    pub stereotype_values: BTreeMap<String, Literal>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub name: String,
    pub stage: Stage,
    pub applied_stereotypes: Vec<String>,
    /// Bindings for mandatory attributes of the applied stereotypes.
    pub stereotype_values: BTreeMap<String, Literal>,
    /// Every other binding: declared optional parameters and block-local extras.
    pub optional_values: BTreeMap<String, Literal>,
    pub attributes: Vec<BlockAttribute>,
    pub parent_block: Option<String>,
    pub inputs: Vec<Input>,
    pub realizes: Vec<String>,
    pub span: SourceSpan,
    /// Span of each binding, keyed like the value maps.
    pub value_spans: BTreeMap<String, SourceSpan>,
}

impl Block {
    pub fn new(name: impl Into<String>, stage: Stage) -> Self {
        Self {
            name: name.into(),
            stage,
            applied_stereotypes: Vec::new(),
            stereotype_values: BTreeMap::new(),
            optional_values: BTreeMap::new(),
            attributes: Vec::new(),
            parent_block: None,
            inputs: Vec::new(),
            realizes: Vec::new(),
            span: SourceSpan::default(),
            value_spans: BTreeMap::new(),
        }
    }

    /// A binding from either value map.
    pub fn value(&self, key: &str) -> Option<&Literal> {
        self.stereotype_values
            .get(key)
            .or_else(|| self.optional_values.get(key))
    }

    /// All bindings, stereotype values first.
    pub fn values(&self) -> impl Iterator<Item = (&String, &Literal)> {
        self.stereotype_values.iter().chain(self.optional_values.iter())
    }

    pub fn value_span(&self, key: &str) -> &SourceSpan {
        self.value_spans.get(key).unwrap_or(&self.span)
    }

    pub fn attribute(&self, name: &str) -> Option<&BlockAttribute> {
        self.attributes.iter().find(|a| a.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub name: String,
    pub stereotype: String,
    pub target_block: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub from: String,
    pub to: String,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMachine {
    pub name: String,
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
    /// `None` when the workflow declares no initial state.
    pub initial: Option<String>,
    pub final_states: Vec<String>,
    pub span: SourceSpan,
}

impl StateMachine {
    pub fn state(&self, name: &str) -> Option<&State> {
        self.states.iter().find(|s| s.name == name)
    }

    pub fn successors<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.transitions
            .iter()
            .filter(move |t| t.from == state)
            .map(|t| t.to.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Model {
    pub name: String,
    /// Blocks grouped by stage in canonical stage order, declaration order
    /// within a stage.
    pub blocks: Vec<Block>,
    pub state_machines: Vec<StateMachine>,
    pub profile_ref: Option<String>,
    /// Source file the model was parsed from.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("block `{0}` not found")]
    NotFound(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("block inheritance cycle: {}", .0.join(" -> "))]
    InheritanceCycle(Vec<String>),
}

impl Model {
    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn block_index(&self, name: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.name == name)
    }

    /// Parent chain starting at `name` (child first).
    pub fn parent_chain(&self, name: &str) -> Result<Vec<&Block>, AstError> {
        let mut chain = vec![self
            .block(name)
            .ok_or_else(|| AstError::UnknownBlock(name.to_string()))?];
        while let Some(parent) = chain.last().and_then(|b| b.parent_block.as_deref()) {
            if let Some(at) = chain.iter().position(|b| b.name == parent) {
                let mut cycle: Vec<String> = chain[at..].iter().map(|b| b.name.clone()).collect();
                cycle.push(parent.to_string());
                return Err(AstError::InheritanceCycle(cycle));
            }
            chain.push(
                self.block(parent)
                    .ok_or_else(|| AstError::UnknownBlock(parent.to_string()))?,
            );
        }
        Ok(chain)
    }

    /// Applied stereotypes after inheritance: the nearest block in the parent
    /// chain that applies any stereotype supplies them.
    pub fn effective_stereotypes(&self, name: &str) -> Vec<String> {
        let mut current = self.block(name);
        let mut seen = BTreeSet::new();
        while let Some(block) = current {
            if !block.applied_stereotypes.is_empty() {
                return block.applied_stereotypes.clone();
            }
            if !seen.insert(block.name.as_str()) {
                break;
            }
            current = block.parent_block.as_deref().and_then(|p| self.block(p));
        }
        Vec::new()
    }

    /// Copy with every span and the file name cleared, for structural comparison.
    pub fn without_spans(&self) -> Model {
        let clear = SourceSpan::default;
        let mut m = self.clone();
        m.file.clear();
        for b in &mut m.blocks {
            b.span = clear();
            b.value_spans.clear();
            for a in &mut b.attributes {
                a.span = clear();
            }
            for i in &mut b.inputs {
                i.span = clear();
            }
        }
        for sm in &mut m.state_machines {
            sm.span = clear();
            for s in &mut sm.states {
                s.span = clear();
            }
            for t in &mut sm.transitions {
                t.span = clear();
            }
        }
        m
    }

    /// Every span in the model, for span sanity checks.
    pub fn spans(&self) -> Vec<&SourceSpan> {
        let mut out = Vec::new();
        for b in &self.blocks {
            out.push(&b.span);
            out.extend(b.value_spans.values());
            out.extend(b.attributes.iter().map(|a| &a.span));
            out.extend(b.inputs.iter().map(|i| &i.span));
        }
        for sm in &self.state_machines {
            out.push(&sm.span);
            out.extend(sm.states.iter().map(|s| &s.span));
            out.extend(sm.transitions.iter().map(|t| &t.span));
        }
        out
    }
}

pub fn lookup_block<'m>(model: &'m Model, name: &str) -> Result<&'m Block, AstError> {
    model
        .block(name)
        .ok_or_else(|| AstError::NotFound(name.to_string()))
}

/// Names of attributes that are mandatory for any of `stereotypes`.
pub fn mandatory_keys(registry: &StereotypeRegistry, stereotypes: &[String]) -> BTreeSet<String> {
    stereotypes
        .iter()
        .filter_map(|s| registry.effective_attributes(s).ok())
        .flatten()
        .filter(|spec| spec.mandatory)
        .map(|spec| spec.name)
        .collect()
}

/// Splits bindings into mandatory stereotype values and optional values.
pub fn classify_values(
    registry: &StereotypeRegistry,
    stereotypes: &[String],
    values: impl IntoIterator<Item = (String, Literal)>,
) -> (BTreeMap<String, Literal>, BTreeMap<String, Literal>) {
    let mandatory = mandatory_keys(registry, stereotypes);
    let (mut st, mut opt) = (BTreeMap::new(), BTreeMap::new());
    for (k, v) in values {
        if mandatory.contains(&k) {
            st.insert(k, v);
        } else {
            opt.insert(k, v);
        }
    }
    (st, opt)
}

/// Resolves block inheritance: the result carries the parent chain's values,
/// attributes, inputs and realizations overlaid with each descendant's
/// overrides and additions.
pub fn effective_block(
    model: &Model,
    registry: &StereotypeRegistry,
    name: &str,
) -> Result<Block, AstError> {
    let chain = model.parent_chain(name)?;
    let mut iter = chain.into_iter().rev();
    let mut acc = iter.next().expect("chain is non-empty").clone();
    for child in iter {
        acc = overlay(acc, child);
    }
    let all: Vec<(String, Literal)> = acc
        .stereotype_values
        .iter()
        .chain(acc.optional_values.iter())
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    let (st, opt) = classify_values(registry, &acc.applied_stereotypes, all);
    acc.stereotype_values = st;
    acc.optional_values = opt;
    Ok(acc)
}

fn overlay(base: Block, child: &Block) -> Block {
    let mut out = base;
    out.name = child.name.clone();
    out.stage = child.stage;
    out.span = child.span.clone();
    out.parent_block = child.parent_block.clone();
    if !child.applied_stereotypes.is_empty() {
        out.applied_stereotypes = child.applied_stereotypes.clone();
    }
    for (k, v) in child.values() {
        out.stereotype_values.remove(k);
        out.optional_values.insert(k.clone(), v.clone());
    }
    out.value_spans.extend(child.value_spans.clone());
    for attr in &child.attributes {
        match out.attributes.iter_mut().find(|a| a.name == attr.name) {
            Some(slot) => *slot = attr.clone(),
            None => out.attributes.push(attr.clone()),
        }
    }
    for input in &child.inputs {
        match out.inputs.iter_mut().find(|i| i.block == input.block) {
            Some(slot) => *slot = input.clone(),
            None => out.inputs.push(input.clone()),
        }
    }
    for r in &child.realizes {
        if !out.realizes.contains(r) {
            out.realizes.push(r.clone());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::default_registry;

    fn lit(s: &str) -> Literal {
        Literal::Str(s.into())
    }

    fn chain_model() -> Model {
        let mut root = Block::new("A", Stage::PreProcessing);
        root.applied_stereotypes = vec!["DateConversion".into()];
        root.stereotype_values.insert("format".into(), lit("%Y"));
        root.optional_values.insert("utc".into(), Literal::Bool(false));
        let mut mid = Block::new("B", Stage::PreProcessing);
        mid.parent_block = Some("A".into());
        mid.optional_values.insert("format".into(), lit("%m"));
        let mut leaf = Block::new("C", Stage::PreProcessing);
        leaf.parent_block = Some("B".into());
        leaf.optional_values.insert("format".into(), lit("%d"));
        leaf.optional_values.insert("utc".into(), Literal::Bool(true));
        Model {
            blocks: vec![root, mid, leaf],
            ..Model::default()
        }
    }

    #[test]
    fn deepest_override_wins() {
        let reg = default_registry();
        let m = chain_model();
        let c = effective_block(&m, &reg, "C").unwrap();
        assert_eq!(c.applied_stereotypes, vec!["DateConversion".to_string()]);
        assert_eq!(c.stereotype_values.get("format"), Some(&lit("%d")));
        assert_eq!(c.optional_values.get("utc"), Some(&Literal::Bool(true)));
        assert!(!c.optional_values.contains_key("format"));
    }

    #[test]
    fn resolution_is_a_fixpoint() {
        let reg = default_registry();
        let m = chain_model();
        let resolved = effective_block(&m, &reg, "C").unwrap();
        let mut m2 = m.clone();
        m2.blocks[2] = resolved.clone();
        assert_eq!(effective_block(&m2, &reg, "C").unwrap(), resolved);
    }

    #[test]
    fn parentless_block_is_unchanged() {
        let reg = default_registry();
        let m = chain_model();
        assert_eq!(effective_block(&m, &reg, "A").unwrap(), m.blocks[0]);
    }

    #[test]
    fn cycles_and_unknowns() {
        let reg = default_registry();
        let mut m = chain_model();
        m.blocks[0].parent_block = Some("C".into());
        assert!(matches!(
            effective_block(&m, &reg, "C"),
            Err(AstError::InheritanceCycle(_))
        ));
        assert_eq!(
            effective_block(&m, &reg, "Z"),
            Err(AstError::UnknownBlock("Z".into()))
        );
    }

    #[test]
    fn lookup_is_case_sensitive() {
        let m = chain_model();
        assert!(lookup_block(&m, "A").is_ok());
        assert_eq!(lookup_block(&m, "a"), Err(AstError::NotFound("a".into())));
        assert!(lookup_block(&Model::default(), "A").is_err());
    }
}
