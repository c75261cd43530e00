//! Stereotype profiles: loading, resolution and queries.
//!
//! A profile is a text file of `enum` and `stereotype` declarations (see
//! `docs/grammar.md`). Loading checks that every reference resolves, that the
//! inheritance graph is acyclic, and that each stereotype descends from the
//! root for its metaclass: `ML` for blocks, `Method_Attribute_Input` for
//! attributes and `ML_Block_Connection` for workflow states.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::datetime;
use crate::lexer::{tokenize, TokenKind};
use crate::literal::Literal;
use crate::syntax::{Cursor, SyntaxError, SyntaxResult};

pub const BLOCK_ROOT: &str = "ML";
pub const ATTRIBUTE_ROOT: &str = "Method_Attribute_Input";
pub const STATE_ROOT: &str = "ML_Block_Connection";
pub const CUSTOM_CODE: &str = "CustomCode";

/// The shipped default profile.
pub const DEFAULT_PROFILE: &str = include_str!("../assets/default.profile");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Package {
    Common,
    Attributes,
    DataStorage,
    Algorithm,
    PreProcessing,
    AlgorithmWorkflow,
}

impl Package {
    pub const ALL: [Package; 6] = [
        Package::Common,
        Package::Attributes,
        Package::DataStorage,
        Package::Algorithm,
        Package::PreProcessing,
        Package::AlgorithmWorkflow,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Package::Common => "Common",
            Package::Attributes => "Attributes",
            Package::DataStorage => "DataStorage",
            Package::Algorithm => "Algorithm",
            Package::PreProcessing => "PreProcessing",
            Package::AlgorithmWorkflow => "AlgorithmWorkflow",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.as_str() == s)
    }
}

impl fmt::Display for Package {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AppliesTo {
    Block,
    Attribute,
    State,
}

impl AppliesTo {
    pub fn as_str(self) -> &'static str {
        match self {
            AppliesTo::Block => "block",
            AppliesTo::Attribute => "attribute",
            AppliesTo::State => "state",
        }
    }

    fn root(self) -> &'static str {
        match self {
            AppliesTo::Block => BLOCK_ROOT,
            AppliesTo::Attribute => ATTRIBUTE_ROOT,
            AppliesTo::State => STATE_ROOT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimitiveKind {
    Int,
    Float,
    String,
    Bool,
    DatetimeFormat,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrKind {
    Primitive(PrimitiveKind),
    EnumRef(String),
    StereotypeRef(String),
    ListOf(Box<AttrKind>),
}

impl fmt::Display for AttrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrKind::Primitive(PrimitiveKind::Int) => f.write_str("int"),
            AttrKind::Primitive(PrimitiveKind::Float) => f.write_str("float"),
            AttrKind::Primitive(PrimitiveKind::String) => f.write_str("string"),
            AttrKind::Primitive(PrimitiveKind::Bool) => f.write_str("bool"),
            AttrKind::Primitive(PrimitiveKind::DatetimeFormat) => f.write_str("datetime-format"),
            AttrKind::EnumRef(n) => write!(f, "enum<{n}>"),
            AttrKind::StereotypeRef(n) => write!(f, "ref<{n}>"),
            AttrKind::ListOf(k) => write!(f, "list<{k}>"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeSpec {
    pub name: String,
    pub kind: AttrKind,
    pub mandatory: bool,
    pub default: Option<Literal>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StereotypeDef {
    pub name: String,
    pub package: Package,
    /// Sub-package path below `package`, e.g. `["Evaluation"]` for
    /// `Algorithm.Evaluation`.
    pub subpackage: Vec<String>,
    pub parent: Option<String>,
    pub is_abstract: bool,
    pub blackbox: bool,
    pub applies_to: AppliesTo,
    pub attributes: Vec<AttributeSpec>,
}

impl StereotypeDef {
    pub fn package_path(&self) -> String {
        let mut path = self.package.as_str().to_string();
        for seg in &self.subpackage {
            path.push('.');
            path.push_str(seg);
        }
        path
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationDef {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProfileError {
    #[error("profile syntax error at {line}:{column}: {message}")]
    Parse {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("stereotype inheritance cycle: {}", chain.join(" -> "))]
    Cycle { chain: Vec<String> },
    #[error("unresolved reference `{name}` in `{referenced_by}`")]
    UnresolvedRef { name: String, referenced_by: String },
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown stereotype `{0}`")]
    UnknownStereotype(String),
    #[error("invalid definition of `{name}`: {reason}")]
    Invalid { name: String, reason: String },
}

impl From<SyntaxError> for ProfileError {
    fn from(e: SyntaxError) -> Self {
        ProfileError::Parse {
            message: e.message,
            line: e.pos.line,
            column: e.pos.column,
        }
    }
}

/// Outcome of checking a literal against an attribute kind.
#[derive(Debug, Clone, PartialEq)]
pub enum LiteralCheck {
    Ok,
    /// The literal has the wrong shape for the kind.
    KindMismatch(String),
    /// An enumeration-typed value outside its enumeration.
    NotInEnum { value: String, enumeration: String },
}

/// A loaded, fully resolved profile. Immutable after [`load_profile`].
#[derive(Debug, Clone)]
pub struct StereotypeRegistry {
    stereotypes: IndexMap<String, StereotypeDef>,
    enumerations: IndexMap<String, EnumerationDef>,
    digest: String,
}

impl StereotypeRegistry {
    pub fn len(&self) -> usize {
        self.stereotypes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stereotypes.is_empty()
    }

    /// `sha256:<hex>` of the profile source text.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn stereotype(&self, name: &str) -> Option<&StereotypeDef> {
        self.stereotypes.get(name)
    }

    pub fn enumeration(&self, name: &str) -> Option<&EnumerationDef> {
        self.enumerations.get(name)
    }

    pub fn stereotypes(&self) -> impl Iterator<Item = &StereotypeDef> {
        self.stereotypes.values()
    }

    pub fn enumerations(&self) -> impl Iterator<Item = &EnumerationDef> {
        self.enumerations.values()
    }

    /// Stereotype names grouped by top-level package. All six packages are
    /// present, possibly empty.
    pub fn packages(&self) -> BTreeMap<Package, Vec<&str>> {
        let mut map: BTreeMap<Package, Vec<&str>> =
            Package::ALL.iter().map(|&p| (p, Vec::new())).collect();
        for st in self.stereotypes.values() {
            map.entry(st.package).or_default().push(&st.name);
        }
        map
    }

    fn get(&self, name: &str) -> Result<&StereotypeDef, ProfileError> {
        self.stereotypes
            .get(name)
            .ok_or_else(|| ProfileError::UnknownStereotype(name.to_string()))
    }

    /// The stereotype itself followed by its ancestors, nearest first.
    pub fn ancestors(&self, name: &str) -> Result<Vec<&StereotypeDef>, ProfileError> {
        let mut chain = vec![self.get(name)?];
        while let Some(parent) = chain.last().and_then(|s| s.parent.as_deref()) {
            chain.push(self.get(parent)?);
        }
        Ok(chain)
    }

    /// Attribute specs along the ancestor chain. The nearest declaration of a
    /// name wins; order is root first, then declaration order.
    pub fn effective_attributes(&self, name: &str) -> Result<Vec<AttributeSpec>, ProfileError> {
        let chain = self.ancestors(name)?;
        let mut merged: Vec<AttributeSpec> = Vec::new();
        for st in chain.iter().rev() {
            for spec in &st.attributes {
                match merged.iter_mut().find(|m| m.name == spec.name) {
                    Some(slot) => *slot = spec.clone(),
                    None => merged.push(spec.clone()),
                }
            }
        }
        Ok(merged)
    }

    /// True iff `a == b` or `b` is an ancestor of `a`.
    pub fn is_descendant(&self, a: &str, b: &str) -> Result<bool, ProfileError> {
        self.get(b)?;
        Ok(self.ancestors(a)?.iter().any(|s| s.name == b))
    }

    /// Like [`is_descendant`](Self::is_descendant) but unknown names yield `false`.
    pub fn descends(&self, a: &str, b: &str) -> bool {
        self.is_descendant(a, b).unwrap_or(false)
    }

    pub fn is_blackbox(&self, name: &str) -> bool {
        self.ancestors(name)
            .map(|chain| chain.iter().any(|s| s.blackbox))
            .unwrap_or(false)
    }

    /// Block stereotype descending from `ML`.
    pub fn is_ml(&self, name: &str) -> bool {
        self.stereotypes
            .get(name)
            .is_some_and(|s| s.applies_to == AppliesTo::Block)
            && self.descends(name, BLOCK_ROOT)
    }

    /// Declared in (or descending from a stereotype declared in) `DataStorage`.
    pub fn is_data_source(&self, name: &str) -> bool {
        self.ancestors(name)
            .is_ok_and(|chain| chain.iter().any(|s| s.package == Package::DataStorage))
    }

    /// Checks a literal against an attribute kind. Enumeration membership is
    /// reported separately from shape mismatches.
    pub fn check_literal(&self, kind: &AttrKind, lit: &Literal) -> LiteralCheck {
        match (kind, lit) {
            (AttrKind::Primitive(PrimitiveKind::Int), Literal::Int(_))
            | (AttrKind::Primitive(PrimitiveKind::Float), Literal::Int(_) | Literal::Float(_))
            | (AttrKind::Primitive(PrimitiveKind::String), Literal::Str(_))
            | (AttrKind::Primitive(PrimitiveKind::Bool), Literal::Bool(_))
            | (AttrKind::StereotypeRef(_), Literal::Str(_)) => LiteralCheck::Ok,
            (AttrKind::Primitive(PrimitiveKind::DatetimeFormat), Literal::Str(s)) => {
                match datetime::validate_format(s) {
                    Ok(()) => LiteralCheck::Ok,
                    Err(e) => LiteralCheck::KindMismatch(e.to_string()),
                }
            }
            (AttrKind::EnumRef(e), Literal::Str(s)) => {
                let known = self
                    .enumerations
                    .get(e)
                    .is_some_and(|def| def.values.iter().any(|v| v == s));
                if known {
                    LiteralCheck::Ok
                } else {
                    LiteralCheck::NotInEnum {
                        value: s.clone(),
                        enumeration: e.clone(),
                    }
                }
            }
            (AttrKind::ListOf(inner), Literal::List(items)) => {
                let mut not_in_enum = None;
                for item in items {
                    match self.check_literal(inner, item) {
                        LiteralCheck::Ok => {}
                        LiteralCheck::KindMismatch(m) => return LiteralCheck::KindMismatch(m),
                        e @ LiteralCheck::NotInEnum { .. } => {
                            not_in_enum.get_or_insert(e);
                        }
                    }
                }
                not_in_enum.unwrap_or(LiteralCheck::Ok)
            }
            (kind, lit) => LiteralCheck::KindMismatch(format!("expected {kind}, found {lit}")),
        }
    }
}

/// Parses and resolves a profile document.
pub fn load_profile(document: &str) -> Result<StereotypeRegistry, ProfileError> {
    let (stereotypes, enumerations) = parse_profile(document)?;
    let digest = format!("sha256:{:x}", Sha256::digest(document.as_bytes()));
    let registry = StereotypeRegistry {
        stereotypes,
        enumerations,
        digest,
    };
    resolve(&registry)?;
    Ok(registry)
}

/// Loads the shipped default profile.
pub fn default_registry() -> StereotypeRegistry {
    load_profile(DEFAULT_PROFILE).expect("shipped default profile is valid")
}

type Parsed = (
    IndexMap<String, StereotypeDef>,
    IndexMap<String, EnumerationDef>,
);

fn parse_profile(document: &str) -> Result<Parsed, ProfileError> {
    let (tokens, lex_errors) = tokenize(document);
    if let Some(e) = lex_errors.into_iter().next() {
        return Err(ProfileError::Parse {
            message: e.message,
            line: e.pos.line,
            column: e.pos.column,
        });
    }
    let mut cur = Cursor::new(tokens);
    let mut stereotypes = IndexMap::new();
    let mut enumerations = IndexMap::new();
    let mut names = HashSet::new();
    while !cur.at_eof() {
        if cur.eat_word("enum") {
            let def = parse_enum(&mut cur)?;
            if !names.insert(def.name.clone()) {
                return Err(ProfileError::DuplicateName(def.name));
            }
            enumerations.insert(def.name.clone(), def);
        } else if cur.eat_word("stereotype") {
            let def = parse_stereotype(&mut cur)?;
            if !names.insert(def.name.clone()) {
                return Err(ProfileError::DuplicateName(def.name));
            }
            stereotypes.insert(def.name.clone(), def);
        } else {
            return Err(cur.error_here("`stereotype` or `enum`").into());
        }
    }
    Ok((stereotypes, enumerations))
}

fn parse_enum(cur: &mut Cursor) -> SyntaxResult<EnumerationDef> {
    let (name, _) = cur.expect_ident("enumeration name")?;
    cur.expect_punct('{')?;
    let mut values = Vec::new();
    while !cur.at_punct('}') {
        let tok = cur.bump();
        match tok.kind {
            TokenKind::Word(w) | TokenKind::Str(w) => values.push(w),
            other => {
                return Err(SyntaxError {
                    message: format!("expected enumeration value, found {other}"),
                    pos: tok.pos,
                })
            }
        }
        if !cur.eat_punct(',') {
            break;
        }
    }
    cur.expect_punct('}')?;
    Ok(EnumerationDef { name, values })
}

fn parse_stereotype(cur: &mut Cursor) -> Result<StereotypeDef, ProfileError> {
    let (name, _) = cur.expect_ident("stereotype name")?;
    cur.expect_word("in")?;
    let (root, root_pos) = cur.expect_ident("package name")?;
    let package = Package::from_name(&root).ok_or_else(|| ProfileError::Parse {
        message: format!(
            "unknown package `{root}`; expected one of {}",
            Package::ALL.map(Package::as_str).join(", ")
        ),
        line: root_pos.line,
        column: root_pos.column,
    })?;
    let mut subpackage = Vec::new();
    while cur.eat_punct('.') {
        subpackage.push(cur.expect_ident("package segment")?.0);
    }
    let parent = if cur.eat_word("extends") {
        Some(cur.expect_ident("parent stereotype")?.0)
    } else {
        None
    };
    let (mut is_abstract, mut blackbox) = (false, false);
    loop {
        if cur.eat_word("abstract") {
            is_abstract = true;
        } else if cur.eat_word("blackbox") {
            blackbox = true;
        } else {
            break;
        }
    }
    cur.expect_word("applies-to")?;
    let applies_to = if cur.eat_word("block") {
        AppliesTo::Block
    } else if cur.eat_word("attribute") {
        AppliesTo::Attribute
    } else if cur.eat_word("state") {
        AppliesTo::State
    } else {
        return Err(cur.error_here("`block`, `attribute` or `state`").into());
    };
    cur.expect_punct('{')?;
    let mut attributes: Vec<AttributeSpec> = Vec::new();
    while cur.eat_word("attr") {
        let (attr_name, _) = cur.expect_ident("attribute name")?;
        cur.expect_punct(':')?;
        let kind = parse_kind(cur)?;
        let mandatory = cur.eat_word("mandatory");
        let default = if cur.eat_punct('=') {
            Some(cur.literal()?.0)
        } else {
            None
        };
        cur.expect_punct(';')?;
        if attributes.iter().any(|a| a.name == attr_name) {
            return Err(ProfileError::DuplicateName(format!("{name}.{attr_name}")));
        }
        attributes.push(AttributeSpec {
            name: attr_name,
            kind,
            mandatory,
            default,
        });
    }
    cur.expect_punct('}')?;
    Ok(StereotypeDef {
        name,
        package,
        subpackage,
        parent,
        is_abstract,
        blackbox,
        applies_to,
        attributes,
    })
}

fn parse_kind(cur: &mut Cursor) -> SyntaxResult<AttrKind> {
    let tok = cur.bump();
    let word = match tok.kind {
        TokenKind::Word(w) => w,
        other => {
            return Err(SyntaxError {
                message: format!("expected attribute kind, found {other}"),
                pos: tok.pos,
            })
        }
    };
    let kind = match word.as_str() {
        "int" => AttrKind::Primitive(PrimitiveKind::Int),
        "float" => AttrKind::Primitive(PrimitiveKind::Float),
        "string" => AttrKind::Primitive(PrimitiveKind::String),
        "bool" => AttrKind::Primitive(PrimitiveKind::Bool),
        "datetime-format" => AttrKind::Primitive(PrimitiveKind::DatetimeFormat),
        "enum" | "ref" => {
            cur.expect_punct('<')?;
            let (target, _) = cur.expect_ident("type name")?;
            cur.expect_punct('>')?;
            if word == "enum" {
                AttrKind::EnumRef(target)
            } else {
                AttrKind::StereotypeRef(target)
            }
        }
        "list" => {
            cur.expect_punct('<')?;
            let inner = parse_kind(cur)?;
            cur.expect_punct('>')?;
            AttrKind::ListOf(Box::new(inner))
        }
        other => {
            return Err(SyntaxError {
                message: format!("unknown attribute kind `{other}`"),
                pos: tok.pos,
            })
        }
    };
    Ok(kind)
}

fn resolve(reg: &StereotypeRegistry) -> Result<(), ProfileError> {
    for en in reg.enumerations.values() {
        if en.values.is_empty() {
            return Err(invalid(&en.name, "enumeration has no values"));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = en.values.iter().find(|v| !seen.insert(v.as_str())) {
            return Err(invalid(&en.name, format!("duplicate value `{dup}`")));
        }
    }

    for st in reg.stereotypes.values() {
        if let Some(parent) = &st.parent {
            if !reg.stereotypes.contains_key(parent) {
                return Err(unresolved(parent, &st.name));
            }
        }
        for spec in &st.attributes {
            check_kind_refs(reg, &spec.kind, &st.name)?;
        }
    }

    for st in reg.stereotypes.values() {
        let mut chain: Vec<&str> = vec![&st.name];
        let mut cursor = st.parent.as_deref();
        while let Some(p) = cursor {
            if let Some(at) = chain.iter().position(|&c| c == p) {
                return Err(ProfileError::Cycle {
                    chain: chain[at..].iter().map(|s| s.to_string()).collect(),
                });
            }
            chain.push(p);
            cursor = reg.stereotypes[p].parent.as_deref();
        }
    }

    for st in reg.stereotypes.values() {
        match &st.parent {
            None => {
                if st.name != st.applies_to.root() {
                    return Err(invalid(
                        &st.name,
                        format!(
                            "{} stereotypes must descend from `{}`",
                            st.applies_to.as_str(),
                            st.applies_to.root()
                        ),
                    ));
                }
            }
            Some(p) => {
                let parent = &reg.stereotypes[p];
                if parent.applies_to != st.applies_to {
                    return Err(invalid(
                        &st.name,
                        format!(
                            "applies to {} but parent `{p}` applies to {}",
                            st.applies_to.as_str(),
                            parent.applies_to.as_str()
                        ),
                    ));
                }
            }
        }

        let mut inherited: Vec<AttributeSpec> = Vec::new();
        if let Some(p) = &st.parent {
            inherited = reg.effective_attributes(p)?;
        }
        for spec in &st.attributes {
            if let Some(prev) = inherited.iter().find(|a| a.name == spec.name) {
                if prev.kind != spec.kind {
                    return Err(invalid(
                        &st.name,
                        format!(
                            "attribute `{}` overrides kind {} with {}",
                            spec.name, prev.kind, spec.kind
                        ),
                    ));
                }
            }
            if let Some(default) = &spec.default {
                if let check @ (LiteralCheck::KindMismatch(_) | LiteralCheck::NotInEnum { .. }) =
                    reg.check_literal(&spec.kind, default)
                {
                    return Err(invalid(
                        &st.name,
                        format!("default of `{}` is invalid: {check:?}", spec.name),
                    ));
                }
            }
        }
    }
    Ok(())
}

fn check_kind_refs(
    reg: &StereotypeRegistry,
    kind: &AttrKind,
    owner: &str,
) -> Result<(), ProfileError> {
    match kind {
        AttrKind::Primitive(_) => Ok(()),
        AttrKind::EnumRef(e) if reg.enumerations.contains_key(e) => Ok(()),
        AttrKind::StereotypeRef(s) if reg.stereotypes.contains_key(s) => Ok(()),
        AttrKind::EnumRef(name) | AttrKind::StereotypeRef(name) => Err(unresolved(name, owner)),
        AttrKind::ListOf(inner) => check_kind_refs(reg, inner, owner),
    }
}

fn unresolved(name: &str, by: &str) -> ProfileError {
    ProfileError::UnresolvedRef {
        name: name.to_string(),
        referenced_by: by.to_string(),
    }
}

fn invalid(name: &str, reason: impl Into<String>) -> ProfileError {
    ProfileError::Invalid {
        name: name.to_string(),
        reason: reason.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_contains_named_stereotypes() {
        let reg = default_registry();
        for name in [
            "ML",
            "PreProcessing",
            "DataTransformation",
            "DateConversion",
            "CSV",
            "Datetime",
            "CustomCode",
            "ML_Block_Connection",
        ] {
            assert!(reg.stereotype(name).is_some(), "missing {name}");
        }
        assert_eq!(reg.packages().len(), 6);
    }

    #[test]
    fn minimal_root_profile() {
        let reg = load_profile("stereotype ML in Common abstract applies-to block {}").unwrap();
        assert_eq!(reg.len(), 1);
        assert!(reg.effective_attributes("ML").unwrap().is_empty());
        assert!(reg.packages().values().all(|v| v.len() <= 1));
    }

    #[test]
    fn two_cycle_is_reported() {
        let src = "stereotype A in Common extends B applies-to block {}\n\
                   stereotype B in Common extends A applies-to block {}";
        assert_eq!(
            load_profile(src).unwrap_err(),
            ProfileError::Cycle {
                chain: vec!["A".into(), "B".into()]
            }
        );
    }

    #[test]
    fn unresolved_and_duplicate_names() {
        let src = "stereotype ML in Common applies-to block { attr m: enum<Nope>; }";
        assert!(matches!(
            load_profile(src),
            Err(ProfileError::UnresolvedRef { name, .. }) if name == "Nope"
        ));
        let src = "stereotype ML in Common applies-to block {}\nenum ML { a }";
        assert_eq!(
            load_profile(src).unwrap_err(),
            ProfileError::DuplicateName("ML".into())
        );
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = load_profile("stereotype ML in Nowhere applies-to block {}").unwrap_err();
        assert!(matches!(err, ProfileError::Parse { line: 1, column: 18, .. }));
    }

    #[test]
    fn root_and_metaclass_rules() {
        let src = "stereotype Orphan in Common applies-to block {}";
        assert!(matches!(load_profile(src), Err(ProfileError::Invalid { .. })));
        let src = "stereotype ML in Common applies-to block {}\n\
                   stereotype X in Attributes extends ML applies-to attribute {}";
        assert!(matches!(load_profile(src), Err(ProfileError::Invalid { .. })));
    }

    #[test]
    fn override_must_keep_kind_and_defaults_must_match() {
        let src = "stereotype ML in Common applies-to block { attr a: int; }\n\
                   stereotype C in Common extends ML applies-to block { attr a: string; }";
        assert!(matches!(load_profile(src), Err(ProfileError::Invalid { .. })));
        let src = "stereotype ML in Common applies-to block { attr a: int = \"x\"; }";
        assert!(matches!(load_profile(src), Err(ProfileError::Invalid { .. })));
        let src = "enum E { x }\nstereotype ML in Common applies-to block { attr a: enum<E> mandatory = \"y\"; }";
        assert!(matches!(load_profile(src), Err(ProfileError::Invalid { .. })));
    }

    #[test]
    fn date_conversion_has_mandatory_format() {
        let reg = default_registry();
        let attrs = reg.effective_attributes("DateConversion").unwrap();
        let format = attrs.iter().find(|a| a.name == "format").unwrap();
        assert!(format.mandatory);
        assert_eq!(format.kind, AttrKind::Primitive(PrimitiveKind::DatetimeFormat));
    }

    #[test]
    fn three_level_override_matches_hand_merge() {
        let src = "stereotype ML in Common applies-to block { attr a: int = 1; }\n\
                   stereotype P in Common extends ML applies-to block { attr b: string; }\n\
                   stereotype C in Common extends P applies-to block { attr c: bool; attr a: int mandatory = 7; }";
        let reg = load_profile(src).unwrap();
        let expected = vec![
            AttributeSpec {
                name: "a".into(),
                kind: AttrKind::Primitive(PrimitiveKind::Int),
                mandatory: true,
                default: Some(Literal::Int(7)),
            },
            AttributeSpec {
                name: "b".into(),
                kind: AttrKind::Primitive(PrimitiveKind::String),
                mandatory: false,
                default: None,
            },
            AttributeSpec {
                name: "c".into(),
                kind: AttrKind::Primitive(PrimitiveKind::Bool),
                mandatory: false,
                default: None,
            },
        ];
        assert_eq!(reg.effective_attributes("C").unwrap(), expected);
    }

    #[test]
    fn descendant_queries() {
        let reg = default_registry();
        assert!(reg.is_descendant("DateConversion", "ML").unwrap());
        assert!(reg.is_descendant("ML", "ML").unwrap());
        assert!(!reg.is_descendant("CSV", "PreProcessing").unwrap());
        assert!(matches!(
            reg.is_descendant("Nope", "ML"),
            Err(ProfileError::UnknownStereotype(_))
        ));
        assert!(matches!(
            reg.effective_attributes("Nope"),
            Err(ProfileError::UnknownStereotype(_))
        ));
    }

    #[test]
    fn digest_is_stable() {
        let a = load_profile(DEFAULT_PROFILE).unwrap();
        let b = load_profile(DEFAULT_PROFILE).unwrap();
        assert_eq!(a.digest(), b.digest());
        assert!(a.digest().starts_with("sha256:"));
    }
}
