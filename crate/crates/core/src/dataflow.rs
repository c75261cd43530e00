//! Dataflow view of a parsed model: effective (inheritance-resolved) blocks,
//! the attributes each block exposes downstream, and resolution of
//! attribute-stereotype references against those exposures.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::ast::{effective_block, Block, BlockAttribute, Model};
use crate::profile::{AppliesTo, AttrKind, AttributeSpec, StereotypeRegistry};

/// An attribute as seen by a consumer: the declaring block plus the
/// attribute, with stereotype values possibly re-bound by intermediate steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Exposed {
    pub owner: String,
    pub attr: BlockAttribute,
}

impl Exposed {
    pub fn qualified(&self) -> String {
        format!("{}.{}", self.owner, self.attr.name)
    }
}

/// How a block's attribute-stereotype reference parameter is satisfied.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// Bound explicitly; `resolved` is `None` when the value names no input
    /// attribute.
    Bound {
        key: String,
        target: String,
        value: String,
        resolved: Option<Exposed>,
    },
    /// Unbound: the candidates among the inputs' exposures.
    Implicit {
        key: String,
        target: String,
        candidates: Vec<Exposed>,
    },
}

impl Selection {
    pub fn key(&self) -> &str {
        match self {
            Selection::Bound { key, .. } | Selection::Implicit { key, .. } => key,
        }
    }

    /// The single attribute the selection settles on, if any.
    pub fn chosen(&self) -> Option<&Exposed> {
        match self {
            Selection::Bound { resolved, .. } => resolved.as_ref(),
            Selection::Implicit { candidates, .. } if candidates.len() == 1 => candidates.first(),
            Selection::Implicit { .. } => None,
        }
    }
}

pub struct Dataflow<'m> {
    model: &'m Model,
    registry: &'m StereotypeRegistry,
    effective: BTreeMap<String, Block>,
}

impl<'m> Dataflow<'m> {
    /// Blocks caught in an inheritance cycle are left out.
    pub fn new(model: &'m Model, registry: &'m StereotypeRegistry) -> Self {
        let effective = model
            .blocks
            .iter()
            .filter_map(|b| {
                effective_block(model, registry, &b.name)
                    .ok()
                    .map(|e| (b.name.clone(), e))
            })
            .collect();
        Self {
            model,
            registry,
            effective,
        }
    }

    pub fn model(&self) -> &'m Model {
        self.model
    }

    pub fn registry(&self) -> &'m StereotypeRegistry {
        self.registry
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.effective.get(name)
    }

    /// The ML stereotype that determines the block's function.
    pub fn function(&self, name: &str) -> Option<&str> {
        self.block(name)?
            .applied_stereotypes
            .iter()
            .find(|s| self.registry.is_ml(s))
            .map(String::as_str)
    }

    pub fn is_source(&self, name: &str) -> bool {
        self.function(name)
            .is_some_and(|f| self.registry.is_data_source(f))
    }

    /// Effective attribute specs of every known stereotype applied to the block.
    pub fn specs(&self, name: &str) -> Vec<AttributeSpec> {
        let Some(block) = self.block(name) else {
            return Vec::new();
        };
        let mut out: Vec<AttributeSpec> = Vec::new();
        for st in &block.applied_stereotypes {
            for spec in self.registry.effective_attributes(st).unwrap_or_default() {
                if !out.iter().any(|s| s.name == spec.name) {
                    out.push(spec);
                }
            }
        }
        out
    }

    /// Names of existing input blocks, in declaration order.
    pub fn inputs(&self, name: &str) -> Vec<&str> {
        self.block(name)
            .map(|b| {
                b.inputs
                    .iter()
                    .map(|i| i.block.as_str())
                    .filter(|n| self.effective.contains_key(*n))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Every block reachable backwards through inputs, excluding `name`.
    pub fn upstream(&self, name: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<&str> = self.inputs(name);
        while let Some(n) = stack.pop() {
            if n != name && seen.insert(n.to_string()) {
                stack.extend(self.inputs(n));
            }
        }
        seen
    }

    /// Attributes available to consumers of `name`: its own declared
    /// attributes, or else everything its inputs expose.
    pub fn exposed(&self, name: &str) -> Vec<Exposed> {
        self.exposed_guarded(name, &mut HashSet::new())
    }

    fn exposed_guarded(&self, name: &str, visiting: &mut HashSet<String>) -> Vec<Exposed> {
        let Some(block) = self.block(name) else {
            return Vec::new();
        };
        if !visiting.insert(name.to_string()) {
            return Vec::new();
        }
        let out = if !block.attributes.is_empty() {
            block
                .attributes
                .iter()
                .map(|a| Exposed {
                    owner: name.to_string(),
                    attr: a.clone(),
                })
                .collect()
        } else {
            let mut out = self.input_exposures(name, visiting);
            // A step re-binds the stereotype values of the attribute it
            // selects when it binds the same key itself, e.g. a date
            // conversion's output format.
            for sel in self.selections_guarded(name, visiting) {
                let Some(chosen) = sel.chosen() else { continue };
                let Some(slot) = out
                    .iter_mut()
                    .find(|e| e.owner == chosen.owner && e.attr.name == chosen.attr.name)
                else {
                    continue;
                };
                for (k, v) in slot.attr.stereotype_values.iter_mut() {
                    if let Some(new) = block.stereotype_values.get(k) {
                        *v = new.clone();
                    }
                }
            }
            out
        };
        visiting.remove(name);
        out
    }

    fn input_exposures(&self, name: &str, visiting: &mut HashSet<String>) -> Vec<Exposed> {
        let mut out: Vec<Exposed> = Vec::new();
        for input in self.inputs(name) {
            for e in self.exposed_guarded(input, visiting) {
                if !out.iter().any(|o| o.attr.name == e.attr.name) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Attribute-stereotype reference parameters of the block, bound or not.
    /// Unbound mandatory references are left to the mandatory-binding check
    /// and do not appear here.
    pub fn selections(&self, name: &str) -> Vec<Selection> {
        self.selections_guarded(name, &mut HashSet::new())
    }

    fn selections_guarded(&self, name: &str, visiting: &mut HashSet<String>) -> Vec<Selection> {
        let Some(block) = self.block(name) else {
            return Vec::new();
        };
        let mut exposures: Option<Vec<Exposed>> = None;
        let mut out = Vec::new();
        for spec in self.specs(name) {
            let AttrKind::StereotypeRef(target) = &spec.kind else {
                continue;
            };
            let is_attr_ref = self
                .registry
                .stereotype(target)
                .is_some_and(|d| d.applies_to == AppliesTo::Attribute);
            if !is_attr_ref {
                continue;
            }
            let exposures =
                exposures.get_or_insert_with(|| self.input_exposures(name, visiting));
            match block.value(&spec.name) {
                Some(lit) => {
                    let value = lit.as_str().unwrap_or_default().to_string();
                    let resolved = resolve_attr_ref(exposures, &value)
                        .filter(|e| self.carries(&e.attr, target))
                        .cloned();
                    out.push(Selection::Bound {
                        key: spec.name.clone(),
                        target: target.clone(),
                        value,
                        resolved,
                    });
                }
                None if spec.mandatory => {}
                None => out.push(Selection::Implicit {
                    key: spec.name.clone(),
                    target: target.clone(),
                    candidates: exposures
                        .iter()
                        .filter(|e| self.carries(&e.attr, target))
                        .cloned()
                        .collect(),
                }),
            }
        }
        out
    }

    fn carries(&self, attr: &BlockAttribute, stereotype: &str) -> bool {
        attr.applied_stereotype
            .as_deref()
            .is_some_and(|s| self.registry.descends(s, stereotype))
    }

    /// Strongly connected components of the input graph with more than one
    /// block, each listed in model order.
    pub fn cycles(&self) -> Vec<Vec<String>> {
        let mut graph = DiGraph::<&str, ()>::new();
        let nodes: BTreeMap<&str, _> = self
            .model
            .blocks
            .iter()
            .filter(|b| self.effective.contains_key(&b.name))
            .map(|b| (b.name.as_str(), graph.add_node(b.name.as_str())))
            .collect();
        for (name, &idx) in &nodes {
            for input in self.inputs(name) {
                graph.add_edge(nodes[input], idx, ());
            }
        }
        let mut out: Vec<Vec<String>> = tarjan_scc(&graph)
            .into_iter()
            .filter(|c| c.len() > 1)
            .map(|c| {
                let mut names: Vec<String> = c.iter().map(|&i| graph[i].to_string()).collect();
                names.sort_by_key(|n| self.model.block_index(n));
                names
            })
            .collect();
        out.sort_by_key(|c| self.model.block_index(&c[0]));
        out
    }
}

/// `name` matches the first exposure with that attribute name;
/// `Block.name` also pins the declaring block.
pub fn resolve_attr_ref<'e>(exposures: &'e [Exposed], value: &str) -> Option<&'e Exposed> {
    match value.split_once('.') {
        Some((owner, attr)) => exposures
            .iter()
            .find(|e| e.owner == owner && e.attr.name == attr),
        None => exposures.iter().find(|e| e.attr.name == value),
    }
}
