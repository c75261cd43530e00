//! Turns a validated model into a linear pipeline plan.
//!
//! Data sources feeding the workflow are scheduled first, in declaration
//! order; then each workflow state contributes its target block in path
//! order. Every step carries its resolved parameters, so later stages never
//! look at the model again.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ast::{DataType, Model};
use crate::dataflow::Dataflow;
use crate::literal::Literal;
use crate::profile::StereotypeRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub declared_type: DataType,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stereotype: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub values: BTreeMap<String, Literal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanStep {
    pub index: usize,
    pub block: String,
    /// The ML stereotype implemented by this step.
    pub function: String,
    pub stage: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub state: Option<String>,
    pub params: IndexMap<String, Literal>,
    pub inputs: Vec<String>,
    pub input_steps: Vec<usize>,
    pub blackbox: bool,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub columns: Vec<Column>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePlan {
    pub model: String,
    pub source_model: String,
    pub profile_hash: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub workflow: Option<String>,
    pub steps: Vec<PlanStep>,
}

impl PipelinePlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn block_order(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.block.as_str()).collect()
    }

    pub fn step(&self, block: &str) -> Option<&PlanStep> {
        self.steps.iter().find(|s| s.block == block)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("model has several workflows ({}); exactly one is supported", .0.join(", "))]
    MultipleWorkflows(Vec<String>),
    #[error("workflow `{0}` has no initial state")]
    NoInitialState(String),
    #[error("workflow `{workflow}` is not linear at state `{state}`")]
    NonLinearWorkflow { workflow: String, state: String },
    #[error("block `{block}` consumes `{input}`, which is not scheduled before it")]
    UnresolvedInput { block: String, input: String },
    #[error("state `{state}` targets `{block}`, which has no ML stereotype")]
    NotExecutable { state: String, block: String },
}

pub fn schedule(model: &Model, registry: &StereotypeRegistry) -> Result<PipelinePlan, ScheduleError> {
    let mut plan = PipelinePlan {
        model: model.name.clone(),
        source_model: model.file.clone(),
        profile_hash: registry.digest().to_string(),
        workflow: None,
        steps: Vec::new(),
    };
    let sm = match model.state_machines.as_slice() {
        [] => return Ok(plan),
        [one] => one,
        many => {
            return Err(ScheduleError::MultipleWorkflows(
                many.iter().map(|m| m.name.clone()).collect(),
            ))
        }
    };
    plan.workflow = Some(sm.name.clone());
    let initial = sm
        .initial
        .as_deref()
        .filter(|i| sm.state(i).is_some())
        .ok_or_else(|| ScheduleError::NoInitialState(sm.name.clone()))?;

    let mut path = vec![initial];
    loop {
        let current = *path.last().expect("non-empty");
        let next: Vec<&str> = sm.successors(current).collect();
        match next.as_slice() {
            [] => break,
            [n] if !path.contains(n) => path.push(n),
            _ => {
                return Err(ScheduleError::NonLinearWorkflow {
                    workflow: sm.name.clone(),
                    state: current.to_string(),
                })
            }
        }
    }

    let df = Dataflow::new(model, registry);
    let mut order: Vec<(String, Option<String>)> = Vec::new();
    let targets: HashSet<&str> = path
        .iter()
        .filter_map(|s| sm.state(s))
        .map(|s| s.target_block.as_str())
        .collect();
    let mut needed = BTreeSet::new();
    for t in &targets {
        needed.extend(df.upstream(t));
    }
    for b in &model.blocks {
        if needed.contains(&b.name) && !targets.contains(b.name.as_str()) && df.is_source(&b.name) {
            order.push((b.name.clone(), None));
        }
    }
    for s in &path {
        let state = sm.state(s).expect("path states exist");
        if df.function(&state.target_block).is_none() {
            return Err(ScheduleError::NotExecutable {
                state: state.name.clone(),
                block: state.target_block.clone(),
            });
        }
        if !order.iter().any(|(b, _)| *b == state.target_block) {
            order.push((state.target_block.clone(), Some(state.name.clone())));
        }
    }

    let mut index_of: HashMap<String, usize> = HashMap::new();
    for (index, (name, state)) in order.into_iter().enumerate() {
        let step = build_step(&df, index, &name, state, &index_of)?;
        index_of.insert(name, index);
        plan.steps.push(step);
    }
    Ok(plan)
}

fn build_step(
    df: &Dataflow,
    index: usize,
    name: &str,
    state: Option<String>,
    index_of: &HashMap<String, usize>,
) -> Result<PlanStep, ScheduleError> {
    let registry = df.registry();
    let block = df.block(name).expect("scheduled blocks exist");
    let function = df.function(name).expect("scheduled blocks are ML").to_string();

    let mut inputs = Vec::new();
    let mut input_steps = Vec::new();
    for input in df.inputs(name) {
        if df.function(input).is_none() {
            continue;
        }
        let idx = *index_of.get(input).ok_or_else(|| ScheduleError::UnresolvedInput {
            block: name.to_string(),
            input: input.to_string(),
        })?;
        inputs.push(input.to_string());
        input_steps.push(idx);
    }

    let specs = df.specs(name);
    let selections = df.selections(name);
    let mut params: IndexMap<String, Literal> = IndexMap::new();
    for spec in specs.iter().filter(|s| s.mandatory) {
        if let Some(v) = block.value(&spec.name).or(spec.default.as_ref()) {
            params.insert(spec.name.clone(), v.clone());
        }
    }
    for spec in specs.iter().filter(|s| !s.mandatory) {
        let implicit = || -> Option<Literal> {
            if let Some(sel) = selections.iter().find(|s| s.key() == spec.name) {
                return sel.chosen().map(|e| Literal::Str(e.attr.name.clone()));
            }
            let suffix = spec.name.strip_prefix("input_")?;
            selections
                .iter()
                .filter_map(|s| s.chosen())
                .find_map(|e| e.attr.stereotype_values.get(suffix).cloned())
        };
        let value = match (block.value(&spec.name), selections.iter().any(|s| s.key() == spec.name)) {
            // Explicit attribute selections are normalized to the bare name.
            (Some(_), true) => implicit(),
            (Some(v), false) => Some(v.clone()),
            (None, _) => implicit().or_else(|| spec.default.clone()),
        };
        if let Some(v) = value {
            params.insert(spec.name.clone(), v);
        }
    }
    let mut extras: Vec<(&String, &Literal)> = block
        .values()
        .filter(|(k, _)| !specs.iter().any(|s| &s.name == *k))
        .collect();
    extras.sort_by(|a, b| a.0.cmp(b.0));
    for (k, v) in extras {
        params.insert(k.clone(), v.clone());
    }

    let columns = if df.is_source(name) {
        block
            .attributes
            .iter()
            .map(|a| Column {
                name: a.name.clone(),
                declared_type: a.declared_type,
                stereotype: a.applied_stereotype.clone(),
                values: a.stereotype_values.clone(),
            })
            .collect()
    } else {
        Vec::new()
    };

    Ok(PlanStep {
        index,
        block: name.to_string(),
        blackbox: block
            .applied_stereotypes
            .iter()
            .any(|s| registry.is_blackbox(s)),
        function,
        stage: block.stage.as_str().to_string(),
        state,
        params,
        inputs,
        input_steps,
        columns,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0} blocks are too many to enumerate orders exhaustively")]
pub struct TooLarge(pub usize);

pub const MAX_ENUMERATED_BLOCKS: usize = 10;

/// Every topological order of `blocks` under the input relation restricted
/// to those blocks, found by exhaustive backtracking.
pub fn dependency_topo_orders(
    model: &Model,
    registry: &StereotypeRegistry,
    blocks: &[&str],
) -> Result<Vec<Vec<String>>, TooLarge> {
    if blocks.len() > MAX_ENUMERATED_BLOCKS {
        return Err(TooLarge(blocks.len()));
    }
    let df = Dataflow::new(model, registry);
    let preds: Vec<Vec<usize>> = blocks
        .iter()
        .map(|b| {
            df.inputs(b)
                .into_iter()
                .filter_map(|i| blocks.iter().position(|x| *x == i))
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut used = vec![false; blocks.len()];
    let mut current = Vec::new();
    extend_orders(blocks, &preds, &mut used, &mut current, &mut out);
    Ok(out)
}

fn extend_orders(
    blocks: &[&str],
    preds: &[Vec<usize>],
    used: &mut [bool],
    current: &mut Vec<usize>,
    out: &mut Vec<Vec<String>>,
) {
    if current.len() == blocks.len() {
        out.push(current.iter().map(|&i| blocks[i].to_string()).collect());
        return;
    }
    for i in 0..blocks.len() {
        if used[i] || preds[i].iter().any(|&p| !used[p]) {
            continue;
        }
        used[i] = true;
        current.push(i);
        extend_orders(blocks, preds, used, current, out);
        current.pop();
        used[i] = false;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_model;
    use crate::profile::default_registry;

    const SRC: &str = r#"
        stage DataUnderstanding {
          block A : CSV { file = "a.csv"; Encoding = "UTF-8"; Delimiter = ",";
            attr d: String @Datetime(format = "%d.%m.%Y"); attr y: Float; }
          block Unused : CSV { file = "u.csv"; Encoding = "UTF-8"; Delimiter = ","; }
        }
        stage PreProcessing {
          block F : DateConversion { format = "%Y-%m-%d"; input part A; note = "x"; }
        }
        stage Modeling {
          block S : TrainTestSplit { input part F; }
        }
        stage Workflow {
          workflow W { state One -> block F; state Two -> block S; One -> Two; initial One; final Two; }
        }"#;

    #[test]
    fn sources_first_then_workflow_order() {
        let reg = default_registry();
        let m = parse_model(SRC, &reg).model.unwrap();
        let plan = schedule(&m, &reg).unwrap();
        assert_eq!(plan.block_order(), vec!["A", "F", "S"]);
        assert_eq!(plan.steps[1].input_steps, vec![0]);
        assert_eq!(plan.steps[0].columns.len(), 2);
        assert_eq!(plan.steps[1].state.as_deref(), Some("One"));
    }

    #[test]
    fn params_are_resolved_and_ordered() {
        let reg = default_registry();
        let m = parse_model(SRC, &reg).model.unwrap();
        let plan = schedule(&m, &reg).unwrap();
        let keys: Vec<&str> = plan.steps[1].params.keys().map(String::as_str).collect();
        assert_eq!(keys, vec!["format", "input_attribute", "input_format", "utc", "note"]);
        assert_eq!(plan.steps[1].params["input_format"], Literal::Str("%d.%m.%Y".into()));
        assert_eq!(plan.steps[2].params["ratio"], Literal::Float(0.75));
    }

    #[test]
    fn non_linear_and_multiple_workflows_rejected() {
        let reg = default_registry();
        let branching = SRC.replace("final Two;", "One -> One; final Two;");
        let m = parse_model(&branching, &reg).model.unwrap();
        assert!(matches!(
            schedule(&m, &reg),
            Err(ScheduleError::NonLinearWorkflow { .. })
        ));
        let two = SRC.replace(
            "stage Workflow {",
            "stage Workflow { workflow V { state X -> block F; initial X; }",
        );
        let m = parse_model(&two, &reg).model.unwrap();
        assert!(matches!(schedule(&m, &reg), Err(ScheduleError::MultipleWorkflows(_))));
    }

    #[test]
    fn empty_workflow_set_gives_empty_plan() {
        let reg = default_registry();
        let m = parse_model("", &reg).model.unwrap();
        assert!(schedule(&m, &reg).unwrap().steps.is_empty());
    }

    #[test]
    fn topo_orders_enumerated() {
        let reg = default_registry();
        let m = parse_model(SRC, &reg).model.unwrap();
        let orders = dependency_topo_orders(&m, &reg, &["A", "Unused", "F"]).unwrap();
        assert_eq!(orders.len(), 3);
        assert!(orders.iter().all(|o| {
            o.iter().position(|x| x == "A") < o.iter().position(|x| x == "F")
        }));
    }

    #[test]
    fn plan_json_round_trips() {
        let reg = default_registry();
        let m = parse_model(SRC, &reg).model.unwrap();
        let plan = schedule(&m, &reg).unwrap();
        let back: PipelinePlan = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(back, plan);
    }
}
