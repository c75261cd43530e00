//! Code generation from the use-case plans.

mod common;

use mlsysml::codegen::{
    builtin_templates_dir, generate, CodegenError, CodegenOptions, TemplateSet,
};
use mlsysml::parser::parse_model;
use mlsysml::profile::{default_registry, AppliesTo, StereotypeRegistry};
use mlsysml::scheduler::{schedule, PipelinePlan};
use proptest::prelude::*;
use serde_json::Value;

fn plan_of(name: &str, reg: &StereotypeRegistry) -> PipelinePlan {
    schedule(&common::load(name, reg), reg).unwrap()
}

fn templates(target: &str) -> TemplateSet {
    TemplateSet::load(&builtin_templates_dir(), target).unwrap()
}

#[test]
fn every_concrete_block_stereotype_has_a_script_template() {
    let reg = default_registry();
    let set = templates("py-script");
    let missing: Vec<&str> = reg
        .stereotypes()
        .filter(|s| s.applies_to == AppliesTo::Block && !s.is_abstract && !s.blackbox)
        .map(|s| s.name.as_str())
        .filter(|n| set.get(n).is_none())
        .collect();
    assert!(missing.is_empty(), "no template for {missing:?}");
    // And no template for a stereotype the profile does not know.
    for name in set.stereotypes() {
        assert!(reg.stereotype(name).is_some(), "stray template {name}");
    }
}

#[test]
fn uc1_script_carries_the_merge_keys() {
    let reg = default_registry();
    let plan = plan_of("uc1.mlsysml", &reg);
    let art = generate(&plan, &reg, &templates("py-script"), &CodegenOptions::default()).unwrap();
    assert_eq!(art.cells.len(), plan.steps.len() + 1);
    let merge = art.cells.iter().find(|c| c.contains("<<DataFrame_Merge>>")).unwrap();
    assert!(merge.contains("\"date\"") && merge.contains("\"date_date\""), "{merge}");
    assert!(merge.contains("r2_Format_Date") && merge.contains("r1_CSV_2"));
    let conv = art.cells.iter().find(|c| c.contains("<<DateConversion>>")).unwrap();
    assert_eq!(conv.matches("\"%Y-%m-%d\"").count(), 1, "{conv}");
    assert!(art.content.ends_with('\n') && !art.content.contains('\r'));
    assert!(art.cells[1].starts_with(&format!("# [0] CSV_1 <<CSV>> | model uc1.mlsysml | profile {}", reg.digest())));
}

#[test]
fn uc1_notebook_has_one_cell_per_step_plus_preamble() {
    let reg = default_registry();
    let plan = plan_of("uc1.mlsysml", &reg);
    let art = generate(&plan, &reg, &templates("py-notebook"), &CodegenOptions::default()).unwrap();
    assert_eq!(art.file_name, "pipeline.ipynb");
    let nb: Value = serde_json::from_str(&art.content).unwrap();
    assert_eq!(nb["nbformat"], 4);
    let cells = nb["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 10);
    assert!(cells.iter().all(|c| c["cell_type"] == "code"));
}

#[test]
fn generation_is_byte_deterministic() {
    let reg = default_registry();
    for target in ["py-script", "py-notebook"] {
        let a = generate(&plan_of("uc1.mlsysml", &reg), &reg, &templates(target), &CodegenOptions::default()).unwrap();
        let b = generate(&plan_of("uc1.mlsysml", &reg), &reg, &templates(target), &CodegenOptions::default()).unwrap();
        assert_eq!(a.content.as_bytes(), b.content.as_bytes(), "{target}");
    }
}

#[test]
fn empty_plan_is_preamble_only() {
    let reg = default_registry();
    let plan = schedule(&parse_model("", &reg).model.unwrap(), &reg).unwrap();
    let script = generate(&plan, &reg, &templates("py-script"), &CodegenOptions::default()).unwrap();
    assert_eq!(script.cells.len(), 1);
    let nb = generate(&plan, &reg, &templates("py-notebook"), &CodegenOptions::default()).unwrap();
    let v: Value = serde_json::from_str(&nb.content).unwrap();
    assert_eq!(v["cells"].as_array().unwrap().len(), 1);
}

#[test]
fn uc2_renders_and_custom_code_needs_permission() {
    let reg = default_registry();
    let set = templates("py-script");
    let plan = plan_of("uc2.mlsysml", &reg);
    let art = generate(&plan, &reg, &set, &CodegenOptions::default()).unwrap();
    assert_eq!(art.cells.len(), 7);

    let custom = plan_of("uc2_customcode.mlsysml", &reg);
    assert!(matches!(
        generate(&custom, &reg, &set, &CodegenOptions::default()),
        Err(CodegenError::CustomCodeNotAllowed(b)) if b == "Convert_PixelsAndNormalize"
    ));
    let art = generate(&custom, &reg, &set, &CodegenOptions { allow_custom_code: true }).unwrap();
    let cell = art.cells.iter().find(|c| c.contains("<<CustomCode>>")).unwrap();
    let begin = cell.find("# --- begin custom code").unwrap();
    let end = cell.find("# --- end custom code").unwrap();
    assert!(cell[begin..end].contains("img.convert(\"RGB\")"), "{cell}");
}

#[test]
fn black_boxes_render_as_stubs() {
    let reg = default_registry();
    let src = r#"
        stage DataUnderstanding { block C : CSV { file = "a.csv"; Encoding = "UTF-8"; Delimiter = ","; } }
        stage PreProcessing { block O : BlackBox_Outliers { input part C; } }
        stage Workflow { workflow W { state S -> block O; initial S; final S; } }"#;
    let plan = schedule(&parse_model(src, &reg).model.unwrap(), &reg).unwrap();
    assert!(plan.steps[1].blackbox);
    let art = generate(&plan, &reg, &templates("py-script"), &CodegenOptions::default()).unwrap();
    assert!(art.cells[2].contains("# TODO"));
    assert!(art.cells[2].contains("r1_O = None"));
}

/// Hostile string payloads must never escape their literal position.
fn hostile_script(payload: &str) -> String {
    let reg = default_registry();
    let lit = mlsysml::literal::Literal::Str(payload.to_string());
    let src = format!(
        r#"stage DataUnderstanding {{ block C : CSV {{ file = {lit}; Encoding = "UTF-8"; Delimiter = {lit}; }} }}
           stage PreProcessing {{ block N : Normalization {{ method = "MinMax"; columns = [{lit}, "x"]; input part C; }} }}
           stage Evaluation {{ block M : MAE {{ text = {lit}; input part N; }} }}
           stage Workflow {{ workflow W {{ state A -> block N; state B -> block M; A -> B; initial A; }} }}"#
    );
    let plan = schedule(&parse_model(&src, &reg).model.unwrap(), &reg).unwrap();
    generate(&plan, &reg, &templates("py-script"), &CodegenOptions::default())
        .unwrap()
        .content
}

#[test]
fn hostile_literals_stay_quoted() {
    for payload in ["\"\nINJECTED = 1\n#", "\\\"); INJECTED = 1 #", "'''\nINJECTED\n'''", "\r\nINJECTED"] {
        let out = hostile_script(payload);
        assert!(out.is_ascii());
        assert!(!out.lines().any(|l| l.trim_start().starts_with("INJECTED")), "{out}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn random_payloads_never_start_a_line(prefix in "[\"'\\\\\n\r\t #;)(a-z\u{80}-\u{10ffff}]{0,12}") {
        let out = hostile_script(&format!("{prefix}\nINJECTED = 1"));
        prop_assert!(!out.lines().any(|l| l.trim_start().starts_with("INJECTED")));
    }
}
