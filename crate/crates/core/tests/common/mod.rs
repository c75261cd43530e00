//! Shared helpers for the integration tests: fixture access and a seeded
//! generator of random, syntactically valid model sources.
#![allow(dead_code)]

pub mod gradient;
pub mod oracle;

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use mlsysml::ast::Model;
use mlsysml::diagnostics::Diagnostic;
use mlsysml::parser::parse_model_named;
use mlsysml::profile::{default_registry, AppliesTo, StereotypeRegistry};
use mlsysml::validator::ValidationConfig;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture_path(name: &str) -> PathBuf {
    fixtures_dir().join(name)
}

pub fn read_fixture(name: &str) -> String {
    let path = fixture_path(name);
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Parses a fixture that must be free of parse errors.
pub fn load(name: &str, reg: &StereotypeRegistry) -> Model {
    let r = parse_model_named(&read_fixture(name), name, reg);
    r.model
        .unwrap_or_else(|| panic!("{name} does not parse: {:#?}", r.diagnostics))
}

pub fn diagnostics(name: &str, config: &ValidationConfig) -> Vec<Diagnostic> {
    let reg = default_registry();
    mlsysml::check_source(&read_fixture(name), name, &reg, config).diagnostics
}

pub fn codes(name: &str, config: &ValidationConfig) -> Vec<&'static str> {
    diagnostics(name, config).iter().map(|d| d.code).collect()
}

/// The clean fixtures: no diagnostics of any kind under the default config.
pub const CLEAN: &[&str] = &["uc1_clean.mlsysml", "uc2.mlsysml"];

/// Every model fixture, mutations included.
pub fn all_model_fixtures() -> Vec<String> {
    let mut names = vec![
        "uc1.mlsysml".to_string(),
        "uc1_clean.mlsysml".to_string(),
        "uc2.mlsysml".to_string(),
        "uc2_customcode.mlsysml".to_string(),
    ];
    let mut mutations: Vec<String> = fs::read_dir(fixtures_dir().join("mutations"))
        .expect("mutations dir")
        .filter_map(|e| e.ok())
        .map(|e| format!("mutations/{}", e.file_name().to_string_lossy()))
        .filter(|n| n.ends_with(".mlsysml"))
        .collect();
    mutations.sort();
    names.extend(mutations);
    names
}

const STAGES: &[&str] = &[
    "BusinessUnderstanding",
    "DataUnderstanding",
    "PreProcessing",
    "Modeling",
    "Evaluation",
];

const KEYS: &[&str] = &[
    "format", "utc", "ratio", "target", "text", "MergeOn", "note", "max_depth", "label", "columns",
];

fn random_string(rng: &mut ChaCha8Rng) -> String {
    const PIECES: &[&str] = &[
        "date", "%Y-%m-%d", "a\"b", "back\\slash", "line\nbreak", "tab\t", "Zürich", "€", "",
        "C:/file.txt", "\u{1}", "ü😀",
    ];
    let n = rng.gen_range(0..3);
    (0..n).map(|_| *PIECES.choose(rng).unwrap()).collect()
}

fn random_literal(rng: &mut ChaCha8Rng, depth: usize) -> String {
    use mlsysml::literal::Literal;
    let lit = match rng.gen_range(0..if depth == 0 { 5 } else { 4 }) {
        0 => Literal::Int(rng.gen_range(-1_000_000..1_000_000)),
        1 => Literal::Float(rng.gen_range(-1e6..1e6)),
        2 => Literal::Bool(rng.gen()),
        3 => Literal::Str(random_string(rng)),
        _ => {
            let n = rng.gen_range(0..4);
            let items: Vec<String> = (0..n).map(|_| random_literal(rng, depth + 1)).collect();
            return format!("[{}]", items.join(", "));
        }
    };
    lit.to_string()
}

/// Source text of a random model that parses without errors. Blocks only
/// reference earlier blocks, so inheritance is acyclic; validation errors
/// are expected and irrelevant.
pub fn random_model_source(seed: u64, reg: &StereotypeRegistry) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let block_sts: Vec<&str> = reg
        .stereotypes()
        .filter(|s| s.applies_to == AppliesTo::Block)
        .map(|s| s.name.as_str())
        .collect();
    let attr_sts: Vec<&str> = reg
        .stereotypes()
        .filter(|s| s.applies_to == AppliesTo::Attribute && !s.is_abstract)
        .map(|s| s.name.as_str())
        .collect();
    let types = ["String", "Integer", "Float", "Boolean", "Datetime", "Image"];

    let n_blocks = rng.gen_range(0..9);
    let names: Vec<String> = (0..n_blocks).map(|i| format!("B{i}_{seed}")).collect();
    let mut by_stage: Vec<Vec<String>> = vec![Vec::new(); STAGES.len()];
    for (i, name) in names.iter().enumerate() {
        let mut text = format!("  block {name}");
        if rng.gen_bool(0.8) {
            let _ = write!(text, " : {}", block_sts.choose(&mut rng).unwrap());
        }
        if i > 0 && rng.gen_bool(0.3) {
            let _ = write!(text, " extends {}", names[rng.gen_range(0..i)]);
        }
        text.push_str(" {\n");
        let mut keys: Vec<&str> = KEYS.to_vec();
        keys.shuffle(&mut rng);
        for key in keys.iter().take(rng.gen_range(0..4)) {
            let _ = writeln!(text, "    {key} = {};", random_literal(&mut rng, 0));
        }
        for a in 0..rng.gen_range(0..3) {
            let _ = write!(text, "    attr a{a}: {}", types.choose(&mut rng).unwrap());
            if rng.gen_bool(0.5) {
                let st = attr_sts.choose(&mut rng).unwrap();
                let _ = write!(text, " @{st}");
                if rng.gen_bool(0.7) {
                    let _ = write!(text, "(format = {}, min = {})", random_literal(&mut rng, 1), random_literal(&mut rng, 1));
                }
            }
            text.push_str(";\n");
        }
        if i > 0 {
            let mut earlier: Vec<&String> = names[..i].iter().collect();
            earlier.shuffle(&mut rng);
            for target in earlier.iter().take(rng.gen_range(0..3)) {
                let kind = if rng.gen_bool(0.7) { "part" } else { "shared" };
                let mult = ["", " [2]", " [*]", " [0..*]", " [1..3]"].choose(&mut rng).unwrap();
                let _ = writeln!(text, "    input {kind} {target}{mult};");
            }
            if rng.gen_bool(0.2) {
                let _ = writeln!(text, "    realizes {};", names[rng.gen_range(0..i)]);
            }
        }
        text.push_str("  }\n");
        by_stage[rng.gen_range(0..STAGES.len())].push(text);
    }

    let mut out = String::new();
    if rng.gen_bool(0.5) {
        let _ = writeln!(out, "model Random{seed} profile \"default.profile\";");
    }
    for (stage, blocks) in STAGES.iter().zip(&by_stage) {
        if blocks.is_empty() && rng.gen_bool(0.5) {
            continue;
        }
        let _ = writeln!(out, "stage {stage} {{");
        for b in blocks {
            out.push_str(b);
        }
        out.push_str("}\n");
    }
    if !names.is_empty() && rng.gen_bool(0.7) {
        let _ = writeln!(out, "stage Workflow {{\n  workflow W{seed} {{");
        let n_states = rng.gen_range(1..5);
        for s in 0..n_states {
            let _ = writeln!(out, "    state S{s} -> block {};", names.choose(&mut rng).unwrap());
        }
        let mut edges = std::collections::BTreeSet::new();
        for _ in 0..rng.gen_range(0..n_states + 1) {
            let (a, b) = (rng.gen_range(0..n_states), rng.gen_range(0..n_states));
            if a != b && edges.insert((a, b)) {
                let _ = writeln!(out, "    S{a} -> S{b};");
            }
        }
        if rng.gen_bool(0.9) {
            let _ = writeln!(out, "    initial S0;");
        }
        if rng.gen_bool(0.7) {
            let _ = writeln!(out, "    final S{};", n_states - 1);
        }
        out.push_str("  }\n}\n");
    }
    out
}

pub fn default_config() -> ValidationConfig {
    ValidationConfig::default()
}
