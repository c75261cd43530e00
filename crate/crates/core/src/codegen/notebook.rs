//! Jupyter notebook (nbformat 4) serialization.

use serde_json::{json, Value};

/// Splits cell text into nbformat source lines, each keeping its newline
/// except possibly the last.
fn source_lines(text: &str) -> Vec<String> {
    let text = text.trim_end_matches('\n');
    let mut lines: Vec<String> = text.split_inclusive('\n').map(String::from).collect();
    if lines.is_empty() {
        lines.push(String::new());
    }
    lines
}

/// One code cell per entry, no outputs, no cell ids; identical input gives
/// byte-identical output.
pub fn write_notebook(cells: &[String]) -> String {
    let cells: Vec<Value> = cells
        .iter()
        .map(|c| {
            json!({
                "cell_type": "code",
                "execution_count": null,
                "metadata": {},
                "outputs": [],
                "source": source_lines(c),
            })
        })
        .collect();
    let nb = json!({
        "cells": cells,
        "metadata": {
            "kernelspec": {
                "display_name": "Python 3",
                "language": "python",
                "name": "python3"
            },
            "language_info": {"name": "python"}
        },
        "nbformat": 4,
        "nbformat_minor": 4
    });
    let mut out = serde_json::to_string_pretty(&nb).expect("notebook serializes");
    out.push('\n');
    out
}
