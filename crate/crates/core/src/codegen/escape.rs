//! Rendering literals as Python source.

use std::fmt::Write as _;

use thiserror::Error;

use crate::literal::Literal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EscapingError {
    #[error("{0} has no Python literal")]
    NonFinite(f64),
}

/// A Python string literal. Everything outside printable ASCII is escaped
/// so generated files stay ASCII-clean and byte-stable.
pub fn py_str(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '"' => out.push_str("\\\""),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            ' '..='~' => out.push(c),
            c if (c as u32) <= 0xff => {
                let _ = write!(out, "\\x{:02x}", c as u32);
            }
            c if (c as u32) <= 0xffff => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => {
                let _ = write!(out, "\\U{:08x}", c as u32);
            }
        }
    }
    out.push('"');
    out
}

pub fn py_float(x: f64) -> Result<String, EscapingError> {
    if !x.is_finite() {
        return Err(EscapingError::NonFinite(x));
    }
    // Debug output round-trips and always carries a `.` or exponent.
    Ok(format!("{x:?}"))
}

pub fn py_literal(lit: &Literal) -> Result<String, EscapingError> {
    Ok(match lit {
        Literal::Bool(true) => "True".into(),
        Literal::Bool(false) => "False".into(),
        Literal::Int(i) => i.to_string(),
        Literal::Float(x) => py_float(*x)?,
        Literal::Str(s) => py_str(s),
        Literal::List(items) => {
            let parts: Result<Vec<_>, _> = items.iter().map(py_literal).collect();
            format!("[{}]", parts?.join(", "))
        }
    })
}

/// Text safe to place after `#` on a single line.
pub fn py_comment(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect()
}

/// A Python identifier derived from arbitrary text.
pub fn py_ident(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect()
}
