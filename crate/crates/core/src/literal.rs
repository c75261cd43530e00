use std::fmt;

use serde::{Deserialize, Serialize};

/// A literal value as written in a profile default or a model binding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<Literal>),
}

/// Coarse kind of a literal, used for override and kind-mismatch checks.
/// Integers and floats share the `Number` class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LiteralClass {
    Bool,
    Number,
    Str,
    List,
}

impl Literal {
    pub fn class(&self) -> LiteralClass {
        match self {
            Literal::Bool(_) => LiteralClass::Bool,
            Literal::Int(_) | Literal::Float(_) => LiteralClass::Number,
            Literal::Str(_) => LiteralClass::Str,
            Literal::List(_) => LiteralClass::List,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Literal::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Literal::Int(i) => Some(i as f64),
            Literal::Float(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            Literal::Bool(b) => Some(b),
            _ => None,
        }
    }

    /// String items of a list literal; a bare string counts as a one-element list.
    pub fn string_items(&self) -> Option<Vec<&str>> {
        match self {
            Literal::Str(s) => Some(vec![s.as_str()]),
            Literal::List(items) => items.iter().map(Literal::as_str).collect(),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    /// Canonical source form. Floats use the shortest round-tripping
    /// representation and always carry a `.` or exponent.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Bool(b) => write!(f, "{b}"),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x:?}"),
            Literal::Str(s) => write_quoted(f, s),
            Literal::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            '\r' => f.write_str("\\r")?,
            '\0' => f.write_str("\\0")?,
            c if c.is_control() => write!(f, "\\u{{{:x}}}", c as u32)?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_is_source_syntax() {
        let lit = Literal::List(vec![
            Literal::Str("date".into()),
            Literal::Str("a\"b".into()),
        ]);
        assert_eq!(lit.to_string(), r#"["date", "a\"b"]"#);
        assert_eq!(Literal::Float(1.0).to_string(), "1.0");
        assert_eq!(Literal::Float(0.75).to_string(), "0.75");
    }

    #[test]
    fn json_is_plain_values() {
        let lit = Literal::List(vec![Literal::Int(1), Literal::Bool(true)]);
        assert_eq!(serde_json::to_string(&lit).unwrap(), "[1,true]");
    }
}
