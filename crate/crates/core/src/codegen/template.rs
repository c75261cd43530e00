//! Code templates: one file per stereotype and target, with a small
//! front-matter header and `{{placeholder}}` substitution.
//!
//! ```text
//! ---
//! stereotype: DateConversion
//! target: py-script
//! required: format, input_attribute
//! ---
//! {{out}} = convert({{input.0}}, {{format}})
//! ```
//!
//! A target directory may contain a `_base` file naming another target whose
//! templates are used wherever this one has none.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read templates at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("unknown template target `{0}`")]
    UnknownTarget(String),
    #[error("template base chain too deep at `{0}`")]
    BaseCycle(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub stereotype: String,
    pub target: String,
    pub required: Vec<String>,
    pub body: String,
}

impl Template {
    pub fn parse(path: &Path, text: &str) -> Result<Self, TemplateError> {
        let malformed = |message: &str| TemplateError::Malformed {
            path: path.to_path_buf(),
            message: message.to_string(),
        };
        let rest = text
            .strip_prefix("---\n")
            .ok_or_else(|| malformed("missing front-matter"))?;
        let (header, body) = rest
            .split_once("\n---\n")
            .ok_or_else(|| malformed("front-matter is not closed"))?;
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for line in header.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| malformed("front-matter lines are `key: value`"))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| {
            fields
                .get(k)
                .map(|v| v.to_string())
                .ok_or_else(|| malformed(&format!("front-matter lacks `{k}`")))
        };
        let required = fields
            .get("required")
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default();
        Ok(Self {
            stereotype: get("stereotype")?,
            target: get("target")?,
            required,
            body: body.to_string(),
        })
    }

    /// Substitutes every `{{key}}` through `lookup`. Keys are trimmed.
    pub fn render(
        &self,
        mut lookup: impl FnMut(&str) -> Result<String, String>,
    ) -> Result<String, RenderError> {
        render_text(&self.body, &self.stereotype, &mut lookup)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RenderError {
    #[error("unterminated placeholder in template `{0}`")]
    Unterminated(String),
    #[error("template `{template}`: {message}")]
    Lookup { template: String, message: String },
}

pub(crate) fn render_text(
    body: &str,
    name: &str,
    lookup: &mut dyn FnMut(&str) -> Result<String, String>,
) -> Result<String, RenderError> {
    let mut out = String::with_capacity(body.len());
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let end = after
            .find("}}")
            .ok_or_else(|| RenderError::Unterminated(name.to_string()))?;
        let key = after[..end].trim();
        out.push_str(&lookup(key).map_err(|message| RenderError::Lookup {
            template: name.to_string(),
            message,
        })?);
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    Ok(out)
}

pub const PREAMBLE: &str = "_preamble";
const BASE_FILE: &str = "_base";

/// Templates for one target, with fallbacks from its base targets merged in.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub target: String,
    templates: BTreeMap<String, Template>,
}

impl TemplateSet {
    pub fn load(root: &Path, target: &str) -> Result<Self, TemplateError> {
        let mut chain = vec![target.to_string()];
        loop {
            let dir = root.join(chain.last().expect("non-empty"));
            if !dir.is_dir() {
                return Err(TemplateError::UnknownTarget(chain.last().cloned().unwrap_or_default()));
            }
            let base = dir.join(BASE_FILE);
            if !base.exists() {
                break;
            }
            let name = fs::read_to_string(&base)
                .map_err(|source| TemplateError::Io { path: base.clone(), source })?
                .trim()
                .to_string();
            if chain.contains(&name) || chain.len() > 8 {
                return Err(TemplateError::BaseCycle(name));
            }
            chain.push(name);
        }
        let mut templates = BTreeMap::new();
        for t in chain.iter().rev() {
            let dir = root.join(t);
            let mut entries: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|source| TemplateError::Io { path: dir.clone(), source })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "tmpl"))
                .collect();
            entries.sort();
            for path in entries {
                let text = fs::read_to_string(&path)
                    .map_err(|source| TemplateError::Io { path: path.clone(), source })?;
                let tmpl = Template::parse(&path, &text)?;
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
                if tmpl.stereotype != stem {
                    return Err(TemplateError::Malformed {
                        path,
                        message: format!("declares stereotype `{}`", tmpl.stereotype),
                    });
                }
                if tmpl.target != *t {
                    return Err(TemplateError::Malformed {
                        path,
                        message: format!("declares target `{}`", tmpl.target),
                    });
                }
                templates.insert(tmpl.stereotype.clone(), tmpl);
            }
        }
        Ok(Self {
            target: target.to_string(),
            templates,
        })
    }

    pub fn get(&self, stereotype: &str) -> Option<&Template> {
        self.templates.get(stereotype)
    }

    pub fn stereotypes(&self) -> impl Iterator<Item = &str> {
        self.templates
            .keys()
            .map(String::as_str)
            .filter(|k| !k.starts_with('_'))
    }
}

/// Directory of the templates shipped with this crate.
pub fn builtin_templates_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/templates")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_front_matter() {
        let t = Template::parse(
            Path::new("X.tmpl"),
            "---\nstereotype: X\ntarget: py-script\nrequired: a, b\n---\n{{out}} = {{ a }}\n",
        )
        .unwrap();
        assert_eq!(t.required, vec!["a", "b"]);
        let out = t
            .render(|k| Ok(format!("<{k}>")))
            .unwrap();
        assert_eq!(out, "<out> = <a>\n");
    }

    #[test]
    fn rejects_malformed() {
        assert!(Template::parse(Path::new("x"), "no header").is_err());
        assert!(Template::parse(Path::new("x"), "---\nstereotype: X\n---\n").is_err());
        let t = Template::parse(Path::new("x"), "---\nstereotype: X\ntarget: t\n---\n{{oops").unwrap();
        assert!(matches!(t.render(|_| Ok(String::new())), Err(RenderError::Unterminated(_))));
    }

    #[test]
    fn notebook_falls_back_to_script_templates() {
        let set = TemplateSet::load(&builtin_templates_dir(), "py-notebook").unwrap();
        assert_eq!(set.get("CSV").unwrap().target, "py-script");
        assert_eq!(set.get(PREAMBLE).unwrap().target, "py-notebook");
        assert!(TemplateSet::load(&builtin_templates_dir(), "cobol").is_err());
    }
}
