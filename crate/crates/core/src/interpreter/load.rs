//! Reading modeled data sources from disk.

use std::path::{Path, PathBuf};

use crate::ast::DataType;
use crate::scheduler::Column;

use super::table::{Table, Value};

/// Modeled paths are resolved inside `data_dir`. Absolute paths (including
/// Windows drive paths from the original modeling tool) keep only their file
/// name.
pub fn resolve_path(data_dir: &Path, file: &str) -> PathBuf {
    let bytes = file.as_bytes();
    let drive = bytes.len() > 2 && bytes[1] == b':' && bytes[0].is_ascii_alphabetic();
    if drive || Path::new(file).is_absolute() || file.starts_with('\\') {
        let name = file.rsplit(['/', '\\']).next().unwrap_or(file);
        data_dir.join(name)
    } else {
        data_dir.join(file)
    }
}

/// Decodes file content. Latin-1 maps every byte to the code point of the
/// same value.
pub fn decode(bytes: &[u8], encoding: &str) -> Result<String, String> {
    match encoding {
        "UTF-8" => {
            let text = String::from_utf8(bytes.to_vec()).map_err(|e| e.to_string())?;
            Ok(text.strip_prefix('\u{feff}').map(String::from).unwrap_or(text))
        }
        "Latin-1" => Ok(bytes.iter().map(|&b| b as char).collect()),
        other => Err(format!("unsupported encoding `{other}`")),
    }
}

/// Converts one cell to the declared type; empty cells are null.
pub fn convert(raw: &str, ty: DataType) -> Result<Value, String> {
    if raw.is_empty() {
        return Ok(Value::Null);
    }
    let trimmed = raw.trim();
    match ty {
        DataType::Integer => trimmed
            .parse::<i64>()
            .map(Value::Int)
            .map_err(|_| format!("`{raw}` is not an integer")),
        DataType::Float => trimmed
            .parse::<f64>()
            .map(Value::Float)
            .map_err(|_| format!("`{raw}` is not a number")),
        DataType::Boolean => match trimmed.to_ascii_lowercase().as_str() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("`{raw}` is not a boolean")),
        },
        _ => Ok(Value::Str(raw.to_string())),
    }
}

/// Parses delimited text with a header row. Declared columns select and type
/// the result; without declarations every column is kept as text.
pub fn parse_csv(text: &str, delimiter: &str, columns: &[Column]) -> Result<Table, String> {
    let delim = match delimiter.as_bytes() {
        [b] => *b,
        _ => return Err(format!("delimiter `{delimiter}` must be a single byte")),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delim)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| e.to_string())?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let picks: Vec<(usize, DataType, String)> = if columns.is_empty() {
        header
            .iter()
            .enumerate()
            .map(|(i, h)| (i, DataType::String, h.clone()))
            .collect()
    } else {
        columns
            .iter()
            .map(|c| {
                header
                    .iter()
                    .position(|h| *h == c.name)
                    .map(|i| (i, c.declared_type, c.name.clone()))
                    .ok_or_else(|| format!("column `{}` not found in header", c.name))
            })
            .collect::<Result<_, _>>()?
    };
    let mut table = Table::new(picks.iter().map(|p| p.2.clone()).collect());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = picks
            .iter()
            .map(|(i, ty, name)| {
                convert(record.get(*i).unwrap_or(""), *ty)
                    .map_err(|e| format!("row {}, column `{name}`: {e}", line + 2))
            })
            .collect::<Result<Vec<_>, _>>()?;
        table.rows.push(row);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windows_paths_keep_file_name() {
        let dir = Path::new("/data");
        assert_eq!(resolve_path(dir, r"C:\Users\x\weather.csv"), dir.join("weather.csv"));
        assert_eq!(resolve_path(dir, "/abs/w.csv"), dir.join("w.csv"));
        assert_eq!(resolve_path(dir, "sub/w.csv"), dir.join("sub/w.csv"));
    }

    #[test]
    fn latin1_and_typing() {
        assert_eq!(decode(&[0x47, 0xe4], "Latin-1").unwrap(), "Gä");
        assert!(decode(&[0xff], "UTF-8").is_err());
        let cols = vec![
            Column {
                name: "b".into(),
                declared_type: DataType::Float,
                stereotype: None,
                values: Default::default(),
            },
            Column {
                name: "a".into(),
                declared_type: DataType::Integer,
                stereotype: None,
                values: Default::default(),
            },
        ];
        let t = parse_csv("a;b;c\n1;2.5;x\n;3;y\n", ";", &cols).unwrap();
        assert_eq!(t.columns, vec!["b", "a"]);
        assert_eq!(t.rows[0], vec![Value::Float(2.5), Value::Int(1)]);
        assert_eq!(t.rows[1][1], Value::Null);
        assert!(parse_csv("a\nq\n", ",", &cols).is_err());
    }
}
