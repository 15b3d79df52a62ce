use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Numeric(format!("cannot write {}: {e}", path.display()))
}

/// `value` with every object's keys in sorted order.
pub fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut out = Map::new();
            for (k, v) in entries {
                out.insert(k, canonicalize(v));
            }
            Value::Object(out)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// SHA-256 of the compact, key-sorted JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let value = serde_json::to_value(config).map_err(|e| Error::Config(e.to_string()))?;
    let text = serde_json::to_string(&canonicalize(value)).map_err(|e| Error::Config(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let value = serde_json::to_value(value).map_err(|e| io_err(path, e))?;
    let mut text = serde_json::to_string_pretty(&canonicalize(value)).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// A table written as CSV, preceded by one `# column: description` line per column.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub title: String,
    columns: Vec<(String, String)>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(title: impl Into<String>, columns: &[(&str, &str)]) -> Self {
        Self {
            title: title.into(),
            columns: columns.iter().map(|(n, d)| (n.to_string(), d.to_string())).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn write(&self, path: &Path, config_hash: &str) -> Result<()> {
        let mut text = format!("# {}\n# config_hash: {config_hash}\n", self.title);
        for (name, desc) in &self.columns {
            text.push_str(&format!("# {name}: {desc}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.columns.iter().map(|c| c.0.as_str()))
            .map_err(|e| io_err(path, e))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| io_err(path, e))?;
        }
        let body = w.into_inner().map_err(|e| io_err(path, e))?;
        text.push_str(&String::from_utf8(body).map_err(|e| io_err(path, e))?);
        fs::write(path, text).map_err(|e| io_err(path, e))
    }
}

/// Cell formatting shared by all tables.
pub fn cell<T: CsvCell>(v: T) -> String {
    v.cell()
}

pub trait CsvCell {
    fn cell(&self) -> String;
}

impl CsvCell for f64 {
    fn cell(&self) -> String {
        format!("{self:?}")
    }
}

impl CsvCell for usize {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl CsvCell for bool {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl CsvCell for &str {
    fn cell(&self) -> String {
        self.to_string()
    }
}

impl<T: CsvCell> CsvCell for Option<T> {
    fn cell(&self) -> String {
        self.as_ref().map(CsvCell::cell).unwrap_or_default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub experiment: String,
    pub format: String,
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Running,
    Pass,
    Fail,
    ConfigError,
    RuntimeError,
}

/// Record of one CLI run, written when the run starts and rewritten when it ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_path: PathBuf,
    pub config_hash: String,
    pub seed: u64,
    pub workers: usize,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: RunStatus,
    pub exit_code: Option<i32>,
    pub message: Option<String>,
    pub outputs: Vec<OutputEntry>,
}

impl RunManifest {
    pub const FILE: &'static str = "manifest.json";

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json(&dir.join(Self::FILE), self)
    }

    pub fn finish(&mut self, status: RunStatus, exit_code: i32, message: Option<String>) {
        self.finished_at = Some(chrono::Utc::now().to_rfc3339());
        self.status = status;
        self.exit_code = Some(exit_code);
        self.message = message;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order() {
        let a: Value = serde_json::from_str(r#"{"b": 1, "a": {"y": [1, {"q": 2, "p": 3}], "x": 2}}"#).unwrap();
        let b: Value = serde_json::from_str(r#"{"a": {"x": 2, "y": [1, {"p": 3, "q": 2}]}, "b": 1}"#).unwrap();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        let c: Value = serde_json::from_str(r#"{"a": {"x": 2, "y": [{"p": 3, "q": 2}, 1]}, "b": 1}"#).unwrap();
        assert_ne!(config_hash(&a).unwrap(), config_hash(&c).unwrap());
    }

    #[test]
    fn csv_has_documented_columns() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = CsvTable::new("demo", &[("x", "first"), ("y", "second")]);
        t.push(vec![cell(0.5), cell(Some(true))]);
        t.push(vec![cell(1usize), cell(None::<f64>)]);
        let path = dir.path().join("t.csv");
        t.write(&path, "abc").unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let comments: Vec<&str> = text.lines().filter(|l| l.starts_with('#')).collect();
        assert!(comments.contains(&"# x: first") && comments.contains(&"# y: second"));
        let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body, vec!["x,y", "0.5,true", "1,"]);
    }
}
