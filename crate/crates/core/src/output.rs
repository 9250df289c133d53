//! CSV and JSON artifacts.
//!
//! CSV files start with a `# config: <json>` line, use `\n` line endings and
//! print decimals with 17 significant digits, so equal runs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i128),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v as i128)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Renders with the config echo as the first line.
    pub fn render(&self, config_echo: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config: {config_echo}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// Reads back the config echo of a CSV written by [`Table::render`].
pub fn read_config_echo(text: &str) -> Option<Value> {
    let first = text.lines().next()?;
    serde_json::from_str(first.strip_prefix("# config: ")?).ok()
}

/// Parses the data part of a rendered CSV into string cells.
pub fn read_table(text: &str) -> Option<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next()?.split(',').map(str::to_string).collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Some((header, rows))
}

/// Git-style content hash: SHA-256 of `"blob <len>\0" ‖ bytes`, hex encoded.
pub fn content_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn to_json_text<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json_text(value)?)
}

/// One entry of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub inputs: Value,
    pub statistic: Value,
    pub threshold: Value,
    pub pass: bool,
    /// The statement being checked, in words.
    pub claim: String,
}

/// Inserts or replaces verdicts by name in `<dir>/report.json`.
pub fn upsert_report(dir: &Path, verdicts: &[Verdict]) -> Result<()> {
    let path = dir.join("report.json");
    let mut entries: Vec<Value> = match std::fs::read_to_string(&path) {
        Ok(text) => serde_json::from_str::<Value>(&text)
            .ok()
            .and_then(|v| v.get("verdicts").and_then(Value::as_array).cloned())
            .unwrap_or_default(),
        Err(_) => Vec::new(),
    };
    for v in verdicts {
        let value = serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))?;
        match entries
            .iter_mut()
            .find(|e| e.get("name").and_then(Value::as_str) == Some(v.name.as_str()))
        {
            Some(slot) => *slot = value,
            None => entries.push(value),
        }
    }
    let all_pass = entries
        .iter()
        .all(|e| e.get("pass").and_then(Value::as_bool).unwrap_or(false));
    write_json(&path, &json!({ "all_pass": all_pass, "verdicts": entries }))
}

/// Run manifest: config echo, seed, input hash and output hashes. No timing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub config_hash: String,
    /// `(file name, content hash)` of every artifact written.
    pub outputs: Vec<(String, String)>,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub results: Value,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 6.02e23, -2.5e-300, 0.0] {
            let s = format_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn git_blob_hash() {
        // `printf 'hello\n' | git hash-object --stdin` under SHA-256 object format
        assert_eq!(
            content_hash(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn table_render_and_echo() {
        let mut t = Table::new(["n", "p_hat"]);
        t.push(vec![2u64.into(), 0.5.into()]);
        let text = t.render("{\"seed\":1}");
        assert_eq!(text, "# config: {\"seed\":1}\nn,p_hat\n2,5.0000000000000000e-1\n");
        assert_eq!(read_config_echo(&text).unwrap()["seed"], 1);
        let (h, rows) = read_table(&text).unwrap();
        assert_eq!(h, ["n", "p_hat"]);
        assert_eq!(rows[0][1], "5.0000000000000000e-1");
    }

    #[test]
    fn report_upsert_replaces_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let v = |pass| Verdict {
            name: "x".into(),
            inputs: Value::Null,
            statistic: json!(1.0),
            threshold: json!(2.0),
            pass,
            claim: String::new(),
        };
        upsert_report(dir.path(), &[v(false)]).unwrap();
        upsert_report(dir.path(), &[v(true)]).unwrap();
        let r: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
                .unwrap();
        assert_eq!(r["verdicts"].as_array().unwrap().len(), 1);
        assert_eq!(r["all_pass"], true);
    }
}
