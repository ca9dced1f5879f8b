//! File emitters. Every file opens with a header carrying the program
//! version and the resolved configuration: `#` comment lines in CSV, a
//! leading `"header"` object in JSON.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Header {
    command: &'static str,
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            entries: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl Display) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    fn comment(&self) -> String {
        let mut out = format!("# pspin {}\n# command = {}\n", env!("CARGO_PKG_VERSION"), self.command);
        for (k, v) in &self.entries {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    fn json(&self) -> Value {
        let config: Map<String, Value> = self
            .entries
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let mut h = Map::new();
        h.insert("program".into(), "pspin".into());
        h.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        h.insert("command".into(), self.command.into());
        h.insert("config".into(), Value::Object(config));
        Value::Object(h)
    }
}

/// Column-oriented data that can be written as CSV or JSON.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    Value::Object(
                        self.columns
                            .iter()
                            .zip(r)
                            .map(|(c, v)| ((*c).to_string(), v.clone()))
                            .collect(),
                    )
                })
                .collect(),
        )
    }
}

/// JSON number for finite values, `null` otherwise.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

pub fn csv_string(header: &Header, table: &Table) -> std::io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.columns)?;
    for row in &table.rows {
        w.write_record(row.iter().map(csv_field))?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    Ok(header.comment() + &String::from_utf8_lossy(&body))
}

pub fn json_string(header: &Header, body: Vec<(&str, Value)>) -> std::io::Result<String> {
    let mut doc = Map::new();
    doc.insert("header".into(), header.json());
    for (k, v) in body {
        doc.insert(k.to_string(), v);
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(doc))?;
    text.push('\n');
    Ok(text)
}

/// Write `table` in `format`; JSON output stores the rows under `key`.
pub fn write_table(path: &Path, header: &Header, key: &str, table: &Table, format: Format) -> std::io::Result<()> {
    let text = match format {
        Format::Csv => csv_string(header, table)?,
        Format::Json => json_string(header, vec![(key, table.to_json())])?,
    };
    write_bytes(path, text.as_bytes())
}

pub fn write_json(path: &Path, header: &Header, body: Vec<(&str, Value)>) -> std::io::Result<()> {
    write_bytes(path, json_string(header, body)?.as_bytes())
}

/// `name` inside `dir` unless it is absolute.
pub fn resolve(dir: &Path, name: &Path) -> PathBuf {
    if name.is_absolute() {
        name.to_path_buf()
    } else {
        dir.join(name)
    }
}

/// `path` with `suffix` inserted before the extension:
/// `out/gap.csv` becomes `out/gap-minima.csv`.
pub fn sibling(path: &Path, suffix: &str, extension: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}-{suffix}.{extension}"))
}
