//! Tabular output: every subcommand produces named tables that render to
//! CSV (header row + comma rows) or JSON lines (one object per row with a
//! `table` discriminator). With `--out STEM`, each table goes to
//! `STEM.<table>.<ext>`; otherwise everything is written to stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Cell {
    Int(u64),
    Num(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: &'static str,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &'static str, columns: &[&'static str]) -> Self {
        Self { name, columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Jsonl => self.render_jsonl(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(csv_field).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    fn render_jsonl(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let mut obj = serde_json::Map::new();
            obj.insert("table".into(), serde_json::Value::String(self.name.into()));
            for (col, cell) in self.columns.iter().zip(row) {
                let v = match cell {
                    Cell::Int(i) => serde_json::Value::from(*i),
                    Cell::Num(x) => serde_json::Value::from(*x),
                    Cell::Text(s) => serde_json::Value::String(s.clone()),
                };
                obj.insert((*col).into(), v);
            }
            let _ = writeln!(out, "{}", serde_json::Value::Object(obj));
        }
        out
    }
}

/// Quotes a CSV field only when it contains a delimiter, quote, or newline.
fn csv_field(cell: &Cell) -> String {
    let raw = match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Num(x) => x.to_string(),
        Cell::Text(s) => s.clone(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

/// Writes tables to per-table files under the stem, or to stdout.
pub fn write_tables(tables: &[Table], format: Format, out: Option<&Path>) -> std::io::Result<Vec<PathBuf>> {
    match out {
        Some(stem) => {
            if let Some(parent) = stem.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            let mut written = Vec::new();
            for t in tables {
                let mut path = stem.as_os_str().to_owned();
                path.push(format!(".{}.{}", t.name, format.extension()));
                let path = PathBuf::from(path);
                std::fs::write(&path, t.render(format))?;
                written.push(path);
            }
            Ok(written)
        }
        None => {
            let mut all = String::new();
            for (k, t) in tables.iter().enumerate() {
                if k > 0 && format == Format::Csv {
                    all.push('\n');
                }
                all.push_str(&t.render(format));
            }
            print!("{all}");
            Ok(Vec::new())
        }
    }
}
