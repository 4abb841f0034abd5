//! CSV tables with `#` metadata headers, content hashing and the run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Cells are formatted once so output bytes never depend on locale or thread count.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
    B(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) if x.is_nan() => "nan".into(),
            Cell::F(x) => format!("{x:.17e}"),
            Cell::I(x) => x.to_string(),
            Cell::U(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.into())
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&'static str]) -> Self {
        Self { name: name.into(), meta: Vec::new(), columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn render(&self, header: &[(String, String)]) -> String {
        let mut s = String::new();
        for (k, v) in header.iter().chain(&self.meta) {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// Rows of a CSV written by [`Table::render`]: `#` lines and the header skipped.
#[derive(Debug, Clone, Default)]
pub struct ParsedCsv {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedCsv {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut out = ParsedCsv::default();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            if let Some(m) = line.strip_prefix('#') {
                if let Some((k, v)) = m.split_once(':') {
                    out.meta.push((k.trim().into(), v.trim().into()));
                }
            } else if out.columns.is_empty() {
                out.columns = line.split(',').map(|c| c.trim().to_string()).collect();
            } else {
                let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
                if row.len() != out.columns.len() {
                    return Err(format!("row {:?} has {} cells, header has {}", line, row.len(), out.columns.len()));
                }
                out.rows.push(row);
            }
        }
        if out.columns.is_empty() {
            return Err("no header line".into());
        }
        Ok(out)
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, String> {
        let j = self.columns.iter().position(|c| c == name).ok_or_else(|| format!("missing column {name}"))?;
        self.rows
            .iter()
            .map(|r| r[j].parse::<f64>().map_err(|e| format!("column {name}: {e}")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub workers: usize,
    pub stages: Vec<Stage>,
    pub outputs: Vec<OutputFile>,
}

#[derive(Debug, Default)]
pub struct Stopwatch {
    pub stages: Vec<Stage>,
}

impl Stopwatch {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage { name: name.into(), wall_seconds: start.elapsed().as_secs_f64() });
        out
    }
}

pub fn write_table(dir: &Path, table: &Table, header: &[(String, String)]) -> std::io::Result<(PathBuf, OutputFile)> {
    let body = table.render(header);
    let path = dir.join(format!("{}.csv", table.name));
    std::fs::write(&path, &body)?;
    let file = OutputFile { file: format!("{}.csv", table.name), sha256: sha256_hex(body.as_bytes()), rows: table.rows.len() };
    Ok((path, file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_then_parse_round_trips() {
        let mut t = Table::new("x", &["a", "b", "ok"]);
        t.meta("note", "hello");
        t.push(vec![1.5.into(), f64::NAN.into(), true.into()]);
        t.push(vec![(-2e-300).into(), 3usize.into(), false.into()]);
        let text = t.render(&[("toolkit".into(), VERSION.into())]);
        assert!(text.starts_with("# toolkit: "));
        let p = ParsedCsv::parse(&text).unwrap();
        assert_eq!(p.columns, vec!["a", "b", "ok"]);
        assert_eq!(p.meta[1], ("note".into(), "hello".into()));
        let a = p.column("a").unwrap();
        assert_eq!(a, vec![1.5, -2e-300]);
        assert!(p.column("b").unwrap()[0].is_nan());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
