//! CSV and JSON writers with provenance headers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::config::RunConfig;
use crate::error::Result;

pub fn version_string() -> String {
    format!(
        "spde-euler {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("SPDE_EULER_GIT_REV").unwrap_or("untracked")
    )
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub enum Cell {
    F(f64),
    I(i64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x as i64)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(x) => x.to_string(),
            Cell::S(s) => s.clone(),
            Cell::B(b) => b.to_string(),
        }
    }
}

/// Output directory plus the metadata echoed into every file.
pub struct OutputSink {
    dir: PathBuf,
    command: String,
    seed: u64,
    config: RunConfig,
    written: Vec<PathBuf>,
}

impl OutputSink {
    pub fn new(dir: &Path, command: &str, seed: u64, config: &RunConfig) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutputSink {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config: config.clone(),
            written: Vec::new(),
        })
    }

    fn header(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", version_string());
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# seed: {}", self.seed);
        for (k, v) in self.config.entries() {
            let _ = writeln!(s, "# config: {k} = {v}");
        }
        s
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: Vec<Vec<Cell>>) -> Result<PathBuf> {
        let mut text = self.header();
        text.push_str(&columns.join(","));
        text.push('\n');
        for row in rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write(name, &text)
    }

    /// Adds the command, seed and version to `fields` and writes them.
    pub fn json(&mut self, name: &str, fields: &mut Map<String, Value>) -> Result<PathBuf> {
        fields.insert("command".into(), Value::from(self.command.clone()));
        fields.insert("seed".into(), Value::from(self.seed));
        fields.insert("version".into(), Value::from(version_string()));
        let mut text = serde_json::to_string_pretty(&*fields).expect("JSON values serialize");
        text.push('\n');
        self.write(name, &text)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }
}
