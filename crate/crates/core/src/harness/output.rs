//! CSV tables and the run manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

/// One cell; floats use the shortest representation that round-trips.
pub enum Cell {
    Str(String),
    Num(f64),
    Int(i64),
    Bool(bool),
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Str(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Str(s)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}
impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(x as i64)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Str(s) => s.clone(),
            Cell::Num(x) => format!("{x:?}"),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

/// In-memory CSV table with a `# schema:` comment line.
pub struct CsvTable {
    columns: Vec<&'static str>,
    description: String,
    body: csv::Writer<Vec<u8>>,
}

impl CsvTable {
    pub fn new(description: &str, columns: &[&'static str]) -> Self {
        CsvTable {
            columns: columns.to_vec(),
            description: description.to_string(),
            body: csv::Writer::from_writer(Vec::new()),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns.len(), "row width");
        self.body
            .write_record(cells.iter().map(Cell::render))
            .expect("writing to memory");
    }

    pub fn render(&mut self) -> String {
        self.body.flush().expect("writing to memory");
        format!(
            "# schema: {} | {}\n{}\n{}",
            self.columns.join(","),
            self.description,
            self.columns.join(","),
            String::from_utf8_lossy(self.body.get_ref())
        )
    }

    pub fn write(&mut self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub created: String,
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub build: String,
    /// The configuration as parsed, in the config file format.
    pub config: String,
    pub artifacts: Vec<Artifact>,
    pub status: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

/// `<crate version>` plus the git description captured at build time, if any.
pub fn build_identity() -> String {
    match option_env!("NS2D_GIT_DESCRIBE") {
        Some(g) if !g.is_empty() => format!("{}-{g}", env!("CARGO_PKG_VERSION")),
        _ => format!("{}-unknown", env!("CARGO_PKG_VERSION")),
    }
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, threads: usize, config: String) -> Self {
        RunManifest {
            format_version: MANIFEST_VERSION,
            created: chrono::Utc::now().to_rfc3339(),
            command: command.to_string(),
            seed,
            threads,
            build: build_identity(),
            config,
            artifacts: Vec::new(),
            status: "ok".into(),
        }
    }

    /// Records an emitted file relative to `root`.
    pub fn add(&mut self, root: &Path, path: &Path) -> Result<()> {
        let rel = path.strip_prefix(root).unwrap_or(path);
        self.artifacts.push(Artifact {
            path: rel.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<RunManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_line_and_round_trip_floats() {
        let mut t = CsvTable::new("test table", &["name", "x"]);
        t.row(vec!["a,b".into(), 0.1f64.into()]);
        t.row(vec!["c".into(), (1.0f64 / 3.0).into()]);
        let s = t.render();
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "# schema: name,x | test table");
        assert_eq!(lines.next().unwrap(), "name,x");
        assert_eq!(lines.next().unwrap(), "\"a,b\",0.1");
        let x: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(x, 1.0 / 3.0);
    }
}
