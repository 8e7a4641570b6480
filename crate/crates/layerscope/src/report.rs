//! CSV and JSON outputs. Every file starts with its provenance: `#` comment
//! lines in CSV, a `provenance` object in JSON. Outputs carry no timestamps,
//! so identical runs write identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TOOL: &str = "layerscope";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub metric: String,
    pub n: Option<usize>,
    /// Further command options, in the order given.
    pub options: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, seed: u64, metric: &str, n: Option<usize>) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            metric: metric.into(),
            n,
            options: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.options.push((key.into(), value.to_string()));
        self
    }

    fn comment_lines(&self) -> String {
        let mut out = format!(
            "# tool={} version={}\n# command={}\n# seed={}\n# metric={}\n",
            self.tool, self.version, self.command, self.seed, self.metric
        );
        if let Some(n) = self.n {
            out.push_str(&format!("# n={n}\n"));
        }
        for (k, v) in &self.options {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out
    }
}

/// A CSV table built in memory and written in one go.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, path: &Path, provenance: &Provenance) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Csv { path: path.to_path_buf(), source: e };
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        writer.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            writer.write_record(row).map_err(csv_err)?;
        }
        let body = writer.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
        let mut out = provenance.comment_lines().into_bytes();
        out.extend_from_slice(&body);
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Shortest decimal that reads back to the same double.
pub fn num(v: f64) -> String {
    format!("{v}")
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&WithProvenance { provenance, body }).expect("report serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a CSV written by [`Table::write`], skipping the comment lines.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| Error::Csv { path: path.to_path_buf(), source: e };
    let header = reader.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<Vec<Vec<String>>>>()?;
    Ok((header, rows))
}
