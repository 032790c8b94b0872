//! Tables and reports on disk.
//!
//! Numbers are written with 17 significant digits so that every `f64`
//! survives a write/read round trip bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Row-major table whose header names each column with its SI unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<(&'static str, &'static str)>,
    rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let header: Vec<String> = self.columns.iter().map(|(n, u)| format!("{n} [{u}]")).collect();
        let mut out = header.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                let _ = write!(out, "{}", number(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Column {
            name: &'static str,
            unit: &'static str,
        }
        #[derive(Serialize)]
        struct Doc {
            schema_version: u32,
            columns: Vec<Column>,
            rows: Vec<Vec<serde_json::Value>>,
        }
        let rows = self
            .rows
            .iter()
            .map(|r| r.iter().map(|v| json_number(*v)).collect())
            .collect();
        let doc = Doc {
            schema_version: SCHEMA_VERSION,
            columns: self.columns.iter().map(|&(name, unit)| Column { name, unit }).collect(),
            rows,
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

/// Scientific notation with a 17-digit mantissa; non-finite values as `inf`/`NaN`.
pub fn number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn json_number(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v)
        .map(serde_json::Value::Number)
        .unwrap_or_else(|| serde_json::Value::String(format!("{v}")))
}

/// Parses a CSV written by [`Table::to_csv`], returning the named columns.
pub fn read_columns(path: &Path, wanted: &[&str]) -> CliResult<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| CliError::Config(format!("{}: empty file", path.display())))?
        .split(',')
        .map(|h| h.split(" [").next().unwrap_or(h).trim())
        .collect();
    let idx: Vec<usize> = wanted
        .iter()
        .map(|w| {
            header
                .iter()
                .position(|h| h == w)
                .ok_or_else(|| CliError::Config(format!("{}: no column `{w}`", path.display())))
        })
        .collect::<CliResult<_>>()?;
    let mut cols = vec![Vec::new(); wanted.len()];
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        for (col, &i) in cols.iter_mut().zip(&idx) {
            let cell = cells.get(i).copied().unwrap_or("");
            let v = cell.trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}: line {}: bad number {cell:?}", path.display(), n + 2))
            })?;
            col.push(v);
        }
    }
    Ok(cols)
}

/// Writes artifacts into one directory.
pub struct Sink {
    dir: PathBuf,
    format: Format,
    written: Vec<PathBuf>,
}

impl Sink {
    pub fn create(dir: &Path, format: Format) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            action: "create directory",
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            written: Vec::new(),
        })
    }

    /// Writes `stem.csv` or `stem.json` according to the chosen format.
    pub fn table(&mut self, stem: &str, table: &Table) -> CliResult<()> {
        match self.format {
            Format::Csv => self.write(&format!("{stem}.csv"), &table.to_csv()),
            Format::Json => self.write(&format!("{stem}.json"), &table.to_json()),
        }
    }

    /// Writes a JSON report tagged with the schema version.
    pub fn report<T: Serialize>(&mut self, name: &str, body: &T) -> CliResult<()> {
        #[derive(Serialize)]
        struct Envelope<'a, T> {
            schema_version: u32,
            #[serde(flatten)]
            body: &'a T,
        }
        let doc = Envelope {
            schema_version: SCHEMA_VERSION,
            body,
        };
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        self.write(name, &text)
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|source| CliError::Io {
            action: "write",
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, f64::MIN_POSITIVE, 1e-3 * 7.0] {
            assert_eq!(number(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
        assert_eq!(number(f64::INFINITY), "inf");
    }

    #[test]
    fn csv_header_carries_units() {
        let mut t = Table::new(&[("x", "m"), ("T", "°C")]);
        t.push(vec![0.0, 10.0]);
        let csv = t.to_csv();
        assert!(csv.starts_with("x [m],T [°C]\n"));
        assert!(csv.contains("1.0000000000000000e1"));
    }

    #[test]
    fn json_table_has_schema_version() {
        let mut t = Table::new(&[("x", "m")]);
        t.push(vec![0.25]);
        let v: serde_json::Value = serde_json::from_str(&t.to_json()).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["rows"][0][0], 0.25);
    }
}
