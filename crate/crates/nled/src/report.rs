use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::CliError;

pub const TOOL: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance fields shared by every JSON artifact.
#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, body: &T) -> Result<(), CliError> {
    let file = File::create(path)
        .map_err(|e| CliError::io(&format!("cannot create {}", path.display()), e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &Envelope { meta, body })
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

/// Rows of numbers under named columns; undefined entries are NaN (`null` in JSON).
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<&'static str>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    let bad = |e: csv::Error| CliError::Config(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(bad)?;
    w.write_record(&table.columns).map_err(bad)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(bad)?;
    }
    w.flush()
        .map_err(|e| CliError::io(&format!("cannot write {}", path.display()), e))
}

#[derive(Serialize)]
struct Summary<'a, S: Serialize> {
    data: &'a str,
    rows: usize,
    #[serde(flatten)]
    extra: &'a S,
}

/// Writes `<stem>.csv` with a `<stem>.meta.json` beside it, or a single `<stem>.json`.
pub fn write_table<S: Serialize>(
    dir: &Path,
    stem: &str,
    format: Format,
    meta: &Meta,
    table: &Table,
    extra: &S,
) -> Result<Vec<PathBuf>, CliError> {
    match format {
        Format::Csv => {
            let data = dir.join(format!("{stem}.csv"));
            write_csv(&data, table)?;
            let side = dir.join(format!("{stem}.meta.json"));
            let name = data.file_name().and_then(|n| n.to_str()).unwrap_or(stem);
            write_json(
                &side,
                meta,
                &Summary {
                    data: name,
                    rows: table.rows.len(),
                    extra,
                },
            )?;
            Ok(vec![data, side])
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Full<'a, S: Serialize> {
                #[serde(flatten)]
                table: &'a Table,
                #[serde(flatten)]
                extra: &'a S,
            }
            let path = dir.join(format!("{stem}.json"));
            write_json(&path, meta, &Full { table, extra })?;
            Ok(vec![path])
        }
    }
}
