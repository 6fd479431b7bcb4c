//! JSON documents and CSV tables, each carrying the effective configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    command: &'a str,
    config: &'a ExperimentConfig,
    result: &'a T,
}

pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    command: &str,
    cfg: &ExperimentConfig,
    result: &T,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&Document {
        command,
        config: cfg,
        result,
    })?;
    text.push('\n');
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}

/// A CSV table; every numeric column header ends in a unit suffix.
pub struct Table {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&'static str]) -> Self {
        Self {
            headers: headers.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    (if b { "true" } else { "false" }).to_string()
}

/// Writes `table` after `#`-prefixed provenance lines.
pub fn write_csv(
    dir: &Path,
    name: &str,
    command: &str,
    cfg: &ExperimentConfig,
    table: &Table,
) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let mut buf = Vec::new();
    writeln!(buf, "# w2a {command}").expect("in-memory write");
    for line in cfg.to_toml().lines() {
        writeln!(buf, "# {line}").expect("in-memory write");
    }
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(&table.headers)?;
    for row in &table.rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e.into_error(),
    })?;
    fs::write(&path, bytes).map_err(io_err(&path))?;
    Ok(path)
}

/// Reads back a CSV written by [`write_csv`], skipping provenance lines.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let headers = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<Result<_, _>>()?;
    Ok((headers, rows))
}
