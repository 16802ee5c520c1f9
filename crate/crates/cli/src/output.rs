//! Table and report writers: CSV with a JSON metadata sidecar, or a single
//! JSON document. Output is byte-deterministic for a fixed config and seed
//! (no timestamps).

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Run provenance stored next to every table.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: Config,
}

impl Metadata {
    pub fn new(command: &str, cfg: &Config) -> Self {
        Self {
            tool: "cvqkd",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: cfg.seed,
            config: cfg.clone(),
        }
    }
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

fn rows_to_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for row in rows {
        wtr.serialize(row).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    }
    let bytes = wtr
        .into_inner()
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(std::io::Error::other(e)))
}

fn table_to_json<T: Serialize>(rows: &[T], meta: &Metadata) -> Result<String> {
    #[derive(Serialize)]
    struct Doc<'a, T: Serialize> {
        metadata: &'a Metadata,
        rows: &'a [T],
    }
    serde_json::to_string_pretty(&Doc { metadata: meta, rows })
        .map_err(|e| CliError::Io(std::io::Error::other(e)))
}

/// Writes a table to `out` (or stdout when `None`). CSV files get a
/// `<name>.meta.json` sidecar; JSON embeds the metadata instead.
pub fn write_table<T: Serialize>(
    rows: &[T],
    format: OutputFormat,
    out: Option<&Path>,
    meta: &Metadata,
) -> Result<()> {
    let body = match format {
        OutputFormat::Csv => rows_to_csv(rows)?,
        OutputFormat::Json => table_to_json(rows, meta)?,
    };
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            if format == OutputFormat::Csv {
                let meta_json = serde_json::to_string_pretty(meta)
                    .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
                std::fs::write(sidecar_path(path), meta_json)?;
            }
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

/// Writes a single JSON report to `out` or stdout.
pub fn write_report<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => println!("{body}"),
    }
    Ok(())
}
