//! CSV outputs and their metadata sidecars.
//!
//! Every CSV is plain RFC 4180 with a header row. Next to `out.csv` the
//! command writes `out.csv.meta.json` holding the output format version,
//! the command name and the flags it ran with, so a run can be repeated.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// Bumped whenever a CSV header changes.
pub const CSV_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a, F: Serialize, S: Serialize> {
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub csv_format_version: u32,
    pub command: &'a str,
    pub flags: &'a F,
    /// Command-specific results, e.g. the selected sweep point.
    pub summary: Option<S>,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_meta<F: Serialize, S: Serialize>(csv: &Path, command: &str, flags: &F, summary: Option<S>) -> Result<()> {
    let meta = Meta {
        tool: "gurukit",
        tool_version: env!("CARGO_PKG_VERSION"),
        csv_format_version: CSV_FORMAT_VERSION,
        command,
        flags,
        summary,
    };
    let mut w = BufWriter::new(File::create(meta_path(csv))?);
    serde_json::to_writer_pretty(&mut w, &meta)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// CSV plus sidecar in one call.
pub fn emit<T: Serialize, F: Serialize, S: Serialize>(
    path: &Path,
    rows: &[T],
    command: &str,
    flags: &F,
    summary: Option<S>,
) -> Result<()> {
    write_csv(path, rows)?;
    write_meta(path, command, flags, summary)
}
