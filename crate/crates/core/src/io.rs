//! Output files: CSV tables and their JSON sidecars.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

/// Metadata written next to every CSV. Only `timestamp` varies between
/// reruns of the same configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar<T: Serialize> {
    pub command: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub summary: T,
}

impl<T: Serialize> Sidecar<T> {
    pub fn new(command: &str, config: &RunConfig, seeds: Vec<u64>, summary: T) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Self { command: command.into(), config: config.clone(), seeds, timestamp, summary }
    }
}

/// `<dir>/<stem>.csv` and `<dir>/<stem>.json`.
pub fn output_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
    (dir.join(format!("{stem}.csv")), dir.join(format!("{stem}.json")))
}

pub fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}
