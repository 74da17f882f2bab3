//! CSV tables and run manifests.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use siqrng_core::figures::Table;

use crate::error::CliError;

/// Version of the CSV layouts; bumped whenever a header changes.
pub const CSV_VERSION: u32 = 1;

/// Full double precision: 17 significant digits.
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// First line of every CSV file: layout version, command and manifest hash.
pub fn preamble(command: &str, hash: &str) -> String {
    format!("# siqrng-csv v{CSV_VERSION} command={command} manifest={hash}")
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(CliError::io(dir))?;
    }
    Ok(BufWriter::new(
        File::create(path).map_err(CliError::io(path))?,
    ))
}

pub fn write_table(path: &Path, command: &str, hash: &str, table: &Table) -> Result<(), CliError> {
    let mut file = create(path)?;
    writeln!(file, "{}", preamble(command, hash)).map_err(CliError::io(path))?;
    let mut csv = csv::Writer::from_writer(file);
    csv.write_record(&table.header)?;
    for row in &table.rows {
        csv.write_record(row.iter().map(|&x| format_number(x)))?;
    }
    csv.flush().map_err(CliError::io(path))?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut file = create(path)?;
    serde_json::to_writer_pretty(&mut file, value)?;
    writeln!(file).map_err(CliError::io(path))?;
    file.flush().map_err(CliError::io(path))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut file = create(path)?;
    file.write_all(bytes).map_err(CliError::io(path))?;
    file.flush().map_err(CliError::io(path))
}

/// The reproducible identity of a run.
#[derive(Debug, Serialize)]
struct Identity<'a> {
    command: &'a str,
    tool_version: &'a str,
    seed: Option<u64>,
    resolved_config: &'a Value,
}

/// Everything needed to reproduce a run, plus where its outputs went.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    /// Configuration with every default filled in.
    pub resolved_config: Value,
    /// SHA-256 of command, version, seed and resolved configuration.
    pub hash: String,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, resolved_config: Value) -> Self {
        let tool_version = env!("CARGO_PKG_VERSION");
        let identity = Identity {
            command,
            tool_version,
            seed,
            resolved_config: &resolved_config,
        };
        let bytes = serde_json::to_vec(&identity).expect("manifest identity serialises");
        RunManifest {
            command: command.into(),
            tool_version: tool_version.into(),
            seed,
            hash: hex::encode(Sha256::digest(&bytes)),
            resolved_config,
            outputs: Vec::new(),
            duration_seconds: 0.0,
        }
    }
}
