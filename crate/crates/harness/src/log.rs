//! Newline-delimited episode logs: one JSON record per line.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::episode::{EpisodeRecord, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io: {0}")]
    Io(#[from] io::Error),
    #[error("log line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("log line {line}: unsupported schema version {found}")]
    Schema { line: usize, found: u64 },
}

fn write_lines(file: File, records: &[EpisodeRecord]) -> Result<(), LogError> {
    let mut out = BufWriter::new(file);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Appends records to the log, creating it if needed.
pub fn append_records(path: impl AsRef<Path>, records: &[EpisodeRecord]) -> Result<(), LogError> {
    write_lines(OpenOptions::new().create(true).append(true).open(path)?, records)
}

/// Writes a fresh log, replacing any existing file.
pub fn write_records(path: impl AsRef<Path>, records: &[EpisodeRecord]) -> Result<(), LogError> {
    write_lines(File::create(path)?, records)
}

pub fn load_records(path: impl AsRef<Path>) -> Result<Vec<EpisodeRecord>, LogError> {
    parse_log(BufReader::new(File::open(path)?))
}

/// Parses a log; blank lines are skipped and line numbers are 1-based.
pub fn parse_log(reader: impl BufRead) -> Result<Vec<EpisodeRecord>, LogError> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| LogError::Corrupt { line: line_no, message: e.to_string() })?;
        match value.get("schema").and_then(serde_json::Value::as_u64) {
            Some(v) if v == u64::from(SCHEMA_VERSION) => {}
            Some(found) => return Err(LogError::Schema { line: line_no, found }),
            None => {
                return Err(LogError::Corrupt { line: line_no, message: "missing schema version".into() });
            }
        }
        let record = serde_json::from_value(value)
            .map_err(|e| LogError::Corrupt { line: line_no, message: e.to_string() })?;
        records.push(record);
    }
    Ok(records)
}
