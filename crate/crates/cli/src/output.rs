//! Output envelope and table cells.
//!
//! Every command emits one JSON document embedding the resolved
//! configuration and the master seed; a timestamp is attached unless
//! `--deterministic` is set, so identical (config, seed) pairs produce
//! byte-identical output. Numeric cells carry their method tag.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::{CommonOpts, Format};

/// A numeric table cell tagged with how it was computed.
#[derive(Serialize, Clone, Copy, Debug)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Cell {
    Exact { value: f64 },
    MonteCarlo { value: f64, se: f64, n: usize },
}

impl Cell {
    pub fn exact(value: f64) -> Self {
        Cell::Exact { value }
    }

    pub fn monte_carlo(value: f64, se: f64, n: usize) -> Self {
        Cell::MonteCarlo { value, se, n }
    }

    pub fn value(&self) -> f64 {
        match self {
            Cell::Exact { value } => *value,
            Cell::MonteCarlo { value, .. } => *value,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    config: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix_ms: Option<u128>,
    result: R,
}

pub struct Emitter<'a> {
    pub common: &'a CommonOpts,
}

impl<'a> Emitter<'a> {
    pub fn new(common: &'a CommonOpts) -> Self {
        Self { common }
    }

    /// Writes the canonical JSON (or the lossy CSV projection) to the
    /// configured destination.
    pub fn emit<C: Serialize, R: Serialize>(
        &self,
        command: &str,
        config: C,
        result: R,
        csv: Option<String>,
    ) -> hyperex::Result<()> {
        let text = match self.common.format {
            Format::Json => {
                let envelope = Envelope {
                    command,
                    config,
                    timestamp_unix_ms: (!self.common.deterministic).then(|| {
                        SystemTime::now()
                            .duration_since(UNIX_EPOCH)
                            .map(|d| d.as_millis())
                            .unwrap_or(0)
                    }),
                    result,
                };
                let mut s = serde_json::to_string_pretty(&envelope)
                    .map_err(hyperex::Error::Parse)?;
                s.push('\n');
                s
            }
            Format::Csv => csv.unwrap_or_else(|| "no csv projection for this command\n".into()),
        };
        match &self.common.output {
            Some(path) => std::fs::write(path, text).map_err(|e| {
                hyperex::Error::InvalidArgument(format!("cannot write {path}: {e}"))
            })?,
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| {
                    hyperex::Error::InvalidArgument(format!("cannot write stdout: {e}"))
                })?;
            }
        }
        Ok(())
    }
}
