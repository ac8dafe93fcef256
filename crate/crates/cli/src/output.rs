//! Artifact emission: one JSON record per run, or a CSV table of its rows.

use serde_json::{Map, Value};
use std::collections::BTreeSet;
use std::io::Write;

use crate::config::RunConfig;
use crate::{Failure, Format};

pub const SCHEMA: u32 = 1;

/// A finished run: flat result rows plus free-form details.
pub struct Artifact {
    pub rows: Vec<Map<String, Value>>,
    pub details: Value,
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(format!("cannot write output: {e}"))
}

pub fn record(config: &RunConfig, artifact: &Artifact, wall_ms: u128) -> Value {
    serde_json::json!({
        "schema": SCHEMA,
        "op": config.command,
        "config": config,
        "seed": config.mc.seed,
        "wall_ms": wall_ms,
        "rows": artifact.rows,
        "details": artifact.details,
    })
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// CSV with the union of row keys as header (first-seen order).
pub fn write_csv<W: Write>(rows: &[Map<String, Value>], out: W) -> Result<(), Failure> {
    let mut header: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    for row in rows {
        for key in row.keys() {
            if seen.insert(key.clone()) {
                header.push(key.clone());
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(io_failure)?;
    for row in rows {
        w.write_record(
            header
                .iter()
                .map(|k| row.get(k).map(cell).unwrap_or_default()),
        )
        .map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

pub fn emit(config: &RunConfig, artifact: &Artifact, wall_ms: u128) -> Result<(), Failure> {
    let name = serde_json::to_value(config.command).expect("command serialises");
    let name = name.as_str().unwrap_or("run");
    match (&config.output.path, config.output.format) {
        (None, Format::Json) => {
            let text = serde_json::to_string_pretty(&record(config, artifact, wall_ms))
                .map_err(io_failure)?;
            let mut out = std::io::stdout().lock();
            match writeln!(out, "{text}") {
                // A closed pipe (e.g. `| head`) is not an error of the run.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                other => other.map_err(io_failure),
            }
        }
        (None, Format::Csv) => write_csv(&artifact.rows, std::io::stdout().lock()),
        (Some(dir), format) => {
            std::fs::create_dir_all(dir).map_err(io_failure)?;
            // The JSON record is always written so that the run can be replayed.
            let json_path = dir.join(format!("{name}.json"));
            let text = serde_json::to_string_pretty(&record(config, artifact, wall_ms))
                .map_err(io_failure)?;
            std::fs::write(&json_path, text).map_err(io_failure)?;
            if format == Format::Csv {
                let file =
                    std::fs::File::create(dir.join(format!("{name}.csv"))).map_err(io_failure)?;
                write_csv(&artifact.rows, file)?;
            }
            eprintln!("critfield: wrote {}", json_path.display());
            Ok(())
        }
    }
}
