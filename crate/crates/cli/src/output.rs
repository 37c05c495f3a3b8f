//! CSV tables plus a JSON metadata sidecar.

use std::path::{Path, PathBuf};
use std::time::Duration;

use qutrit_core::evolve::Trajectory;
use qutrit_core::sweep::SweepResult;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::{Command, JobConfig};
use crate::CliError;

#[derive(Clone, Debug)]
pub enum Table {
    Sweep(SweepResult),
    Trajectory(Trajectory),
}

impl Table {
    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut buf = Vec::new();
        match self {
            Table::Sweep(s) => s.write_csv(&mut buf)?,
            Table::Trajectory(t) => t.write_csv(&mut buf)?,
        }
        Ok(buf)
    }

    fn metadata(&self) -> Value {
        match self {
            Table::Sweep(s) => {
                let axes: Vec<_> = s.axes.iter().map(|a| json!({"name": a.name, "count": a.values.len()})).collect();
                json!({"kind": "sweep", "axes": axes, "rows": s.len(), "metadata": s.metadata})
            }
            Table::Trajectory(t) => {
                json!({"kind": "trajectory", "rows": t.times.len(), "steps": t.steps, "rejected": t.rejected, "max_norm_error": t.max_norm_error})
            }
        }
    }
}

/// Everything a command produces: named tables and a summary of derived scalars.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub command: Command,
    pub tables: Vec<(String, Table)>,
    pub summary: Map<String, Value>,
}

impl CommandOutput {
    pub fn new(command: Command) -> Self {
        CommandOutput { command, tables: Vec::new(), summary: Map::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, table: Table) {
        self.tables.push((name.into(), table));
    }

    pub fn note(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn sweep(&self, name: &str) -> Option<&SweepResult> {
        match self.table(name)? {
            Table::Sweep(s) => Some(s),
            Table::Trajectory(_) => None,
        }
    }

    pub fn trajectory(&self, name: &str) -> Option<&Trajectory> {
        match self.table(name)? {
            Table::Trajectory(t) => Some(t),
            Table::Sweep(_) => None,
        }
    }
}

/// SHA-256 of the canonical JSON form of the job.
pub fn config_hash(job: &JobConfig) -> String {
    hex::encode(Sha256::digest(job.to_json().as_bytes()))
}

pub struct RunInfo {
    pub wall_time: Duration,
    pub threads: usize,
}

/// Writes `<table>.csv` for every table and `<command>.meta.json`; returns the written paths.
pub fn write_result(out: &CommandOutput, job: &JobConfig, dir: &Path, info: &RunInfo) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut tables = Map::new();
    for (name, table) in &out.tables {
        let path = dir.join(format!("{name}.csv"));
        std::fs::write(&path, table.to_csv()?)?;
        tables.insert(format!("{name}.csv"), table.metadata());
        written.push(path);
    }
    let meta = json!({
        "command": out.command.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash(job),
        "seed": job.seed,
        "wall_time_s": info.wall_time.as_secs_f64(),
        "threads": info.threads,
        "units": "rates in Delta, times in 1/Delta, phases in rad",
        "tables": tables,
        "summary": out.summary,
        "config": serde_json::to_value(job).expect("job configs serialize"),
    });
    let path = dir.join(format!("{}.meta.json", out.command.name()));
    std::fs::write(&path, serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n")?;
    written.push(path);
    Ok(written)
}
