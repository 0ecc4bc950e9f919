//! Per-run `summary.json` files and their consolidation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::io::{atomic_write, read_json, write_json};
use crate::problem::GridDesc;

pub const SUMMARY_SCHEMA: &str = "wedgeflow.summary.v1";
pub const REPORT_SCHEMA: &str = "wedgeflow.report.v1";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    /// A computation without a verdict.
    Ok,
    Pass,
    Fail,
}

impl Status {
    pub fn of(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema: String,
    pub command: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDesc>,
    pub metrics: Value,
}

impl Summary {
    pub fn new<T: Serialize>(command: &str, status: Status, grid: Option<GridDesc>, metrics: &T) -> Self {
        Summary {
            schema: SUMMARY_SCHEMA.to_string(),
            command: command.to_string(),
            status,
            grid,
            metrics: serde_json::to_value(metrics).expect("metrics serialize"),
        }
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join(SUMMARY_FILE), self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub dir: String,
    pub summary: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub runs: Vec<RunEntry>,
}

/// Reads `dir/summary.json`, keeping it verbatim after checking its schema.
pub fn load_summary(dir: &Path) -> CliResult<Value> {
    let path = dir.join(SUMMARY_FILE);
    let v: Value = read_json(&path)?;
    let schema = v.get("schema").and_then(Value::as_str);
    if schema != Some(SUMMARY_SCHEMA) {
        return Err(CliError::Schema {
            path,
            message: format!("schema {schema:?}, expected {SUMMARY_SCHEMA:?}"),
        });
    }
    if let Err(e) = serde_json::from_value::<Summary>(v.clone()) {
        return Err(CliError::Schema {
            path,
            message: e.to_string(),
        });
    }
    Ok(v)
}

/// Merges run summaries in the given order. Inputs are only read.
pub fn merge(dirs: &[PathBuf]) -> CliResult<Report> {
    let mut runs = Vec::with_capacity(dirs.len());
    for d in dirs {
        runs.push(RunEntry {
            dir: d.display().to_string(),
            summary: load_summary(d)?,
        });
    }
    Ok(Report {
        schema: REPORT_SCHEMA.to_string(),
        runs,
    })
}

/// `dir,command,status` per run.
pub fn report_csv(r: &Report) -> String {
    let mut s = String::from("dir,command,status\n");
    for run in &r.runs {
        let field = |k: &str| run.summary.get(k).and_then(Value::as_str).unwrap_or("").to_string();
        s.push_str(&format!("{},{},{}\n", csv_cell(&run.dir), field("command"), field("status")));
    }
    s
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_report(r: &Report, out: &Path) -> CliResult<()> {
    write_json(&out.join("report.json"), r)?;
    atomic_write(&out.join("report.csv"), report_csv(r).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passthrough_and_schema_check() {
        let tmp = tempfile::tempdir().unwrap();
        let a = tmp.path().join("a");
        Summary::new("solve signorini", Status::Ok, None, &serde_json::json!({"x": 1.5})).write(&a).unwrap();
        let r = merge(std::slice::from_ref(&a)).unwrap();
        let on_disk: Value = read_json(&a.join(SUMMARY_FILE)).unwrap();
        assert_eq!(r.runs[0].summary, on_disk);

        let b = tmp.path().join("b");
        write_json(&b.join(SUMMARY_FILE), &serde_json::json!({"schema": "other"})).unwrap();
        match merge(&[a, b.clone()]) {
            Err(CliError::Schema { path, .. }) => assert_eq!(path, b.join(SUMMARY_FILE)),
            other => panic!("{other:?}"),
        }
        assert!(merge(&[]).unwrap().runs.is_empty());
    }
}
