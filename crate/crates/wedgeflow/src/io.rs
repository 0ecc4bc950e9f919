//! Output locations, atomic writes and the CSV layouts.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use wedgeflow_core::analysis::{ImprovementTable, MonotonicityProfile};
use wedgeflow_core::flatland::PlanarSet;
use wedgeflow_core::{Field, GridSpec};

use crate::error::{CliError, CliResult};

/// Overrides the root that relative output directories resolve against.
pub const OUT_ENV: &str = "WEDGEFLOW_OUT";

/// Output directory for a command: `--out` if given, else `default`, with
/// relative paths placed under `$WEDGEFLOW_OUT` when it is set.
pub fn resolve_out(out: Option<&Path>, default: &str) -> PathBuf {
    let rel = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(default));
    match std::env::var_os(OUT_ENV) {
        Some(root) if rel.is_relative() => PathBuf::from(root).join(rel),
        _ => rel,
    }
}

/// Writes `bytes` through a temporary file in the same directory and renames it.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    s.push('\n');
    atomic_write(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// One row per node in storage order: `x1,…,xd,value`.
pub fn field_csv(f: &Field) -> String {
    let g = f.grid();
    let d = g.dim();
    let mut s = String::new();
    for i in 1..=d {
        let _ = write!(s, "x{i},");
    }
    s.push_str("value\n");
    for idx in 0..g.len() {
        let x = g.coords(idx);
        for v in &x[..d] {
            s.push_str(&num(*v));
            s.push(',');
        }
        s.push_str(&num(f.get(idx)));
        s.push('\n');
    }
    s
}

/// Reads a field written by [`field_csv`] back onto `grid`.
pub fn read_field_csv(path: &Path, grid: GridSpec) -> CliResult<Field> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |message: String| CliError::Schema {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let cols = grid.dim() + 1;
    if header.split(',').count() != cols {
        return Err(bad(format!("expected {cols} columns, header is {header:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    for (row, line) in lines.enumerate() {
        let last = line.rsplit(',').next().unwrap_or("");
        let v: f64 = last.parse().map_err(|_| bad(format!("row {}: bad value {last:?}", row + 2)))?;
        values.push(v);
    }
    Field::from_values(grid, values).map_err(|e| bad(e.to_string()))
}

pub fn polyline_csv(s: &PlanarSet) -> String {
    let arcs = s.arc_edges();
    let mut out = String::from("x,y,next_along_circle\n");
    for (i, p) in s.boundary().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", num(p[0]), num(p[1]), u8::from(arcs.contains(&i)));
    }
    out
}

pub fn profile_csv(p: &MonotonicityProfile) -> String {
    let mut out = String::from("r,value,slack,violation\n");
    for i in 0..p.radii.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(p.radii[i]),
            num(p.values[i]),
            num(p.slack[i]),
            u8::from(p.violations.contains(&i))
        );
    }
    out
}

pub fn improvement_csv(t: &ImprovementTable) -> String {
    let mut out = String::from("k,scale,gamma,theta,eps\n");
    for r in &t.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.k, num(r.scale), num(r.gamma), num(r.theta), num(r.eps));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip() {
        let g = GridSpec::new(3, 1.0 / 8.0).unwrap();
        let f = Field::from_fn(g, |x| x[0].sin() * 1e-3 + x[1] / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("field.csv");
        atomic_write(&path, field_csv(&f).as_bytes()).unwrap();
        assert_eq!(read_field_csv(&path, g).unwrap(), f);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b.txt");
        atomic_write(&path, b"one").unwrap();
        atomic_write(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(std::fs::read_dir(dir.path().join("a")).unwrap().count(), 1);
    }
}
