//! Experiment output directories.
//!
//! Every file is written to a temporary sibling and renamed into place, so a
//! failed run never leaves a partial file behind. The manifest is the one
//! file that grows: each run appends a row.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::Result;

pub const SNAPSHOT_FILE: &str = "config.snapshot";
pub const RESULTS_FILE: &str = "results.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.csv";

/// Float formatting shared by every CSV writer: shortest round-trip decimal
/// in the normal range, scientific notation outside it.
pub fn fmt_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Writes `bytes` to `path` through a temporary file and an atomic rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if res.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(res?)
}

/// A CSV table buffered in memory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| std::io::Error::other(e.to_string()).into())
    }
}

/// Everything one experiment run writes.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub snapshot: String,
    pub results: Table,
    pub report: serde_json::Value,
    /// `(suffix, table)` pairs written as `plotdata_<suffix>.csv`.
    pub plots: Vec<(String, Table)>,
}

impl ExperimentOutput {
    /// Writes all files into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_atomic(&dir.join(SNAPSHOT_FILE), self.snapshot.as_bytes())?;
        write_atomic(&dir.join(RESULTS_FILE), &self.results.to_csv()?)?;
        let mut report = serde_json::to_vec_pretty(&self.report)?;
        report.push(b'\n');
        write_atomic(&dir.join(REPORT_FILE), &report)?;
        for (suffix, t) in &self.plots {
            write_atomic(&dir.join(format!("plotdata_{suffix}.csv")), &t.to_csv()?)?;
        }
        Ok(())
    }
}

/// One manifest row.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub config_path: String,
    pub output_dir: String,
    pub root_seed: u64,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(subcommand: &str, config_path: &Path, output_dir: &Path, root_seed: u64) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            subcommand: subcommand.to_string(),
            config_path: config_path.display().to_string(),
            output_dir: output_dir.display().to_string(),
            root_seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }

    /// Appends this row to `dir/manifest.csv`, creating it with a header if absent.
    pub fn append(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut existing = if path.exists() { fs::read(&path)? } else { Vec::new() };
        let mut w = csv::WriterBuilder::new()
            .has_headers(existing.is_empty())
            .from_writer(Vec::new());
        w.serialize(self)?;
        let row = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        existing.extend_from_slice(&row);
        write_atomic(&path, &existing)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.25), "0.25");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(1e-7), "1e-7");
        assert_eq!(fmt_float(2.5e20), "2.5e20");
        assert_eq!(fmt_float(1024.0), "1024");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn atomic_write_and_manifest_append() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"hello").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"hello");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);

        let m = RunManifest::new("rate", Path::new("c.toml"), dir.path(), 3);
        m.append(dir.path()).unwrap();
        m.append(dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("subcommand,config_path"));
    }

    #[test]
    fn table_csv() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
