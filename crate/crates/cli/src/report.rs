//! Machine-readable run reports and CSV field dumps.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

/// Summary of one subcommand run. Serialized deterministically (sorted
/// keys, no timestamps) so identical configs produce byte-identical output;
/// the timestamp goes to a separate metadata file.
pub struct Report {
    pub subcommand: String,
    pub config: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, Value>,
    pub failures: Vec<String>,
}

impl Report {
    pub fn new(subcommand: &str) -> Self {
        Report {
            subcommand: subcommand.to_string(),
            config: BTreeMap::new(),
            metrics: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Into<Value>) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    /// Records a named check; a failed check puts the metric name in the
    /// failures list, which drives the exit status.
    pub fn check(&mut self, metric: &str, ok: bool) {
        if !ok {
            self.failures.push(metric.to_string());
        }
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "subcommand": self.subcommand,
            "config": self.config,
            "metrics": self.metrics,
            "pass": self.pass(),
            "failures": self.failures,
        })
    }

    /// Writes `report.json` plus a `metadata.json` carrying the timestamp.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let report = serde_json::to_string_pretty(&self.to_json()).expect("report is valid JSON");
        fs::write(dir.join("report.json"), report + "\n")?;
        let stamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let meta = json!({ "unix_timestamp": stamp, "tool_version": env!("CARGO_PKG_VERSION") });
        fs::write(
            dir.join("metadata.json"),
            serde_json::to_string_pretty(&meta).expect("metadata is valid JSON") + "\n",
        )
    }
}

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV dump of point samples: header `x1,...,xn,value`.
pub fn write_point_csv(
    path: &Path,
    dim: usize,
    rows: &[(Vec<f64>, f64)],
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = fs::File::create(path)?;
    let header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    writeln!(out, "{},value", header.join(","))?;
    for (coords, value) in rows {
        let cells: Vec<String> = coords.iter().map(|c| fmt17(*c)).collect();
        writeln!(out, "{},{}", cells.join(","), fmt17(*value))?;
    }
    Ok(())
}

/// CSV dump of an axisymmetric grid: header `r,z,value`.
pub fn write_grid_csv(
    path: &Path,
    nodes: impl Iterator<Item = (f64, f64, f64)>,
) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = fs::File::create(path)?;
    writeln!(out, "r,z,value")?;
    for (r, z, value) in nodes {
        writeln!(out, "{},{},{}", fmt17(r), fmt17(z), fmt17(value))?;
    }
    Ok(())
}
