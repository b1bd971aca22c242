//! Report bundles: `<command>.json`, `<command>.csv` and `manifest.json`.

use std::path::{Path, PathBuf};

use breakcircle::Real;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// A CSV series with a description for every column.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<(&'static str, &'static str)>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[(&'static str, &'static str)]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let bad = |e: csv::Error| CliError::invariant("csv", e);
        w.write_record(self.columns.iter().map(|c| c.0)).map_err(bad)?;
        for r in &self.rows {
            w.write_record(r).map_err(bad)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::invariant("csv", e))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Output of one subcommand.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub command: &'static str,
    pub result: Value,
    pub table: Option<Table>,
    /// Resolved inputs (map specs, rotation number, files read).
    pub inputs: Value,
    /// Set when the run completed but an invariant check failed.
    pub violation: Option<String>,
}

impl Bundle {
    pub fn new(command: &'static str, result: impl Serialize) -> Self {
        Bundle {
            command,
            result: serde_json::to_value(result).expect("results serialize"),
            table: None,
            inputs: json!({}),
            violation: None,
        }
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    pub fn with_inputs(mut self, inputs: Value) -> Self {
        self.inputs = inputs;
        self
    }

    /// Records a failed check; the bundle is still written.
    pub fn violated_if(mut self, failed: bool, msg: impl Into<String>) -> Self {
        if failed && self.violation.is_none() {
            self.violation = Some(msg.into());
        }
        self
    }
}

/// Run-level facts recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub precision: usize,
    pub seed: u64,
    pub args: Value,
    pub config: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u128>,
}

pub fn manifest(bundle: &Bundle, run: &RunInfo) -> Value {
    let mut files = json!({ "json": format!("{}.json", bundle.command) });
    let mut columns = Value::Null;
    if let Some(t) = &bundle.table {
        files["csv"] = json!(format!("{}.csv", bundle.command));
        columns = t.columns.iter().map(|(n, d)| json!({"name": n, "doc": d})).collect();
    }
    let mut m = json!({
        "tool": "breakcircle",
        "version": env!("CARGO_PKG_VERSION"),
        "command": bundle.command,
        "args": run.args,
        "config": run.config,
        "inputs": bundle.inputs,
        "precision": run.precision,
        "seed": run.seed,
        "files": files,
        "columns": columns,
        "invariant_violation": bundle.violation,
    });
    if let Some(ms) = run.wall_time_ms {
        m["wall_time_ms"] = json!(ms);
    }
    m
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize") + "\n"
}

pub fn write(dir: &Path, bundle: &Bundle, run: &RunInfo) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut out = Vec::new();
    let mut put = |name: String, text: String| -> Result<(), CliError> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| CliError::io(&p, e))?;
        out.push(p);
        Ok(())
    };
    put(format!("{}.json", bundle.command), pretty(&bundle.result))?;
    if let Some(t) = &bundle.table {
        put(format!("{}.csv", bundle.command), t.to_csv()?)?;
    }
    put("manifest.json".into(), pretty(&manifest(bundle, run)))?;
    Ok(out)
}

pub fn json_text(v: &Value) -> String {
    pretty(v)
}

/// Full-precision decimal of a working-precision value.
pub fn full(x: &Real) -> String {
    x.to_decimal()
}

/// Shortest round-trip decimal of a double.
pub fn float(x: f64) -> String {
    format!("{x:?}")
}

/// Rounded companion of a numeric column.
pub fn display(x: f64) -> String {
    format!("{x:.6}")
}
