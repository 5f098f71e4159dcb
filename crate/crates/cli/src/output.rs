//! JSON summaries and CSV tables.

use lve_core::verify::{Check, Table};
use serde::Serialize;
use serde_json::Value;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct ConventionLedger {
    pub covariance: &'static str,
    pub cauchy: &'static str,
    pub edge_factor: &'static str,
    pub action: &'static str,
}

pub const LEDGER: ConventionLedger = ConventionLedger {
    covariance: "measure exp(-N Tr H^2); beta=2: E[H_ij H_kl] = delta_il delta_jk/(2N); beta=1: E[H_ii^2] = 1/(2N), E[H_ij^2] = 1/(4N)",
    cauchy: "contour integrals carry 1/(2 pi i); the keyhole contour is positively oriented around the spectrum",
    edge_factor: "each tree edge contributes (1/(2N)) sum_ab d/dK_i,ab d/dK_j,ba",
    action: "S = (1 - beta/2) sum log h'(x_i) + (beta/2) sum_ij log D_ij with D_ij the divided difference of h",
};

/// Rows of a CSV file, already formatted.
#[derive(Debug, Default)]
pub struct Csv {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn from_table(t: &Table) -> Self {
        Self { header: t.columns.clone(), rows: t.rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()).collect() }
    }
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Value,
    pub values: Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub convention_ledger: &'static ConventionLedger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

pub struct Outcome {
    pub values: Value,
    pub checks: Vec<Check>,
    pub csv: Option<Csv>,
}

/// Prints the summary and writes `<command>.json` and `<command>.csv` under `dir`.
pub fn emit(command: &str, inputs: Value, outcome: Outcome, dir: Option<&Path>) -> std::io::Result<bool> {
    let passed = outcome.checks.iter().all(|c| c.passed);
    let mut csv_path: Option<PathBuf> = None;
    if let (Some(dir), Some(csv)) = (dir, &outcome.csv) {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{command}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&csv.header)?;
        for r in &csv.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        csv_path = Some(path);
    }
    let summary = Summary {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        inputs,
        values: outcome.values,
        checks: outcome.checks,
        passed,
        convention_ledger: &LEDGER,
        csv: csv_path.map(|p| p.display().to_string()),
    };
    let text = serde_json::to_string_pretty(&summary)?;
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{command}.json")), &text)?;
    }
    // a closed stdout (e.g. piped into head) is not an error once the files are written
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    for c in summary.checks.iter().filter(|c| !c.passed) {
        eprintln!("failed: {} = {:e} (limit {:e})", c.name, c.value, c.limit);
    }
    Ok(passed)
}
