//! Campaign report records and their JSON, CSV and timing outputs.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use abp_core::VerificationReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    /// `<check id>::<report name>`, unique within a report.
    pub check_id: String,
    pub id: String,
    pub module: String,
    pub operation: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON of the resolved inputs.
    pub inputs_digest: String,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub deficit: Option<f64>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    pub equality: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub metadata: BTreeMap<String, Value>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Record {
    pub fn from_report(check_id: String, head: RecordHead, r: VerificationReport) -> Self {
        let mut metadata = r.metadata;
        if !r.lhs.is_finite() || !r.rhs.is_finite() || !r.deficit.is_finite() {
            metadata.insert("non_finite".into(), Value::String(format!("lhs={} rhs={} deficit={}", r.lhs, r.rhs, r.deficit)));
        }
        Self {
            check_id,
            id: head.id,
            module: head.module,
            operation: head.operation,
            seed: head.seed,
            inputs_digest: head.inputs_digest,
            lhs: finite(r.lhs),
            rhs: finite(r.rhs),
            deficit: finite(r.deficit),
            tolerance: finite(r.tolerance),
            pass: r.pass,
            equality: r.equality,
            error: None,
            metadata,
        }
    }

    pub fn from_error(head: RecordHead, error: String) -> Self {
        Self {
            check_id: format!("{}::error", head.id),
            id: head.id,
            module: head.module,
            operation: head.operation,
            seed: head.seed,
            inputs_digest: head.inputs_digest,
            lhs: None,
            rhs: None,
            deficit: None,
            tolerance: None,
            pass: false,
            equality: false,
            error: Some(error),
            metadata: BTreeMap::new(),
        }
    }
}

/// Fields shared by every record of one check.
#[derive(Debug, Clone)]
pub struct RecordHead {
    pub id: String,
    pub module: String,
    pub operation: String,
    pub seed: u64,
    pub inputs_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub report_schema_version: u32,
    pub campaign: String,
    pub description: String,
    pub seed_override: Option<u64>,
    pub resolution_scale: f64,
    pub summary: Summary,
    pub records: Vec<Record>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub id: String,
    pub runtime_ms: u64,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    check_id: &'a str,
    lhs: Option<f64>,
    rhs: Option<f64>,
    deficit: Option<f64>,
    pass: bool,
}

pub fn to_csv(report: &Report) -> io::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.records {
        w.serialize(CsvRow { check_id: &r.check_id, lhs: r.lhs, rhs: r.rhs, deficit: r.deficit, pass: r.pass })?;
    }
    let bytes = w.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `report.json`, `report.csv` and `timings.json` into `dir`.
pub fn write_outputs(dir: &Path, report: &Report, timings: &[Timing]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)?;
    fs::write(dir.join("report.csv"), to_csv(report)?)?;
    let mut t = serde_json::to_string_pretty(timings)?;
    t.push('\n');
    fs::write(dir.join("timings.json"), t)
}
