//! Campaign configuration: parsing, defaults and validation.

use std::collections::BTreeSet;

use abp_core::report::scale_of;
use abp_core::VerificationReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ops::Operation;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Output directory used when `--out` is absent.
    #[serde(default)]
    pub output: Option<String>,
    /// Seed for checks that do not set their own.
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    pub id: String,
    pub module: String,
    pub operation: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Replaces the tolerance of every report produced by the check.
    #[serde(default)]
    pub tolerance: Option<f64>,
    /// Extra requirement on every report produced by the check.
    #[serde(default)]
    pub expect: Option<Expectation>,
}

/// Outcome a check is expected to have beyond passing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expectation {
    /// Equality flag set and `|deficit|` within `abs`, or `rel · max(1, |lhs|, |rhs|)`, or the report tolerance.
    Equality {
        #[serde(default)]
        abs: Option<f64>,
        #[serde(default)]
        rel: Option<f64>,
    },
    /// `deficit > max(min_deficit, quad_factor · quad_error_est)` and no equality flag.
    Strict {
        #[serde(default)]
        min_deficit: f64,
        #[serde(default)]
        quad_factor: f64,
    },
    /// `|deficit − target| ≤ abs`.
    Deficit { target: f64, abs: f64 },
}

impl Expectation {
    pub fn apply(&self, r: VerificationReport) -> VerificationReport {
        match self {
            Expectation::Equality { abs, rel } => {
                let bound = match (abs, rel) {
                    (Some(a), _) => *a,
                    (None, Some(q)) => q * scale_of(r.lhs, r.rhs),
                    (None, None) => r.tolerance,
                };
                let ok = r.equality && r.deficit.abs() <= bound;
                r.with("expect.bound", bound).and_require(ok, "expect:equality")
            }
            Expectation::Strict { min_deficit, quad_factor } => {
                let quad = r.meta_f64("quad_error_est").unwrap_or(0.0);
                let bound = min_deficit.max(quad_factor * quad);
                let ok = !r.equality && r.deficit > bound;
                r.with("expect.bound", bound).and_require(ok, "expect:strict")
            }
            Expectation::Deficit { target, abs } => {
                let ok = (r.deficit - target).abs() <= *abs;
                r.with("expect.target", *target).and_require(ok, "expect:deficit")
            }
        }
    }
}

/// Command-line adjustments applied before validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub resolution_scale: f64,
}

impl Default for Overrides {
    fn default() -> Self {
        Self { seed: None, resolution_scale: 1.0 }
    }
}

/// A validated check ready to run.
#[derive(Debug, Clone)]
pub struct PlannedCheck {
    pub id: String,
    pub module: String,
    pub operation_name: String,
    pub operation: Operation,
    pub seed: u64,
    pub tolerance: Option<f64>,
    pub expect: Option<Expectation>,
    /// Canonical JSON of the resolved inputs.
    pub canonical_inputs: String,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Validation(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "parse error: {m}"),
            ConfigError::Validation(m) => write!(f, "validation error: {m}"),
        }
    }
}

pub fn parse_config(text: &str) -> Result<CampaignConfig, ConfigError> {
    serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
}

pub fn plan(config: &CampaignConfig, overrides: &Overrides) -> Result<Vec<PlannedCheck>, ConfigError> {
    if config.schema_version != SCHEMA_VERSION {
        return Err(ConfigError::Validation(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            config.schema_version
        )));
    }
    if !(overrides.resolution_scale > 0.0 && overrides.resolution_scale.is_finite()) {
        return Err(ConfigError::Validation(format!("resolution scale must be positive, got {}", overrides.resolution_scale)));
    }
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(config.checks.len());
    for spec in &config.checks {
        if spec.id.is_empty() || !seen.insert(spec.id.clone()) {
            return Err(ConfigError::Validation(format!("check id '{}' is empty or duplicated", spec.id)));
        }
        if let Some(t) = spec.tolerance {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(ConfigError::Validation(format!("check '{}': tolerance must be a nonnegative number", spec.id)));
            }
        }
        let seed = overrides.seed.or(spec.seed).unwrap_or(config.seed);
        let operation = Operation::parse(&spec.module, &spec.operation, &spec.params, overrides.resolution_scale)
            .map_err(|e| ConfigError::Validation(format!("check '{}': {e}", spec.id)))?;
        let canonical_inputs = serde_json::json!({
            "module": spec.module,
            "operation": spec.operation,
            "params": operation.resolved_params(),
            "seed": seed,
            "tolerance": spec.tolerance,
            "expect": spec.expect,
        })
        .to_string();
        out.push(PlannedCheck {
            id: spec.id.clone(),
            module: spec.module.clone(),
            operation_name: spec.operation.clone(),
            operation,
            seed,
            tolerance: spec.tolerance,
            expect: spec.expect.clone(),
            canonical_inputs,
        });
    }
    Ok(out)
}
