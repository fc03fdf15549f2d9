//! Uniform result record for every inequality or identity check.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Outcome of a single numerical check.
///
/// `deficit` is always oriented so that a valid inequality has `deficit >= 0`
/// and `pass` is `deficit >= -tolerance`. Residual-type checks store the
/// negated residual as the deficit, so the same rule applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
    pub deficit: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Set when the input is (numerically) one of the characterized equality cases.
    pub equality: bool,
    /// Seeds, grid sizes and diagnostic quantities. Sorted keys keep the JSON stable.
    pub metadata: BTreeMap<String, Value>,
}

impl VerificationReport {
    /// Report for an inequality `smaller <= larger`.
    pub fn inequality(check: impl Into<String>, smaller: f64, larger: f64, tolerance: f64) -> Self {
        let deficit = larger - smaller;
        Self {
            check: check.into(),
            lhs: smaller,
            rhs: larger,
            deficit,
            tolerance,
            pass: deficit >= -tolerance,
            equality: false,
            metadata: BTreeMap::new(),
        }
    }

    /// Report for a deficit computed directly; `lhs`/`rhs` are recorded as given.
    pub fn from_deficit(check: impl Into<String>, lhs: f64, rhs: f64, deficit: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            lhs,
            rhs,
            deficit,
            tolerance,
            pass: deficit >= -tolerance,
            equality: false,
            metadata: BTreeMap::new(),
        }
    }

    /// Report for a residual that must not exceed `tolerance`.
    pub fn residual(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            lhs: residual,
            rhs: tolerance,
            deficit: -residual,
            tolerance,
            pass: residual.is_finite() && residual <= tolerance,
            equality: false,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_equality(mut self, equality: bool) -> Self {
        self.equality = equality;
        self
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    /// Combine this report with another requirement: both must pass.
    pub fn and_require(mut self, other_pass: bool, label: &str) -> Self {
        if !other_pass {
            self.pass = false;
        }
        self.metadata.insert(format!("require:{label}"), Value::Bool(other_pass));
        self
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(Value::as_f64)
    }
}

/// Default tolerance scale: `max(1, |lhs|, |rhs|)`.
pub fn scale_of(a: f64, b: f64) -> f64 {
    1.0f64.max(a.abs()).max(b.abs())
}
