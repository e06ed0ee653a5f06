//! Machine-readable run outcomes: individual checks and the per-run
//! report. All float serialization into CSV goes through
//! [`format_float`], which prints 17 significant digits so re-parsing
//! reproduces the exact bits.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Passes when value <= bound.
    AtMost,
    /// Passes when value >= bound.
    AtLeast,
    /// Passes when value equals bound bit-for-bit.
    Exactly,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: CheckKind,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            kind: CheckKind::AtMost,
            pass: value <= bound,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            kind: CheckKind::AtLeast,
            pass: value >= bound,
        }
    }

    pub fn exactly(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            kind: CheckKind::Exactly,
            pass: value == bound,
        }
    }

    /// Boolean fact recorded as a check: 1 must equal 1.
    pub fn holds(name: impl Into<String>, condition: bool) -> Self {
        Self::exactly(name, if condition { 1.0 } else { 0.0 }, 1.0)
    }
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub seed: u64,
    pub params: serde_json::Value,
    pub checks: Vec<Check>,
    pub passed: bool,
    pub duration_seconds: f64,
    /// Every file the run wrote, relative to the output directory,
    /// including this report itself.
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// 17 significant digits: enough for f64 round-trip, fixed width-ish for
/// deterministic CSV bytes.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}
