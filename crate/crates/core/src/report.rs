use std::collections::BTreeMap;

use serde::Serialize;

/// Outcome of a verification: pass/fail, a signed margin and supporting numbers.
///
/// `margin >= 0` means the checked inequality held with that much room.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub certified: bool,
    pub details: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, margin: f64, certified: bool) -> Self {
        Self {
            name: name.into(),
            passed: margin >= 0.0,
            margin,
            certified,
            details: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_detail(mut self, key: impl Into<String>, value: f64) -> Self {
        self.details.insert(key.into(), value);
        self
    }

    pub fn detail(&mut self, key: impl Into<String>, value: f64) {
        self.details.insert(key.into(), value);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    /// Marks the report failed, keeping the margin as computed.
    pub fn fail(&mut self, msg: impl Into<String>) {
        self.passed = false;
        self.notes.push(msg.into());
    }
}

/// How a reported optimum was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    /// Exhaustive grid followed by local polishing from the best grid cells.
    GridCertified,
    /// Multi-start local search only.
    Heuristic,
}

impl Certification {
    pub fn is_certified(self) -> bool {
        matches!(self, Certification::GridCertified)
    }
}
