//! The report document written to standard output.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Serialize, Serializer};

/// A number that stays valid JSON when it is infinite or NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            s.serialize_f64(v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: &'static str,
    pub command: &'static str,
    pub units: &'static str,
    pub values: BTreeMap<String, Num>,
    pub witness: serde_json::Value,
    pub certified: bool,
    pub iterations: Option<usize>,
    pub margins: BTreeMap<String, Num>,
    pub passed: Option<bool>,
    pub converged: bool,
    pub seed: u64,
    pub version: &'static str,
    pub input_sha256: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Collects a report; information quantities are rescaled only when printed.
#[derive(Debug, Clone)]
pub struct Builder {
    values: BTreeMap<String, (f64, bool)>,
    margins: BTreeMap<String, (f64, bool)>,
    pub witness: serde_json::Value,
    pub certified: bool,
    pub iterations: Option<usize>,
    pub passed: Option<bool>,
    pub converged: bool,
    pub notes: Vec<String>,
}

impl Default for Builder {
    fn default() -> Self {
        Self {
            values: BTreeMap::new(),
            margins: BTreeMap::new(),
            witness: serde_json::Value::Null,
            certified: false,
            iterations: None,
            passed: None,
            converged: true,
            notes: Vec::new(),
        }
    }
}

impl Builder {
    /// A value in nats.
    pub fn info(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.insert(key.into(), (v, true));
        self
    }

    /// A dimensionless value.
    pub fn plain(&mut self, key: &str, v: f64) -> &mut Self {
        self.values.insert(key.into(), (v, false));
        self
    }

    pub fn margin(&mut self, key: &str, v: f64, nats: bool) -> &mut Self {
        self.margins.insert(key.into(), (v, nats));
        self
    }

    pub fn witness(&mut self, w: impl Serialize) -> &mut Self {
        self.witness = serde_json::to_value(w).unwrap_or(serde_json::Value::Null);
        self
    }

    pub fn check(&mut self, r: &blkit_core::CheckReport) -> &mut Self {
        self.passed = Some(r.passed);
        self.certified = r.certified;
        self.margin(&r.name, r.margin, true);
        for (k, v) in &r.details {
            self.plain(k, *v);
        }
        self.notes.extend(r.notes.iter().cloned());
        self
    }

    pub fn finish(self, kind: &'static str, command: &'static str, bits: bool, seed: u64, digest: String) -> Report {
        let scale = |m: BTreeMap<String, (f64, bool)>| {
            m.into_iter()
                .map(|(k, (v, nats))| (k, Num(if nats && bits { v / LN_2 } else { v })))
                .collect()
        };
        Report {
            kind,
            command,
            units: if bits { "bits" } else { "nats" },
            values: scale(self.values),
            witness: self.witness,
            certified: self.certified,
            iterations: self.iterations,
            margins: scale(self.margins),
            passed: self.passed,
            converged: self.converged,
            seed,
            version: env!("CARGO_PKG_VERSION"),
            input_sha256: digest,
            notes: self.notes,
        }
    }
}
