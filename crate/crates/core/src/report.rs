//! Named check records and the run report emitted by every experiment.

use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

/// One asserted inequality or identity: `lhs ≤ rhs` (or `|residual| ≤ bound`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    /// `lhs ≤ rhs · (1 + rel_tol)`; the margin is `rhs - lhs`.
    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64, rel_tol: f64) -> Self {
        let pass = lhs.is_finite() && !rhs.is_nan() && lhs <= rhs + rel_tol * rhs.abs();
        Self { name: name.into(), lhs, rhs, margin: rhs - lhs, pass, note: None }
    }

    /// `lhs ≤ rhs + abs_tol`.
    pub fn le_abs(name: impl Into<String>, lhs: f64, rhs: f64, abs_tol: f64) -> Self {
        let pass = lhs.is_finite() && !rhs.is_nan() && lhs <= rhs + abs_tol;
        Self { name: name.into(), lhs, rhs, margin: rhs - lhs, pass, note: None }
    }

    /// Compares logarithms, for sides that overflow `f64`.
    pub fn le_log(name: impl Into<String>, ln_lhs: f64, ln_rhs: f64, rel_tol: f64) -> Self {
        let pass = !ln_lhs.is_nan() && !ln_rhs.is_nan() && ln_lhs <= ln_rhs + rel_tol.ln_1p();
        Self { name: name.into(), lhs: ln_lhs, rhs: ln_rhs, margin: ln_rhs - ln_lhs, pass, note: Some("log scale".into()) }
    }

    pub fn flag(name: impl Into<String>, pass: bool, note: impl Into<String>) -> Self {
        let v = if pass { 1.0 } else { 0.0 };
        Self { name: name.into(), lhs: v, rhs: 1.0, margin: v - 1.0, pass, note: Some(note.into()) }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        let note = note.into();
        self.note = Some(match self.note.take() {
            Some(prev) => format!("{prev}; {note}"),
            None => note,
        });
        self
    }

    pub fn prefixed(mut self, prefix: &str) -> Self {
        self.name = format!("{prefix}.{}", self.name);
        self
    }
}

/// Structured result of one experiment. Contains no timing so that reruns
/// are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config_hash: String,
    pub tool_version: String,
    pub records: Vec<CheckRecord>,
    pub tables: serde_json::Map<String, serde_json::Value>,
}

impl RunReport {
    pub fn new(experiment: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.into(),
            config_hash: config_hash.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            records: Vec::new(),
            tables: serde_json::Map::new(),
        }
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = CheckRecord>) {
        self.records.extend(rs);
    }

    pub fn table<T: Serialize>(&mut self, name: &str, value: &T) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        self.tables.insert(name.to_string(), v);
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.records.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_and_log_comparisons() {
        assert!(CheckRecord::le("x", 1.05, 1.0, 0.1).pass);
        assert!(!CheckRecord::le("x", 1.2, 1.0, 0.1).pass);
        assert!(!CheckRecord::le("x", f64::NAN, 1.0, 0.1).pass);
        assert!(CheckRecord::le_log("x", 800.0, 900.0, 0.0).pass);
        assert!(CheckRecord::le_abs("x", 1e-9, 0.0, 1e-8).pass);
    }

    #[test]
    fn report_has_schema_version() {
        let mut r = RunReport::new("t", "abc");
        r.push(CheckRecord::flag("f", true, "ok"));
        let j = r.to_json();
        assert!(j.contains("\"schema_version\": 1"));
        assert!(r.all_pass());
    }
}
