//! Per-method results and their pairwise discrepancies.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralFlowReport {
    pub values: BTreeMap<String, f64>,
    /// `|value(a) − value(b)|` keyed `"a:b"` with `a < b`.
    pub discrepancies: BTreeMap<String, f64>,
    pub diagnostics: BTreeMap<String, serde_json::Value>,
    pub corrections: BTreeMap<String, f64>,
    pub version: String,
}

impl SpectralFlowReport {
    pub fn new() -> Self {
        SpectralFlowReport {
            version: crate::VERSION.to_string(),
            ..Default::default()
        }
    }

    pub fn insert(&mut self, method: &str, value: f64, diagnostics: serde_json::Value) {
        self.values.insert(method.to_string(), value);
        self.diagnostics.insert(method.to_string(), diagnostics);
        self.recompute_discrepancies();
    }

    pub fn recompute_discrepancies(&mut self) {
        self.discrepancies = pairwise(&self.values);
    }

    /// Errors if the stored discrepancies do not match the values.
    pub fn check_consistency(&self) -> Result<()> {
        if pairwise(&self.values) == self.discrepancies {
            Ok(())
        } else {
            Err(Error::Consistency("report discrepancies are stale".into()))
        }
    }

    pub fn max_discrepancy(&self) -> f64 {
        self.discrepancies.values().fold(0.0, |m, &d| m.max(d))
    }

    /// Largest discrepancy involving `method`.
    pub fn max_discrepancy_of(&self, method: &str) -> f64 {
        self.discrepancies
            .iter()
            .filter(|(k, _)| k.split(':').any(|m| m == method))
            .fold(0.0, |m, (_, &d)| m.max(d))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One row per method: `method,value,max_discrepancy`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["method", "value", "max_discrepancy"]).map_err(io)?;
        for (m, v) in &self.values {
            w.write_record([m.clone(), format!("{v:.17e}"), format!("{:.17e}", self.max_discrepancy_of(m))])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn pairwise(values: &BTreeMap<String, f64>) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    let entries: Vec<_> = values.iter().collect();
    for (i, (a, va)) in entries.iter().enumerate() {
        for (b, vb) in &entries[i + 1..] {
            out.insert(format!("{a}:{b}"), (*va - *vb).abs());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discrepancies_follow_values() {
        let mut r = SpectralFlowReport::new();
        r.insert("winding", 1.0, serde_json::json!({}));
        r.insert("crossing", 1.25, serde_json::json!({}));
        r.insert("analytic", 1.0, serde_json::json!({}));
        assert_eq!(r.discrepancies["crossing:winding"], 0.25);
        assert_eq!(r.discrepancies["analytic:winding"], 0.0);
        assert_eq!(r.max_discrepancy_of("analytic"), 0.25);
        r.check_consistency().unwrap();
        r.values.insert("heat".into(), 0.0);
        assert!(r.check_consistency().is_err());
    }

    #[test]
    fn csv_rows() {
        let mut r = SpectralFlowReport::new();
        r.insert("winding", 1.0, serde_json::json!({}));
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("method,value,max_discrepancy"));
    }
}
