//! Experiment reports: verdicts with their tolerances, classifications, and
//! CSV tables.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::Result;
use crate::lattice::csv_error;

/// Accepted range for a measured value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerance {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

impl Tolerance {
    fn admits(&self, x: f64) -> bool {
        !x.is_nan() && self.lower.is_none_or(|l| x >= l) && self.upper.is_none_or(|u| x <= u)
    }
}

/// A pass/fail check that decides the exit status.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: Tolerance,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        name: impl Into<String>,
        measured: f64,
        tolerance: Tolerance,
        detail: impl Into<String>,
    ) -> Self {
        Verdict {
            name: name.into(),
            passed: tolerance.admits(measured),
            measured,
            tolerance,
            detail: detail.into(),
        }
    }

    pub fn at_most(
        name: impl Into<String>,
        measured: f64,
        upper: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict::new(
            name,
            measured,
            Tolerance {
                lower: None,
                upper: Some(upper),
            },
            detail,
        )
    }

    pub fn at_least(
        name: impl Into<String>,
        measured: f64,
        lower: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict::new(
            name,
            measured,
            Tolerance {
                lower: Some(lower),
                upper: None,
            },
            detail,
        )
    }

    pub fn within(
        name: impl Into<String>,
        measured: f64,
        lower: f64,
        upper: f64,
        detail: impl Into<String>,
    ) -> Self {
        Verdict::new(
            name,
            measured,
            Tolerance {
                lower: Some(lower),
                upper: Some(upper),
            },
            detail,
        )
    }

    /// A boolean check, recorded as `1` or `0` against the lower bound `1`.
    pub fn holds(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Verdict::at_least(name, if ok { 1.0 } else { 0.0 }, 1.0, detail)
    }
}

/// A property of the input found by a decision rule; informative, it does
/// not affect the exit status by itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub subject: String,
    pub diagnostic: String,
    pub property: String,
    pub holds: bool,
    pub measured: f64,
    pub threshold: f64,
    pub rule: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub unix_time: u64,
}

impl Header {
    pub fn now() -> Self {
        Header {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            unix_time: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// `report.json`. Everything except `header` is a pure function of the
/// inputs and the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub header: Header,
    pub experiment: String,
    pub inputs: Value,
    pub results: Map<String, Value>,
    pub classifications: Vec<Classification>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

impl Report {
    pub fn new(experiment: &str, inputs: Value) -> Self {
        Report {
            header: Header::now(),
            experiment: experiment.to_string(),
            inputs,
            results: Map::new(),
            classifications: Vec::new(),
            verdicts: Vec::new(),
            passed: true,
        }
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.passed &= v.passed;
        self.verdicts.push(v);
    }

    pub fn classify(&mut self, c: Classification) {
        self.classifications.push(c);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts.iter().filter(|v| !v.passed)
    }

    /// The report without its header, for reproducibility comparisons.
    pub fn without_header(&self) -> Result<Value> {
        let mut v = serde_json::to_value(self)?;
        if let Value::Object(m) = &mut v {
            m.remove("header");
        }
        Ok(v)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }
}

/// Rows of formatted cells written as `<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push<I, S>(&mut self, row: I)
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        let row: Vec<String> = row.into_iter().map(|c| c.to_string()).collect();
        debug_assert_eq!(row.len(), self.columns.len(), "table {}", self.name);
        self.rows.push(row);
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut w =
            csv::Writer::from_path(dir.join(format!("{}.csv", self.name))).map_err(csv_error)?;
        w.write_record(&self.columns).map_err(csv_error)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_respect_bounds() {
        assert!(Verdict::at_most("a", 1e-9, 1e-8, "").passed);
        assert!(!Verdict::at_most("a", f64::NAN, 1e-8, "").passed);
        assert!(!Verdict::within("b", 2.7, 2.4, 2.6, "").passed);
        assert!(Verdict::holds("c", true, "").passed);
        let mut r = Report::new("x", Value::Null);
        r.verdict(Verdict::at_least("d", 0.0, 1.0, ""));
        assert!(!r.passed);
        assert_eq!(r.failures().count(), 1);
        assert!(r.without_header().unwrap().get("header").is_none());
    }

    #[test]
    fn tables_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t", &["x", "y"]);
        t.push([1.5, 2.0]);
        t.save(dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
        assert_eq!(text, "x,y\n1.5,2\n");
    }
}
