use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundReport, ValidityCondition};
use crate::error::{Error, Result};

/// A parameter value: integers stay integers in the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Int(i64),
    Real(f64),
    Text(String),
}

impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}

impl From<u32> for Param {
    fn from(v: u32) -> Self {
        Param::Int(v as i64)
    }
}

impl From<u64> for Param {
    fn from(v: u64) -> Self {
        Param::Int(v as i64)
    }
}

impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Real(v)
    }
}

impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

/// One result line. Missing numbers (bounds that overflow or do not apply)
/// are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub params: IndexMap<String, Param>,
    pub measured: IndexMap<String, Option<f64>>,
    pub bounds: IndexMap<String, Option<f64>>,
    /// `None` when no inequality applies to the row.
    pub pass: Option<bool>,
    pub validity: Vec<ValidityCondition>,
}

impl ReportRow {
    pub fn new(scenario: &str) -> Self {
        ReportRow {
            scenario: scenario.to_string(),
            params: IndexMap::new(),
            measured: IndexMap::new(),
            bounds: IndexMap::new(),
            pass: None,
            validity: Vec::new(),
        }
    }

    pub fn param(mut self, name: &str, v: impl Into<Param>) -> Self {
        self.params.insert(name.to_string(), v.into());
        self
    }

    pub fn measured(mut self, name: &str, v: impl Into<Option<f64>>) -> Self {
        self.measured.insert(name.to_string(), v.into().filter(|x| x.is_finite()));
        self
    }

    pub fn bound(mut self, name: &str, v: impl Into<Option<f64>>) -> Self {
        self.bounds.insert(name.to_string(), v.into().filter(|x| x.is_finite()));
        self
    }

    /// Both forms of an evaluated bound plus its validity conditions.
    pub fn bound_report(self, value: &str, log: &str, b: &BoundReport) -> Self {
        let mut row = self.bound(value, b.value()).bound(log, b.log_value);
        row.validity.extend(b.validity_conditions.iter().cloned());
        row
    }

    pub fn pass(mut self, p: Option<bool>) -> Self {
        self.pass = p;
        self
    }

    fn header(&self, with_pass: bool) -> Vec<String> {
        let mut h = vec!["scenario".to_string()];
        h.extend(self.params.keys().cloned());
        h.extend(self.measured.keys().cloned());
        h.extend(self.bounds.keys().cloned());
        if with_pass {
            h.push("pass".into());
        }
        h
    }

    fn cells(&self, with_pass: bool) -> Vec<String> {
        let mut c = vec![self.scenario.clone()];
        c.extend(self.params.values().map(|p| match p {
            Param::Int(v) => v.to_string(),
            Param::Real(v) => number(*v),
            Param::Text(s) => s.clone(),
        }));
        let opt = |v: &Option<f64>| v.map(number).unwrap_or_default();
        c.extend(self.measured.values().map(opt));
        c.extend(self.bounds.values().map(opt));
        if with_pass {
            c.push(self.pass.map(|p| p.to_string()).unwrap_or_default());
        }
        c
    }
}

/// 17 significant digits.
fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rows of one scenario under a declared header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub header: Vec<String>,
    pub rows: Vec<ReportRow>,
}

impl Report {
    pub fn new(header: &[&str], rows: Vec<ReportRow>) -> Result<Self> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        let with_pass = header.last().is_some_and(|h| h == "pass");
        for (k, r) in rows.iter().enumerate() {
            if r.header(with_pass) != header || (!with_pass && r.pass.is_some()) {
                return Err(Error::Argument(format!(
                    "row {k} has columns {:?}, expected {:?}",
                    r.header(with_pass),
                    header
                )));
            }
        }
        Ok(Report { header, rows })
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.pass == Some(false)).count()
    }

    fn with_pass(&self) -> bool {
        self.header.last().is_some_and(|h| h == "pass")
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r.cells(self.with_pass()))?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.csv_bytes()?)?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.json_string()?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MOMENT_HEADER: [&str; 8] = ["scenario", "i", "s", "t", "M_probe", "M_bound", "log_M_bound", "pass"];

    #[test]
    fn empty_report_is_header_only() {
        let r = Report::new(&MOMENT_HEADER, vec![]).unwrap();
        assert_eq!(r.csv_bytes().unwrap(), b"scenario,i,s,t,M_probe,M_bound,log_M_bound,pass\n");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let row = ReportRow::new("moment-check")
            .param("i", 3usize)
            .param("s", 2u32)
            .param("t", 0.1 + 0.2)
            .measured("M_probe", 1.0 / 3.0)
            .bound("M_bound", None)
            .bound("log_M_bound", 1234.5678901234567)
            .pass(Some(true));
        let r = Report::new(&MOMENT_HEADER, vec![row]).unwrap();
        let back: Vec<ReportRow> = serde_json::from_str(&r.json_string().unwrap()).unwrap();
        assert_eq!(back, r.rows);
        let csv = String::from_utf8(r.csv_bytes().unwrap()).unwrap();
        assert!(csv.ends_with("moment-check,3,2,3.0000000000000004e-1,3.3333333333333331e-1,,1.2345678901234567e3,true\n"));
    }

    #[test]
    fn mismatched_row_rejected() {
        let row = ReportRow::new("moment-check").param("i", 0usize);
        assert!(Report::new(&MOMENT_HEADER, vec![row]).is_err());
    }
}
