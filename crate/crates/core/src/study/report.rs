use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use super::config::{ExperimentConfig, StudyKind};
use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Reported without an assertion.
    Info,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    fn label(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "info",
        }
    }
}

// Non-finite values serialize as null; read them back as NaN.
fn nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

fn rows_nan_if_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<Vec<f64>>, D::Error> {
    let raw = Vec::<Vec<Option<f64>>>::deserialize(d)?;
    Ok(raw.into_iter().map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect())
}

/// One reported number together with the operation that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Quantity {
    pub name: String,
    /// Library operation (and ladder entry, where relevant) behind the value.
    pub provenance: String,
    pub expected: Option<f64>,
    #[serde(deserialize_with = "nan_if_null")]
    pub measured: f64,
    pub verdict: Verdict,
}

impl Quantity {
    pub fn new(name: &str, provenance: &str, expected: Option<f64>, measured: f64, verdict: Verdict) -> Self {
        Self { name: name.into(), provenance: provenance.into(), expected, measured, verdict }
    }
}

/// Tabular data written as CSV and as two-column plot data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    /// `eps,value` or `i,eps,value`.
    pub header: String,
    pub provenance: String,
    #[serde(deserialize_with = "rows_nan_if_null")]
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub study: StudyKind,
    /// Fully resolved configuration, defaults included.
    pub config: ExperimentConfig,
    pub quantities: Vec<Quantity>,
    pub series: Vec<Series>,
    pub pass: bool,
    /// Names of failed quantities.
    pub failures: Vec<String>,
}

impl StudyReport {
    pub fn new(config: ExperimentConfig, quantities: Vec<Quantity>, series: Vec<Series>) -> Self {
        let failures: Vec<String> =
            quantities.iter().filter(|q| q.verdict == Verdict::Fail).map(|q| q.name.clone()).collect();
        Self {
            schema_version: super::SCHEMA_VERSION,
            study: config.study,
            config,
            quantities,
            series,
            pass: failures.is_empty(),
            failures,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

fn fmt_num(v: f64) -> String {
    // Shortest round-trip form keeps the files deterministic and lossless.
    format!("{v:?}")
}

/// Writes `report.json`, one CSV and one `.dat` plot file per series.
pub fn write_outputs(report: &StudyReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    for s in &report.series {
        let mut csv = format!("{}\n", s.header);
        let mut dat = format!("# {}\n", s.header.split(',').collect::<Vec<_>>().join(" "));
        for row in &s.rows {
            let cells: Vec<String> = row.iter().map(|&v| fmt_num(v)).collect();
            csv.push_str(&cells.join(","));
            csv.push('\n');
            dat.push_str(&cells.join(" "));
            dat.push('\n');
        }
        fs::write(dir.join(format!("{}.csv", s.name)), csv)?;
        fs::write(dir.join(format!("{}.dat", s.name)), dat)?;
    }
    Ok(())
}

pub fn read_report(dir: &Path) -> Result<StudyReport> {
    let path = if dir.is_dir() { dir.join("report.json") } else { dir.to_path_buf() };
    let text = fs::read_to_string(&path)?;
    let report: StudyReport = serde_json::from_str(&text)?;
    if report.schema_version != super::SCHEMA_VERSION {
        return Err(LabError::Config(format!(
            "{} has schema version {}, expected {}",
            path.display(),
            report.schema_version,
            super::SCHEMA_VERSION
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub study: String,
    pub quantity: String,
    pub expected: Option<f64>,
    pub measured: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub pass: bool,
}

/// One table over several reports, in input order then quantity order.
pub fn summarize(reports: &[StudyReport]) -> Result<Summary> {
    if reports.is_empty() {
        return Err(LabError::Config("report needs at least one study output".into()));
    }
    let rows: Vec<SummaryRow> = reports
        .iter()
        .flat_map(|r| {
            r.quantities.iter().map(move |q| SummaryRow {
                study: r.study.name().to_string(),
                quantity: q.name.clone(),
                expected: q.expected,
                measured: q.measured,
                verdict: q.verdict,
            })
        })
        .collect();
    let pass = reports.iter().all(|r| r.pass);
    Ok(Summary { rows, pass })
}

impl Summary {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<15} {:<36} {:>14} {:>14}  verdict", "study", "quantity", "expected", "measured");
        for r in &self.rows {
            let exp = r.expected.map_or_else(|| "-".to_string(), |v| format!("{v:.6}"));
            let _ = writeln!(
                out,
                "{:<15} {:<36} {:>14} {:>14.6}  {}",
                r.study,
                r.quantity,
                exp,
                r.measured,
                r.verdict.label()
            );
        }
        let _ = writeln!(out, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}
