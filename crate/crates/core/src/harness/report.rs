//! Result rows and their CSV form.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::path_sim::MCEstimate;

pub const CSV_HEADER: [&str; 7] = ["experiment", "params", "estimate", "stderr", "target", "pass", "seconds"];

/// One line of experiment output.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub params: String,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub pass: bool,
    pub seconds: f64,
}

impl ResultRow {
    /// A deterministic row with no target.
    pub fn value(experiment: &str, params: impl Into<String>, estimate: f64, pass: bool) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: params.into(),
            estimate,
            stderr: 0.0,
            target: None,
            pass,
            seconds: 0.0,
        }
    }

    /// A Monte Carlo row gated at `k` standard errors around `target`.
    pub fn gated(experiment: &str, params: impl Into<String>, est: MCEstimate, target: f64, k: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: params.into(),
            estimate: est.mean,
            stderr: est.stderr,
            target: Some(target),
            pass: est.within(target, k),
            seconds: 0.0,
        }
    }

    /// A Monte Carlo row whose pass flag is decided elsewhere.
    pub fn estimate(experiment: &str, params: impl Into<String>, est: MCEstimate, pass: bool) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: params.into(),
            estimate: est.mean,
            stderr: est.stderr,
            target: None,
            pass,
            seconds: 0.0,
        }
    }

    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }
}

/// Serialized form: floats as 17 significant digits.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    experiment: String,
    params: String,
    estimate: String,
    stderr: String,
    target: String,
    pass: bool,
    seconds: String,
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

impl From<&ResultRow> for CsvRow {
    fn from(r: &ResultRow) -> Self {
        Self {
            experiment: r.experiment.clone(),
            params: r.params.clone(),
            estimate: fmt_float(r.estimate),
            stderr: fmt_float(r.stderr),
            target: r.target.map(fmt_float).unwrap_or_default(),
            pass: r.pass,
            seconds: format!("{:.3}", r.seconds),
        }
    }
}

fn parse_float(field: &str, text: &str) -> Result<f64> {
    text.parse()
        .map_err(|_| crate::error::Error::Config(format!("column {field}: `{text}` is not a number")))
}

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER)?;
    }
    for r in rows {
        w.serialize(CsvRow::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(crate::error::Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(ResultRow {
                experiment: row.experiment,
                params: row.params,
                estimate: parse_float("estimate", &row.estimate)?,
                stderr: parse_float("stderr", &row.stderr)?,
                target: match row.target.as_str() {
                    "" => None,
                    t => Some(parse_float("target", t)?),
                },
                pass: row.pass,
                seconds: parse_float("seconds", &row.seconds)?,
            })
        })
        .collect()
}

/// Human-readable summary, one line per row.
pub fn summary(rows: &[ResultRow]) -> String {
    let mut s = String::new();
    for r in rows {
        let target = r.target.map(|t| format!(" target {t:.6e}")).unwrap_or_default();
        s.push_str(&format!(
            "[{}] {} {}: {:.6e} ± {:.2e}{target} ({:.2}s)\n",
            if r.pass { "PASS" } else { "FAIL" },
            r.experiment,
            r.params,
            r.estimate,
            r.stderr,
            r.seconds
        ));
    }
    let passed = rows.iter().filter(|r| r.pass).count();
    s.push_str(&format!("{passed}/{} rows passed\n", rows.len()));
    s
}
