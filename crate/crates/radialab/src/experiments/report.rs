//! Tabular experiment output: canonical ordering, CSV/JSON rendering, and
//! atomic file writes.
//!
//! Reports must come out byte-identical for a given configuration no matter
//! how many workers produced the rows, so rows are sorted on a total order
//! and every float is printed in a fixed, round-trip-exact format.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::fmtnum::g17;

/// One statistic from one experiment cell. `replicate` is the sampling
/// replicate index; deterministic per-d statistics use 0 and cross-replicate
/// aggregates use -1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub shape_id: String,
    pub d: f64,
    pub n: u64,
    pub replicate: i64,
    pub statistic: String,
    pub value: f64,
}

/// A finished experiment: its name, the resolved configuration it ran
/// under, and the statistic rows.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_echo: Vec<(String, String)>,
    pub rows: Vec<ReportRow>,
}

/// On-disk rendering of a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(crate::error::Error::Config(format!(
                "unknown output format {other:?}; use csv or json"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

fn row_order(a: &ReportRow, b: &ReportRow) -> Ordering {
    a.shape_id
        .cmp(&b.shape_id)
        .then(a.d.total_cmp(&b.d))
        .then(a.replicate.cmp(&b.replicate))
        .then(a.statistic.cmp(&b.statistic))
}

impl ExperimentReport {
    /// Sorts rows by (shape, d, replicate, statistic) so output does not
    /// depend on scheduling order.
    pub fn sort_canonical(&mut self) {
        self.rows.sort_by(row_order);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.config_echo {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        out.push_str("experiment,shape_id,d,n,replicate,statistic,value\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                self.experiment,
                row.shape_id,
                g17(row.d),
                row.n,
                row.replicate,
                row.statistic,
                g17(row.value)
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }

    /// Writes the rendered report through a temporary file in the target
    /// directory, so readers never observe a half-written report.
    pub fn write_atomic(&self, path: &Path, format: OutputFormat) -> Result<()> {
        let text = self.render(format);
        let file_name = path
            .file_name()
            .ok_or_else(|| {
                crate::error::Error::Config(format!(
                    "output path {} has no file name",
                    path.display()
                ))
            })?
            .to_owned();
        let mut tmp_name = file_name;
        tmp_name.push(format!(".tmp{}", std::process::id()));
        let tmp = path.with_file_name(tmp_name);
        fs::write(&tmp, text)?;
        if let Err(e) = fs::rename(&tmp, path) {
            let _ = fs::remove_file(&tmp);
            return Err(e.into());
        }
        Ok(())
    }
}
