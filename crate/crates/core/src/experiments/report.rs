use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Row = Vec<Option<f64>>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

/// Tabulated experiment output. Missing cells are `None` (`null` in JSON,
/// empty in CSV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub version: String,
    pub params: serde_json::Value,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub verdict: Verdict,
    pub timing_seconds: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Header lines starting with `#` carry everything but the table.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# name: {}", self.name);
        let _ = writeln!(out, "# version: {}", self.version);
        let _ = writeln!(out, "# params: {}", self.params);
        let _ = writeln!(
            out,
            "# verdict: {} ({})",
            if self.verdict.passed { "pass" } else { "fail" },
            self.verdict.detail
        );
        let _ = writeln!(out, "# timing_seconds: {}", self.timing_seconds);
        for note in &self.notes {
            let _ = writeln!(out, "# note: {note}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map(|v| v.to_string()).unwrap_or_default())
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Reads back the table of [`to_csv`](Self::to_csv).
    pub fn parse_csv_table(text: &str) -> Result<(Vec<String>, Vec<Row>)> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#'));
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Parse("missing CSV header".into()))?
            .split(',')
            .map(str::to_owned)
            .collect();
        let rows = lines
            .map(|line| {
                line.split(',')
                    .map(|cell| {
                        if cell.is_empty() {
                            Ok(None)
                        } else {
                            cell.parse::<f64>()
                                .map(Some)
                                .map_err(|e| Error::Parse(format!("cell {cell:?}: {e}")))
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((columns, rows))
    }

    /// Whitespace-separated `x y` pairs for plotting; rows with a missing
    /// cell are skipped.
    pub fn plot_data(&self, x: &str, y: &str) -> Result<String> {
        let missing = |c: &str| Error::Parse(format!("no column {c:?} in report {}", self.name));
        let xs = self.column(x).ok_or_else(|| missing(x))?;
        let ys = self.column(y).ok_or_else(|| missing(y))?;
        let mut out = format!("# {x} {y}\n");
        for (a, b) in xs.into_iter().zip(ys) {
            if let (Some(a), Some(b)) = (a, b) {
                let _ = writeln!(out, "{a} {b}");
            }
        }
        Ok(out)
    }
}
