use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentKind;
use crate::error::{LabError, LabResult};
use crate::fit::SlopeFit;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Real(f64),
    Text(String),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Real(v) => write!(f, "{v}"),
            Cell::Text(v) => f.write_str(v),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v.into())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

/// One table row. The trailing `runtime_s` column is filled from `runtime_s`
/// only when the report records runtimes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub config_hash: String,
    pub cells: Vec<Cell>,
    pub runtime_s: f64,
}

/// A fitted rate, optionally judged against `target ± tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeRecord {
    pub curve: String,
    pub fit: SlopeFit,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
}

impl SlopeRecord {
    pub fn passed(&self) -> Option<bool> {
        Some((self.fit.slope - self.target?).abs() <= self.tolerance?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// A plot-ready `(x, y)` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(
        name: impl Into<String>,
        x_label: &str,
        y_label: &str,
        points: Vec<(f64, f64)>,
    ) -> Self {
        Self {
            name: name.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub config_hash: String,
    pub seed: u64,
    /// Grid sizes and other discretization facts, as `(name, value)`.
    pub grids: Vec<(String, f64)>,
    pub record_runtime: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub kind: ExperimentKind,
    pub header: Vec<String>,
    pub rows: Vec<Row>,
    pub slopes: Vec<SlopeRecord>,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub curves: Vec<Curve>,
    pub metadata: Metadata,
}

#[derive(Serialize)]
struct Summary<'a> {
    kind: ExperimentKind,
    config_hash: &'a str,
    seed: u64,
    passed: bool,
    slopes: &'a [SlopeRecord],
    checks: &'a [Check],
    grids: &'a [(String, f64)],
    #[serde(skip_serializing_if = "Option::is_none")]
    runtime_s: Option<f64>,
}

impl ErrorReport {
    pub fn new(kind: ExperimentKind, header: &[&str], metadata: Metadata) -> Self {
        Self {
            kind,
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
            slopes: Vec::new(),
            checks: Vec::new(),
            curves: Vec::new(),
            metadata,
        }
    }

    pub fn config_hash(&self) -> &str {
        &self.metadata.config_hash
    }

    /// Appends a row; `cells` excludes the runtime column.
    pub fn push_row(&mut self, cells: Vec<Cell>, runtime_s: f64) {
        debug_assert_eq!(cells.len() + 1, self.header.len());
        self.rows.push(Row {
            config_hash: self.metadata.config_hash.clone(),
            cells,
            runtime_s,
        });
    }

    /// Records a slope; a targeted slope also becomes a check.
    pub fn push_slope(&mut self, record: SlopeRecord) {
        if let (Some(passed), Some(t), Some(tol)) =
            (record.passed(), record.target, record.tolerance)
        {
            self.checks.push(Check::new(
                format!("slope {}", record.curve),
                passed,
                format!(
                    "slope {:.4} (target {t} ± {tol}), max rel residual {:.3e}",
                    record.fit.slope, record.fit.residual
                ),
            ));
        }
        self.slopes.push(record);
    }

    pub fn push_check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Appends another report of the same experiment and configuration.
    pub fn merge(&mut self, other: ErrorReport) -> LabResult<()> {
        if other.config_hash() != self.config_hash() {
            return Err(LabError::Merge(format!(
                "config hash {} differs from {}",
                other.config_hash(),
                self.config_hash()
            )));
        }
        if other.kind != self.kind || other.header != self.header {
            return Err(LabError::Merge(format!(
                "{} report cannot join a {} report",
                other.kind, self.kind
            )));
        }
        self.rows.extend(other.rows);
        self.slopes.extend(other.slopes);
        self.checks.extend(other.checks);
        self.curves.extend(other.curves);
        Ok(())
    }

    fn row_strings(&self, row: &Row) -> Vec<String> {
        let runtime = if self.metadata.record_runtime {
            format!("{}", row.runtime_s)
        } else {
            String::new()
        };
        row.cells
            .iter()
            .map(Cell::to_string)
            .chain(std::iter::once(runtime))
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> LabResult<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(&self.header)
            .map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            w.write_record(self.row_strings(row))
                .map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| LabError::io(path, e))
    }

    pub fn summary_json(&self) -> LabResult<String> {
        let summary = Summary {
            kind: self.kind,
            config_hash: self.config_hash(),
            seed: self.metadata.seed,
            passed: self.passed(),
            slopes: &self.slopes,
            checks: &self.checks,
            grids: &self.metadata.grids,
            runtime_s: self
                .metadata
                .record_runtime
                .then(|| self.rows.iter().map(|r| r.runtime_s).sum()),
        };
        serde_json::to_string_pretty(&summary).map_err(|e| LabError::Serialize(e.to_string()))
    }

    /// Writes `<kind>.csv`, `summary.json` and one `.dat` file per curve.
    pub fn write_artifacts(&self, dir: &Path) -> LabResult<Vec<PathBuf>> {
        let mut written = Vec::new();
        let csv_path = dir.join(format!("{}.csv", self.kind));
        self.write_csv(&csv_path)?;
        written.push(csv_path);
        let summary = dir.join("summary.json");
        std::fs::write(&summary, self.summary_json()? + "\n")
            .map_err(|e| LabError::io(&summary, e))?;
        written.push(summary);
        for curve in &self.curves {
            let path = dir.join(format!("{}.dat", curve.name));
            write_curve(curve, self.config_hash(), &path)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> LabError {
    LabError::io(path, std::io::Error::other(e))
}

fn write_curve(curve: &Curve, hash: &str, path: &Path) -> LabResult<()> {
    let file = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    let result = (|| -> std::io::Result<()> {
        writeln!(out, "# {} {}  config {hash}", curve.x_label, curve.y_label)?;
        for (x, y) in &curve.points {
            writeln!(out, "{x} {y}")?;
        }
        out.flush()
    })();
    result.map_err(|e| LabError::io(path, e))
}
