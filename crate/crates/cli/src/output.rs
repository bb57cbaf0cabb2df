use std::io::{self, Write};
use std::path::{Path, PathBuf};

use finsler::metric::MetricError;
use finsler::Error;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_SPEC: i32 = 2;
pub const EXIT_CHART: i32 = 3;

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }

    pub fn spec(message: impl Into<String>) -> Self {
        Failure::new(EXIT_SPEC, message)
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Failure::new(EXIT_SPEC, message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Metric(MetricError::OutOfChart { .. }) | Error::ChartExit { .. } => EXIT_CHART,
            Error::Metric(MetricError::Spec(_) | MetricError::Expr { .. }) | Error::Expr(_) => EXIT_SPEC,
            Error::InvalidArgument(_) => EXIT_SPEC,
            _ => EXIT_FAILED,
        };
        let message = match &e {
            Error::ChartExit { t, x } => format!("curve left the chart at t = {t} (last point x = {x:?})"),
            _ => e.to_string(),
        };
        Failure::new(code, message)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::new(EXIT_FAILED, format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::new(EXIT_FAILED, format!("csv error: {e}"))
    }
}

pub fn json_string<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Failure::new(EXIT_FAILED, e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes to `path`, or to standard output when absent. Files are written
/// in full or not at all.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => {
            let tmp = tmp_path(p);
            std::fs::write(&tmp, text)?;
            std::fs::rename(&tmp, p)?;
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn tmp_path(p: &Path) -> PathBuf {
    let mut name = p.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".partial");
    p.with_file_name(name)
}

/// Renders rows of already-formatted cells as CSV.
pub fn csv_string(header: &[String], rows: &[Vec<String>]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(EXIT_FAILED, e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Failure::new(EXIT_FAILED, e.to_string()))
}

pub fn cell(v: Option<f64>) -> String {
    match v {
        Some(v) if v.is_finite() => format!("{v:e}"),
        _ => String::new(),
    }
}

/// Parses a comma-separated list of reals.
pub fn parse_vec(s: &str, what: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Failure::usage(format!("{what}: {t:?} is not a number")))
        })
        .collect()
}

/// The options every report echoes.
#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

pub const TOOL: ToolInfo = ToolInfo {
    name: "finsler",
    version: env!("CARGO_PKG_VERSION"),
};
