//! The metric-spec JSON file.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use finsler::metric::{build_metric, Chart, Coef, Family, MetricSpec};
use finsler::MetricInstance64;
use serde::Deserialize;

use crate::output::Failure;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    pub dimension: usize,
    pub family: String,
    #[serde(default)]
    pub a: Option<Vec<Vec<Coef>>>,
    #[serde(default)]
    pub b: Option<Vec<Coef>>,
    #[serde(default)]
    pub funk_a: Option<Vec<f64>>,
    #[serde(default)]
    pub expression: Option<String>,
    #[serde(default)]
    pub chart: Option<Chart>,
    #[serde(default)]
    pub params: BTreeMap<String, Vec<f64>>,
}

fn need<T>(v: Option<T>, key: &str, family: &str) -> Result<T, Failure> {
    v.ok_or_else(|| Failure::spec(format!("family {family:?} requires key {key:?}")))
}

fn reject(present: bool, key: &str, family: &str) -> Result<(), Failure> {
    if present {
        Err(Failure::spec(format!("key {key:?} is not used by family {family:?}")))
    } else {
        Ok(())
    }
}

impl SpecFile {
    pub fn into_spec(self) -> Result<MetricSpec, Failure> {
        let fam = self.family.as_str();
        let family = match fam {
            "riemannian" => {
                reject(self.b.is_some(), "b", fam)?;
                reject(self.funk_a.is_some(), "funk_a", fam)?;
                reject(self.expression.is_some(), "expression", fam)?;
                Family::Riemannian {
                    a: need(self.a, "a", fam)?,
                }
            }
            "randers" => {
                reject(self.funk_a.is_some(), "funk_a", fam)?;
                reject(self.expression.is_some(), "expression", fam)?;
                Family::Randers {
                    a: need(self.a, "a", fam)?,
                    b: need(self.b, "b", fam)?,
                }
            }
            "funk" => {
                reject(self.a.is_some(), "a", fam)?;
                reject(self.b.is_some(), "b", fam)?;
                reject(self.expression.is_some(), "expression", fam)?;
                Family::Funk {
                    a: self.funk_a.unwrap_or_else(|| vec![0.0; self.dimension]),
                }
            }
            "custom" => {
                reject(self.a.is_some(), "a", fam)?;
                reject(self.b.is_some(), "b", fam)?;
                reject(self.funk_a.is_some(), "funk_a", fam)?;
                Family::Custom {
                    expression: need(self.expression, "expression", fam)?,
                }
            }
            other => {
                return Err(Failure::spec(format!(
                    "unknown family {other:?} (expected riemannian, randers, funk or custom)"
                )))
            }
        };
        Ok(MetricSpec {
            dimension: self.dimension,
            family,
            chart: self.chart,
            params: self.params,
        })
    }
}

pub fn parse_spec(text: &str, origin: &str) -> Result<MetricSpec, Failure> {
    let file: SpecFile =
        serde_json::from_str(text).map_err(|e| Failure::spec(format!("{origin}: invalid metric spec: {e}")))?;
    file.into_spec()
}

/// Reads, parses and compiles a metric-spec file.
pub fn load(path: &Path) -> Result<MetricInstance64, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::spec(format!("{}: {e}", path.display())))?;
    let spec = parse_spec(&text, &path.display().to_string())?;
    build_metric(&spec).map_err(|e| Failure::spec(format!("{}: {e}", path.display())))
}
