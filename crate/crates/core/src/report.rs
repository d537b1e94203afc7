//! Run reports and their JSON encoding.
//!
//! Floats are written with 17 significant digits in exponent form
//! (`1.2345678901234567e-3`) so every value parses back to the same `f64`.

use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lfid::{FeatureRanking, GateDecision};
use crate::metrics::MetricReport;
use crate::monitor::MonitorState;
use crate::stats::GaussianSummary;
use crate::tune::TuningResult;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub path: String,
    pub digest: String,
}

impl InputRef {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.display().to_string(),
            digest: hex::encode(&Sha256::digest(&bytes)[..8]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOutcome {
    pub threshold: f64,
    pub value: f64,
    pub decision: GateDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingSnapshot {
    pub computed_on: String,
    pub variances: Vec<f64>,
    pub order: Vec<usize>,
}

impl From<&FeatureRanking> for RankingSnapshot {
    fn from(r: &FeatureRanking) -> Self {
        Self {
            computed_on: r.computed_on.clone(),
            variances: r.variances.clone(),
            order: r.order.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummarySnapshot {
    pub n_samples: usize,
    pub dim: usize,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl From<&GaussianSummary> for SummarySnapshot {
    fn from(s: &GaussianSummary) -> Self {
        let d = s.dim();
        Self {
            n_samples: s.n_samples(),
            dim: d,
            mean: s.mean().to_vec(),
            cov: (0..d).map(|i| (0..d).map(|j| s.cov()[(i, j)]).collect()).collect(),
            warnings: s.warnings().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool_version: String,
    pub timestamp: Option<String>,
    pub subcommand: String,
    pub inputs: Vec<InputRef>,
    pub reports: Vec<MetricReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<GateOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<MonitorState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking: Option<RankingSnapshot>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SummarySnapshot>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
}

impl RunReport {
    pub fn new(subcommand: &str, with_timestamp: bool) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            timestamp: with_timestamp.then(|| chrono::Utc::now().to_rfc3339()),
            subcommand: subcommand.to_string(),
            inputs: Vec::new(),
            reports: Vec::new(),
            gate: None,
            monitor: None,
            tuning: None,
            ranking: None,
            summary: None,
            artifacts: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(format!("run report: {e}")))
    }
}

/// Pretty JSON with 17-significant-digit floats.
pub struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Default for FullPrecision<'_> {
    fn default() -> Self {
        Self(PrettyFormatter::new())
    }
}

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        write!(writer, "{:.16e}", value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision::default());
    value
        .serialize(&mut ser)
        .expect("report types serialize infallibly");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ParamValue;

    #[test]
    fn floats_use_seventeen_digits() {
        let s = to_json_string(&vec![0.1f64, -2.5, 0.0]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("-2.5000000000000000e0"), "{s}");
        let back: Vec<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, vec![0.1, -2.5, 0.0]);
    }

    #[test]
    fn report_round_trips() {
        let mut r = RunReport::new("lfid", false);
        r.reports.push(MetricReport {
            metric_name: "lfid".into(),
            value: 1.0 / 3.0,
            params: vec![
                crate::metrics::Param { name: "k".into(), value: ParamValue::Int(2) },
                crate::metrics::Param { name: "d2".into(), value: ParamValue::Real(2.0) },
                crate::metrics::Param { name: "selected".into(), value: ParamValue::Indices(vec![3, 1]) },
                crate::metrics::Param { name: "mode".into(), value: ParamValue::Text("top_k".into()) },
            ],
            warnings: vec!["w".into()],
            inputs_digest: "abcd".into(),
        });
        r.gate = Some(GateOutcome { threshold: 20.0, value: 1.0 / 3.0, decision: GateDecision::Pass });
        r.monitor = Some(MonitorState { history: vec![(1, 0.7), (2, 0.6)], ..Default::default() });
        let back = RunReport::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn infinite_value_survives() {
        let r = MetricReport {
            metric_name: "kl".into(),
            value: f64::INFINITY,
            params: vec![],
            warnings: vec![crate::metrics::INFINITE_DIVERGENCE.into()],
            inputs_digest: String::new(),
        };
        let back: MetricReport = serde_json::from_str(&to_json_string(&r)).unwrap();
        assert_eq!(back.value, f64::INFINITY);
    }
}
