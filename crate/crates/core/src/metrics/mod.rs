//! Distribution-comparison kernels.
//!
//! Every metric returns a [`MetricReport`]: the value plus the parameters
//! and warnings needed to reproduce it, and a short digest of the inputs.

mod divergence;
mod fid;
mod frechet;
mod inception;
mod mmd;
mod wasserstein;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

pub use divergence::{js_divergence, kl_divergence, DiscreteDist};
pub use fid::frechet_gaussian_distance;
pub use frechet::{discrete_frechet, Curve};
pub use inception::{inception_score, ProbTable};
pub use mmd::{mmd, Bandwidth, Estimator, KernelConfig, KernelKind};
pub use wasserstein::{wasserstein_1d, Distribution1d};

/// Warning tag that licenses a non-finite report value.
pub const INFINITE_DIVERGENCE: &str = "infinite-divergence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
    Indices(Vec<usize>),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Int(v) => Some(v as f64),
            ParamValue::Real(v) => Some(v),
            _ => None,
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as i64)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl From<Vec<usize>> for ParamValue {
    fn from(v: Vec<usize>) -> Self {
        ParamValue::Indices(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: ParamValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub metric_name: String,
    #[serde(serialize_with = "ser_extended_f64", deserialize_with = "de_extended_f64")]
    pub value: f64,
    pub params: Vec<Param>,
    pub warnings: Vec<String>,
    pub inputs_digest: String,
}

impl MetricReport {
    pub(crate) fn new(metric_name: &str, value: f64, inputs_digest: String) -> Self {
        Self {
            metric_name: metric_name.to_string(),
            value,
            params: Vec::new(),
            warnings: Vec::new(),
            inputs_digest,
        }
    }

    pub(crate) fn with_param(mut self, name: &str, value: impl Into<ParamValue>) -> Self {
        self.params.push(Param {
            name: name.to_string(),
            value: value.into(),
        });
        self
    }

    pub fn param(&self, name: &str) -> Option<&ParamValue> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    pub fn param_f64(&self, name: &str) -> Option<f64> {
        self.param(name).and_then(ParamValue::as_f64)
    }
}

/// First 16 hex chars of SHA-256 over the little-endian bytes of each part,
/// each prefixed with its length.
pub(crate) fn digest_parts<'a>(parts: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        for v in part {
            hasher.update(v.to_le_bytes());
        }
    }
    hex::encode(&hasher.finalize()[..8])
}

// Non-finite values are written as the strings "inf", "-inf", "nan".
fn ser_extended_f64<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn de_extended_f64<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) => match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            "nan" => Ok(f64::NAN),
            other => Err(serde::de::Error::custom(format!("bad float {other:?}"))),
        },
    }
}
