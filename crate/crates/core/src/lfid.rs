//! Low-dimensional Fréchet distance: rank activation columns by variance on
//! the real set, keep the top k, and compare the Gaussian fits of the
//! reduced sets. Also home of the LFID quality gate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{frechet_gaussian_distance, MetricReport};
use crate::stats::{summarize, ActivationSet};

/// Per-column sample variances and the columns sorted by descending variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRanking {
    pub variances: Vec<f64>,
    pub order: Vec<usize>,
    pub computed_on: String,
}

impl FeatureRanking {
    pub fn dim(&self) -> usize {
        self.variances.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SelectionSpec {
    #[default]
    All,
    TopK(usize),
}

impl SelectionSpec {
    pub fn top_k(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("top-k selection needs k >= 1".into()));
        }
        Ok(SelectionSpec::TopK(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateConfig {
    pub threshold_t: f64,
}

impl GateConfig {
    pub const DEFAULT_THRESHOLD: f64 = 20.0;

    pub fn new(threshold_t: f64) -> Result<Self> {
        if !(threshold_t > 0.0 && threshold_t.is_finite()) {
            return Err(Error::Validation(format!("gate threshold must be positive, got {threshold_t}")));
        }
        Ok(Self { threshold_t })
    }
}

impl Default for GateConfig {
    fn default() -> Self {
        Self {
            threshold_t: Self::DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateDecision {
    Pass,
    Adjust,
}

/// Ranks columns by sample variance (divisor N−1), highest first. Ties keep
/// the lower column index first.
pub fn rank_features(set: &ActivationSet) -> Result<FeatureRanking> {
    let n = set.n_samples();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let d = set.dim();
    let mut mean = vec![0.0; d];
    for row in set.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut variances = vec![0.0; d];
    for row in set.rows() {
        for ((v, x), m) in variances.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    variances.iter_mut().for_each(|v| *v /= (n - 1) as f64);

    let mut order: Vec<usize> = (0..d).collect();
    // stable sort keeps index order among equal variances
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]));
    Ok(FeatureRanking {
        variances,
        order,
        computed_on: set.source_tag().to_string(),
    })
}

fn selected_columns(dim: usize, ranking: &FeatureRanking, spec: SelectionSpec) -> Result<Vec<usize>> {
    if ranking.dim() != dim {
        return Err(Error::Dim(ranking.dim(), dim));
    }
    match spec {
        SelectionSpec::All => Ok((0..dim).collect()),
        SelectionSpec::TopK(0) => Err(Error::Validation("top-k selection needs k >= 1".into())),
        SelectionSpec::TopK(k) if k > dim => Err(Error::Dim(k, dim)),
        SelectionSpec::TopK(k) => Ok(ranking.order[..k].to_vec()),
    }
}

/// Keeps the first k columns of `ranking.order`, in that order.
/// `SelectionSpec::All` returns the set unchanged.
pub fn select_dims(set: &ActivationSet, ranking: &FeatureRanking, spec: SelectionSpec) -> Result<ActivationSet> {
    let cols = selected_columns(set.dim(), ranking, spec)?;
    match spec {
        SelectionSpec::All => Ok(set.clone()),
        SelectionSpec::TopK(_) => set.select_columns(&cols),
    }
}

/// Fréchet distance between the Gaussian fits of `real` and `gen` after
/// selecting columns by variance rank on `real`. The same columns are taken
/// from both sets.
pub fn lfid_score(real: &ActivationSet, gen: &ActivationSet, spec: SelectionSpec) -> Result<MetricReport> {
    if real.dim() != gen.dim() {
        return Err(Error::Dim(real.dim(), gen.dim()));
    }
    let (real_sel, gen_sel, cols) = match spec {
        SelectionSpec::All => (real.clone(), gen.clone(), (0..real.dim()).collect::<Vec<_>>()),
        SelectionSpec::TopK(_) => {
            let ranking = rank_features(real)?;
            let cols = selected_columns(real.dim(), &ranking, spec)?;
            (real.select_columns(&cols)?, gen.select_columns(&cols)?, cols)
        }
    };
    let fid = frechet_gaussian_distance(&summarize(&real_sel)?, &summarize(&gen_sel)?)?;

    let mut report = MetricReport::new("lfid", fid.value, fid.inputs_digest.clone())
        .with_param(
            "mode",
            match spec {
                SelectionSpec::All => "all",
                SelectionSpec::TopK(_) => "top_k",
            },
        )
        .with_param("k", cols.len())
        .with_param("selected", cols);
    for name in ["d2", "trace", "jitter_real", "jitter_gen"] {
        if let Some(v) = fid.param(name) {
            report = report.with_param(name, v.clone());
        }
    }
    report.warnings = fid.warnings;
    Ok(report)
}

/// `Adjust` iff `lfid_value > T`; equality passes.
pub fn quality_gate(lfid_value: f64, gate: &GateConfig) -> Result<GateDecision> {
    if lfid_value.is_nan() {
        return Err(Error::Validation("LFID value is NaN".into()));
    }
    Ok(if lfid_value > gate.threshold_t {
        GateDecision::Adjust
    } else {
        GateDecision::Pass
    })
}
