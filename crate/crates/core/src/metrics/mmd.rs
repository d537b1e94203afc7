use super::{digest_parts, MetricReport};
use crate::error::{Error, Result};
use crate::stats::ActivationSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelKind {
    #[default]
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Bandwidth {
    Fixed(f64),
    /// Median pairwise Euclidean distance over the pooled samples.
    #[default]
    MedianHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KernelConfig {
    pub kind: KernelKind,
    pub bandwidth: Bandwidth,
}

impl KernelConfig {
    pub fn rbf(bandwidth: f64) -> Self {
        Self {
            kind: KernelKind::Rbf,
            bandwidth: Bandwidth::Fixed(bandwidth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    #[default]
    Biased,
    Unbiased,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn median_pairwise_distance(x: &ActivationSet, y: &ActivationSet) -> f64 {
    let pooled: Vec<&[f64]> = x.rows().chain(y.rows()).collect();
    let mut dists = Vec::with_capacity(pooled.len() * (pooled.len() - 1) / 2);
    for (i, a) in pooled.iter().enumerate() {
        for b in &pooled[i + 1..] {
            dists.push(sq_dist(a, b).sqrt());
        }
    }
    let n = dists.len();
    let mid = n / 2;
    let (_, &mut upper, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    if n % 2 == 1 {
        upper
    } else {
        let lower = dists[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Squared MMD between two sample sets under an RBF kernel
/// k(a, b) = exp(−‖a − b‖² / (2σ²)).
///
/// The biased estimator averages over all pairs including i = j and is
/// clamped at zero; the unbiased one drops the diagonal of the within-set
/// terms and can go negative.
pub fn mmd(
    x: &ActivationSet,
    y: &ActivationSet,
    kernel: &KernelConfig,
    estimator: Estimator,
) -> Result<MetricReport> {
    if x.dim() != y.dim() {
        return Err(Error::Dim(x.dim(), y.dim()));
    }
    if estimator == Estimator::Unbiased && (x.n_samples() < 2 || y.n_samples() < 2) {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: x.n_samples().min(y.n_samples()),
        });
    }
    let mut warnings = Vec::new();
    let sigma = match kernel.bandwidth {
        Bandwidth::Fixed(s) if s > 0.0 && s.is_finite() => s,
        Bandwidth::Fixed(s) => return Err(Error::Validation(format!("bandwidth must be positive, got {s}"))),
        Bandwidth::MedianHeuristic => {
            let m = median_pairwise_distance(x, y);
            if m > 0.0 {
                m
            } else {
                warnings.push("degenerate-bandwidth: all pairwise distances are zero; using 1".into());
                1.0
            }
        }
    };
    let gamma = 1.0 / (2.0 * sigma * sigma);
    let k = |a: &[f64], b: &[f64]| (-gamma * sq_dist(a, b)).exp();

    // Sum of k over i < j within one set.
    let within = |s: &ActivationSet| {
        let mut total = 0.0;
        for i in 0..s.n_samples() {
            let a = s.row(i);
            for j in i + 1..s.n_samples() {
                total += k(a, s.row(j));
            }
        }
        total
    };
    let mut cross = 0.0;
    for a in x.rows() {
        for b in y.rows() {
            cross += k(a, b);
        }
    }

    let (n, m) = (x.n_samples() as f64, y.n_samples() as f64);
    let (wx, wy) = (within(x), within(y));
    let cross_mean = cross / (n * m);
    let value = match estimator {
        // k(a, a) = 1 on the diagonal
        Estimator::Biased => ((2.0 * wx + n) / (n * n) + (2.0 * wy + m) / (m * m) - 2.0 * cross_mean).max(0.0),
        Estimator::Unbiased => 2.0 * wx / (n * (n - 1.0)) + 2.0 * wy / (m * (m - 1.0)) - 2.0 * cross_mean,
    };

    let mut report = MetricReport::new("mmd", value, digest_parts([x.as_slice(), y.as_slice()]))
        .with_param("kernel", "rbf")
        .with_param("bandwidth", sigma)
        .with_param(
            "estimator",
            match estimator {
                Estimator::Biased => "biased",
                Estimator::Unbiased => "unbiased",
            },
        );
    report.warnings = warnings;
    Ok(report)
}
