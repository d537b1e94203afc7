use super::{digest_parts, MetricReport};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-9;

/// A probability vector over a finite support.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDist {
    probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Validation("distribution has empty support".into()));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::Validation(format!("probability {i} is {}", probs[i])));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::Validation(format!("probabilities sum to {sum}")));
        }
        Ok(Self { probs })
    }

    pub fn support_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

fn check_support(p: &DiscreteDist, q: &DiscreteDist) -> Result<()> {
    if p.support_size() != q.support_size() {
        return Err(Error::Dim(p.support_size(), q.support_size()));
    }
    Ok(())
}

/// Σ P ln(P/Q) over entries with P > 0. Errors if P > 0 where Q = 0.
fn kl_terms(p: &[f64], q: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for (i, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Err(Error::InfiniteDivergence { index: i });
        }
        total += pi * (pi / qi).ln();
    }
    Ok(total.max(0.0))
}

/// KL(P‖Q) in nats.
///
/// With `smoothing = Some(ε)`, ε is added to every entry of Q and Q is
/// renormalised before evaluation; the report carries a warning saying so.
pub fn kl_divergence(p: &DiscreteDist, q: &DiscreteDist, smoothing: Option<f64>) -> Result<MetricReport> {
    check_support(p, q)?;
    let mut warnings = Vec::new();
    let q_used: Vec<f64> = match smoothing {
        None => q.probs.clone(),
        Some(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::Validation(format!("smoothing must be positive, got {eps}")));
            }
            let total = 1.0 + eps * q.support_size() as f64;
            warnings.push(format!("smoothing: added {eps:e} to every Q entry and renormalised"));
            q.probs.iter().map(|&v| (v + eps) / total).collect()
        }
    };
    let value = kl_terms(&p.probs, &q_used)?;
    let mut report = MetricReport::new("kl", value, digest_parts([p.probs(), q.probs()]));
    if let Some(eps) = smoothing {
        report = report.with_param("smoothing", eps);
    }
    report.warnings = warnings;
    Ok(report)
}

/// JS(P‖Q) = ½KL(P‖M) + ½KL(Q‖M) with M = ½(P + Q), in nats.
pub fn js_divergence(p: &DiscreteDist, q: &DiscreteDist) -> Result<MetricReport> {
    check_support(p, q)?;
    let m: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| 0.5 * (a + b)).collect();
    // M > 0 wherever P or Q is, so neither term can diverge.
    let value = 0.5 * kl_terms(&p.probs, &m)? + 0.5 * kl_terms(&q.probs, &m)?;
    Ok(MetricReport::new(
        "js",
        value.min(std::f64::consts::LN_2),
        digest_parts([p.probs(), q.probs()]),
    ))
}
