use super::{digest_parts, DiscreteDist, MetricReport};
use crate::error::{Error, Result};

/// Weighted atoms on the real line. Samples are atoms of equal weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution1d {
    // sorted by location
    atoms: Vec<(f64, f64)>,
}

impl Distribution1d {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Validation("empty sample list".into()));
        }
        let w = 1.0 / samples.len() as f64;
        Self::build(samples.iter().map(|&x| (x, w)).collect())
    }

    pub fn weighted(locations: &[f64], weights: &DiscreteDist) -> Result<Self> {
        if locations.len() != weights.support_size() {
            return Err(Error::Dim(locations.len(), weights.support_size()));
        }
        Self::build(locations.iter().copied().zip(weights.probs().iter().copied()).collect())
    }

    fn build(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if let Some((x, _)) = atoms.iter().find(|(x, _)| !x.is_finite()) {
            return Err(Error::Validation(format!("non-finite location {x}")));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    fn flat(&self) -> Vec<f64> {
        self.atoms.iter().flat_map(|&(x, w)| [x, w]).collect()
    }
}

/// W₁ between two distributions on the line, as ∫|F_x(t) − F_y(t)| dt over
/// the piecewise-constant CDFs.
pub fn wasserstein_1d(x: &Distribution1d, y: &Distribution1d) -> Result<MetricReport> {
    let (a, b) = (&x.atoms, &y.atoms);
    let (mut i, mut j) = (0, 0);
    let (mut fx, mut fy) = (0.0f64, 0.0f64);
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    while i < a.len() || j < b.len() {
        let t = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if let Some(s) = prev {
            total += (fx - fy).abs() * (t - s);
        }
        while i < a.len() && a[i].0 == t {
            fx += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == t {
            fy += b[j].1;
            j += 1;
        }
        prev = Some(t);
    }
    let (fx_flat, fy_flat) = (x.flat(), y.flat());
    Ok(MetricReport::new(
        "wasserstein_1d",
        total,
        digest_parts([fx_flat.as_slice(), fy_flat.as_slice()]),
    ))
}
