use super::{digest_parts, MetricReport};
use crate::error::{Error, Result};

/// An ordered sequence of points in R^d (a polygonal curve).
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::Validation("curve has no points".into()));
        };
        let d = first.len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::Validation(format!(
                    "curve point {i} has dimension {}, expected {d}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Validation(format!("curve point {i} is not finite")));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point_dim(&self) -> usize {
        self.points[0].len()
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Discrete Fréchet distance under the Euclidean metric.
///
/// c(i, j) = max(d(aᵢ, bⱼ), min(c(i−1, j), c(i, j−1), c(i−1, j−1))), kept
/// one row at a time.
pub fn discrete_frechet(a: &Curve, b: &Curve) -> Result<MetricReport> {
    if a.point_dim() != b.point_dim() {
        return Err(Error::Dim(a.point_dim(), b.point_dim()));
    }
    let (pa, pb) = (a.points(), b.points());
    let mut row = vec![0.0; pb.len()];
    for (i, ai) in pa.iter().enumerate() {
        let mut diag = 0.0; // c(i-1, j-1)
        for (j, bj) in pb.iter().enumerate() {
            let d = euclid(ai, bj);
            let up = row[j]; // c(i-1, j)
            let c = match (i, j) {
                (0, 0) => d,
                (0, _) => d.max(row[j - 1]),
                (_, 0) => d.max(up),
                _ => d.max(up.min(row[j - 1]).min(diag)),
            };
            diag = up;
            row[j] = c;
        }
    }
    let flat_a: Vec<f64> = pa.iter().flatten().copied().collect();
    let flat_b: Vec<f64> = pb.iter().flatten().copied().collect();
    Ok(MetricReport::new(
        "discrete_frechet",
        row[pb.len() - 1],
        digest_parts([flat_a.as_slice(), flat_b.as_slice()]),
    )
    .with_param("len_a", pa.len())
    .with_param("len_b", pb.len()))
}
