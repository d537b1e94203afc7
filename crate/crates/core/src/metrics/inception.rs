use super::{digest_parts, MetricReport};
use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-6;
const PROB_FLOOR: f64 = 1e-12;

/// Per-sample class probabilities p(y|x), one row per generated sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    probs: Vec<f64>,
    n_samples: usize,
    n_classes: usize,
}

impl ProbTable {
    pub fn new(probs: Vec<f64>, n_samples: usize, n_classes: usize) -> Result<Self> {
        if n_samples == 0 || n_classes == 0 {
            return Err(Error::Validation("probability table is empty".into()));
        }
        if probs.len() != n_samples * n_classes {
            return Err(Error::Validation(format!(
                "probability table has {} entries, expected {n_samples}x{n_classes}",
                probs.len()
            )));
        }
        for (i, row) in probs.chunks_exact(n_classes).enumerate() {
            if let Some(j) = row.iter().position(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::Validation(format!(
                    "probability at row {i}, class {j} is {} (outside [0, 1])",
                    row[j]
                )));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Validation(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self {
            probs,
            n_samples,
            n_classes,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let c = rows.first().map_or(0, |r| r.as_ref().len());
        let mut probs = Vec::with_capacity(rows.len() * c);
        for (i, r) in rows.iter().enumerate() {
            if r.as_ref().len() != c {
                return Err(Error::Validation(format!("row {i} has a different class count")));
            }
            probs.extend_from_slice(r.as_ref());
        }
        Self::new(probs, rows.len(), c)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks_exact(self.n_classes)
    }
}

/// exp of the mean KL divergence between each p(y|x) and the marginal p(y).
///
/// Probabilities are floored at 1e-12 and each row renormalised before
/// taking logs. Single-shot: no split averaging.
pub fn inception_score(table: &ProbTable) -> Result<MetricReport> {
    let c = table.n_classes();
    if c < 2 {
        return Err(Error::Validation("inception score needs at least two classes".into()));
    }
    let clamped: Vec<Vec<f64>> = table
        .rows()
        .map(|row| {
            let floored: Vec<f64> = row.iter().map(|&p| p.max(PROB_FLOOR)).collect();
            let sum: f64 = floored.iter().sum();
            floored.into_iter().map(|p| p / sum).collect()
        })
        .collect();

    let n = clamped.len() as f64;
    let mut marginal = vec![0.0; c];
    for row in &clamped {
        for (m, p) in marginal.iter_mut().zip(row) {
            *m += p;
        }
    }
    for m in &mut marginal {
        *m /= n;
    }

    let mean_kl = clamped
        .iter()
        .map(|row| {
            row.iter()
                .zip(&marginal)
                .map(|(&p, &m)| p * (p / m).ln())
                .sum::<f64>()
        })
        .sum::<f64>()
        / n;

    Ok(MetricReport::new("inception_score", mean_kl.exp(), digest_parts([table.probs.as_slice()]))
        .with_param("n_samples", table.n_samples())
        .with_param("n_classes", c)
        .with_param("mean_kl", mean_kl))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_rows_score_one() {
        let rows = vec![vec![0.1; 10]; 25];
        let r = inception_score(&ProbTable::from_rows(&rows).unwrap()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn balanced_one_hot_scores_class_count() {
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|k| (0..10).map(|j| if j == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let r = inception_score(&ProbTable::from_rows(&rows).unwrap()).unwrap();
        assert!((r.value - 10.0).abs() < 1e-6, "{}", r.value);
    }

    #[test]
    fn two_by_two_matches_direct_sum() {
        let rows = [[0.9, 0.1], [0.1, 0.9]];
        let r = inception_score(&ProbTable::from_rows(&rows).unwrap()).unwrap();
        // marginal is (0.5, 0.5); both rows contribute the same KL
        let kl = 0.9 * (0.9f64 / 0.5).ln() + 0.1 * (0.1f64 / 0.5).ln();
        assert!((r.value - kl.exp()).abs() < 1e-12);
    }

    #[test]
    fn bad_rows_rejected() {
        assert!(matches!(
            ProbTable::from_rows(&[[0.5, 0.4]]),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            ProbTable::from_rows(&[[1.5, -0.5]]),
            Err(Error::Validation(_))
        ));
        let single_class = ProbTable::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(inception_score(&single_class), Err(Error::Validation(_))));
    }
}
