use faer::Mat;

use super::ActivationSet;
use crate::error::{Error, Result};

/// Mean vector and sample covariance of an activation set.
#[derive(Debug, Clone)]
pub struct GaussianSummary {
    mean: Vec<f64>,
    cov: Mat<f64>,
    n_samples: usize,
    warnings: Vec<String>,
}

const SYMMETRY_RTOL: f64 = 1e-9;

impl GaussianSummary {
    /// Builds a summary from explicit moments, checking that `cov` is square,
    /// matches `mean`, is symmetric to 1e-9 relative, and has a non-negative
    /// diagonal.
    pub fn new(mean: Vec<f64>, cov: Mat<f64>, n_samples: usize) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 {
            return Err(Error::Validation("summary needs at least one dimension".into()));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dim(dim, cov.nrows().max(cov.ncols())));
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite mean entry".into()));
        }
        let scale = (0..dim)
            .flat_map(|i| (0..dim).map(move |j| (i, j)))
            .map(|(i, j)| cov[(i, j)].abs())
            .fold(0.0f64, f64::max);
        for i in 0..dim {
            if cov[(i, i)].is_nan() || cov[(i, i)] < 0.0 {
                return Err(Error::Validation(format!(
                    "covariance diagonal entry {i} is {}",
                    cov[(i, i)]
                )));
            }
            for j in 0..i {
                let (a, b) = (cov[(i, j)], cov[(j, i)]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::Validation("non-finite covariance entry".into()));
                }
                if (a - b).abs() > SYMMETRY_RTOL * scale {
                    return Err(Error::Validation(format!(
                        "covariance not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(Self {
            mean,
            cov,
            n_samples,
            warnings: Vec::new(),
        })
    }

    /// Convenience constructor from nested rows.
    pub fn from_rows(mean: Vec<f64>, cov: &[Vec<f64>], n_samples: usize) -> Result<Self> {
        let d = cov.len();
        if cov.iter().any(|r| r.len() != d) {
            return Err(Error::Validation("covariance is not square".into()));
        }
        Self::new(mean, Mat::from_fn(d, d, |i, j| cov[i][j]), n_samples)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &Mat<f64> {
        &self.cov
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    /// Notes raised during estimation, e.g. a singular covariance.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.cov[(i, i)]).sum()
    }
}

/// Column means and the unbiased (N−1) sample covariance of `set`.
///
/// Warns when N ≤ D: the covariance is then singular and the Fréchet
/// distance will need jitter.
pub fn summarize(set: &ActivationSet) -> Result<GaussianSummary> {
    let (n, d) = (set.n_samples(), set.dim());
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mut mean = vec![0.0; d];
    for row in set.rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered = Mat::from_fn(n, d, |i, j| set.get(i, j) - mean[j]);
    let scatter = centered.transpose() * &centered;
    let denom = (n - 1) as f64;
    let cov = Mat::from_fn(d, d, |i, j| 0.5 * (scatter[(i, j)] + scatter[(j, i)]) / denom);

    let mut warnings = Vec::new();
    if n <= d {
        warnings.push(format!(
            "singular-covariance: {n} samples for {d} dimensions; covariance is rank deficient"
        ));
    }
    Ok(GaussianSummary {
        mean,
        cov,
        n_samples: n,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cov_rows(s: &GaussianSummary) -> Vec<Vec<f64>> {
        (0..s.dim())
            .map(|i| (0..s.dim()).map(|j| s.cov()[(i, j)]).collect())
            .collect()
    }

    #[test]
    fn two_point_diagonal() {
        let s = summarize(&ActivationSet::from_rows(&[[0.0, 0.0], [2.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(s.mean(), &[1.0, 1.0]);
        assert_eq!(cov_rows(&s), vec![vec![2.0, 2.0], vec![2.0, 2.0]]);
    }

    #[test]
    fn two_point_axis() {
        let s = summarize(&ActivationSet::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(s.mean(), &[0.0, 0.0]);
        assert_eq!(cov_rows(&s), vec![vec![2.0, 0.0], vec![0.0, 0.0]]);
    }

    #[test]
    fn repeated_row_has_zero_covariance() {
        let rows = vec![[3.0, -1.5, 0.25]; 7];
        let s = summarize(&ActivationSet::from_rows(&rows).unwrap()).unwrap();
        assert_eq!(s.mean(), &[3.0, -1.5, 0.25]);
        assert!(cov_rows(&s).iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn single_sample_rejected() {
        let set = ActivationSet::from_rows(&[[1.0]]).unwrap();
        assert!(matches!(
            summarize(&set),
            Err(Error::InsufficientSamples { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn warns_when_samples_do_not_exceed_dim() {
        let set = ActivationSet::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.0, 2.0]]).unwrap();
        let s = summarize(&set).unwrap();
        assert_eq!(s.warnings().len(), 1);
    }

    #[test]
    fn asymmetric_covariance_rejected() {
        let err = GaussianSummary::from_rows(vec![0.0, 0.0], &[vec![1.0, 0.5], vec![0.4, 1.0]], 10);
        assert!(matches!(err, Err(Error::Validation(_))));
        let err = GaussianSummary::from_rows(vec![0.0], &[vec![-1.0]], 10);
        assert!(matches!(err, Err(Error::Validation(_))));
    }
}
