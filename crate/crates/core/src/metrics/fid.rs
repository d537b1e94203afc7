use faer::{Mat, MatRef, Side};

use super::{digest_parts, MetricReport};
use crate::error::{Error, Result};
use crate::stats::GaussianSummary;

// Eigenvalues below -NEG_EIG_RTOL * trace are treated as a failed
// decomposition rather than rounding noise.
const NEG_EIG_RTOL: f64 = 1e-8;
const JITTER_TRIGGER: f64 = 1e-10;
const JITTER_SCALE: f64 = 1e-6;
const MAX_ESCALATIONS: usize = 4;

/// Fréchet distance between two Gaussians:
/// ‖μ_r − μ_g‖² + Tr(Σ_r + Σ_g − 2(Σ_r Σ_g)^{1/2}).
///
/// The trace of the non-symmetric product's square root is evaluated as
/// Tr((Σ_r^{1/2} Σ_g Σ_r^{1/2})^{1/2}), which has the same spectrum but
/// stays inside symmetric eigendecompositions. A covariance whose smallest
/// eigenvalue falls below 1e-10·(tr/D) is regularised with 1e-6·(tr/D)·I;
/// if a decomposition still fails the jitter is escalated tenfold, up to
/// four times.
pub fn frechet_gaussian_distance(
    real: &GaussianSummary,
    gen: &GaussianSummary,
) -> Result<MetricReport> {
    let dim = real.dim();
    if gen.dim() != dim {
        return Err(Error::Dim(dim, gen.dim()));
    }

    let d2: f64 = real
        .mean()
        .iter()
        .zip(gen.mean())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();

    let mut warnings: Vec<String> = real
        .warnings()
        .iter()
        .chain(gen.warnings())
        .cloned()
        .collect();

    let mut jitter_real = initial_jitter(real.cov())?;
    let mut jitter_gen = initial_jitter(gen.cov())?;
    let mut attempt = 0;
    let (trace_real, trace_gen, trace_sqrt) = loop {
        let a = add_diagonal(real.cov(), jitter_real);
        let b = add_diagonal(gen.cov(), jitter_gen);
        match trace_sqrt_product(a.as_ref(), b.as_ref()) {
            Ok(ts) => break (trace(a.as_ref()), trace(b.as_ref()), ts),
            Err(e) if attempt == MAX_ESCALATIONS => {
                return Err(Error::Numerical(format!(
                    "matrix square root failed after {MAX_ESCALATIONS} jitter escalations: {e}"
                )))
            }
            Err(_) => {
                attempt += 1;
                jitter_real = escalate(jitter_real, real);
                jitter_gen = escalate(jitter_gen, gen);
            }
        }
    };
    for (side, j) in [("real", jitter_real), ("gen", jitter_gen)] {
        if j > 0.0 {
            warnings.push(format!("jitter: added {j:e}*I to {side} covariance"));
        }
    }

    let trace_term = trace_real + trace_gen - 2.0 * trace_sqrt;
    let mut value = d2 + trace_term;
    if value < 0.0 {
        let tol = 1e-8 * (trace_real + trace_gen).max(1.0);
        if value < -tol {
            return Err(Error::Numerical(format!(
                "Fréchet distance evaluated to {value}, below tolerance {tol:e}"
            )));
        }
        value = 0.0;
    }

    let cov_r = col_major(real.cov());
    let cov_g = col_major(gen.cov());
    let digest = digest_parts([real.mean(), cov_r.as_slice(), gen.mean(), cov_g.as_slice()]);
    let mut report = MetricReport::new("fid", value, digest)
        .with_param("dim", dim)
        .with_param("d2", d2)
        .with_param("trace", trace_term)
        .with_param("jitter_real", jitter_real)
        .with_param("jitter_gen", jitter_gen);
    report.warnings = warnings;
    Ok(report)
}

fn trace(m: MatRef<'_, f64>) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

fn col_major(m: &Mat<f64>) -> Vec<f64> {
    (0..m.ncols())
        .flat_map(|j| (0..m.nrows()).map(move |i| (i, j)))
        .map(|(i, j)| m[(i, j)])
        .collect()
}

fn add_diagonal(m: &Mat<f64>, jitter: f64) -> Mat<f64> {
    let mut out = m.clone();
    if jitter != 0.0 {
        for i in 0..out.nrows() {
            out[(i, i)] += jitter;
        }
    }
    out
}

fn mean_diag(cov: &Mat<f64>) -> f64 {
    trace(cov.as_ref()) / cov.nrows() as f64
}

fn initial_jitter(cov: &Mat<f64>) -> Result<f64> {
    let level = mean_diag(cov);
    let eigs = cov
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigenvalue decomposition failed: {e:?}")))?;
    let min = eigs.first().copied().unwrap_or(0.0);
    Ok(if min < JITTER_TRIGGER * level {
        JITTER_SCALE * level
    } else {
        0.0
    })
}

fn escalate(jitter: f64, summary: &GaussianSummary) -> f64 {
    if jitter > 0.0 {
        jitter * 10.0
    } else {
        let level = mean_diag(summary.cov());
        JITTER_SCALE * if level > 0.0 { level } else { 1.0 }
    }
}

/// Σ √λ over the spectrum of A^{1/2} B A^{1/2}.
fn trace_sqrt_product(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> std::result::Result<f64, String> {
    let n = a.nrows();
    let eig = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| format!("eigendecomposition did not converge: {e:?}"))?;
    let lambdas = eig.S().column_vector();
    let floor = -NEG_EIG_RTOL * trace(a).abs();
    let mut roots = Vec::with_capacity(n);
    for i in 0..n {
        let l = lambdas[i];
        if l < floor {
            return Err(format!("covariance eigenvalue {l} is significantly negative"));
        }
        roots.push(l.max(0.0).sqrt());
    }
    let u = eig.U();
    let scaled = Mat::from_fn(n, n, |i, j| u[(i, j)] * roots[j]);
    let sqrt_a = &scaled * u.transpose();
    let prod = &sqrt_a * b * &sqrt_a;
    let sym = Mat::from_fn(n, n, |i, j| 0.5 * (prod[(i, j)] + prod[(j, i)]));

    let mu = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| format!("eigenvalues did not converge: {e:?}"))?;
    let floor = -NEG_EIG_RTOL * trace(sym.as_ref()).abs();
    let mut total = 0.0;
    for &m in &mu {
        if m < floor {
            return Err(format!("product eigenvalue {m} is significantly negative"));
        }
        total += m.max(0.0).sqrt();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mean: f64, var: f64) -> GaussianSummary {
        GaussianSummary::from_rows(vec![mean], &[vec![var]], 100).unwrap()
    }

    fn diag(mean: Vec<f64>, var: f64) -> GaussianSummary {
        let d = mean.len();
        let cov: Vec<Vec<f64>> = (0..d)
            .map(|i| (0..d).map(|j| if i == j { var } else { 0.0 }).collect())
            .collect();
        GaussianSummary::from_rows(mean, &cov, 100).unwrap()
    }

    #[test]
    fn identical_summaries_give_zero() {
        let s = GaussianSummary::from_rows(
            vec![1.0, -2.0, 0.5],
            &[vec![2.0, 0.3, 0.1], vec![0.3, 1.0, -0.2], vec![0.1, -0.2, 0.7]],
            50,
        )
        .unwrap();
        let r = frechet_gaussian_distance(&s, &s).unwrap();
        assert!(r.value.abs() <= 1e-8, "{}", r.value);
    }

    #[test]
    fn scalar_closed_form() {
        // (0 - 1)^2 + (1 - 2)^2
        let r = frechet_gaussian_distance(&scalar(0.0, 1.0), &scalar(1.0, 4.0)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        assert!((r.param_f64("d2").unwrap() - 1.0).abs() < 1e-12);
        assert!((r.param_f64("trace").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn commuting_covariances() {
        // Tr(I + 4I - 2*2I) = Tr(I) = 2
        let r = frechet_gaussian_distance(&diag(vec![0.0, 0.0], 1.0), &diag(vec![0.0, 0.0], 4.0))
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch() {
        let err = frechet_gaussian_distance(&scalar(0.0, 1.0), &diag(vec![0.0, 0.0], 1.0));
        assert!(matches!(err, Err(Error::Dim(1, 2))));
    }

    #[test]
    fn singular_covariance_is_jittered() {
        let s = GaussianSummary::from_rows(
            vec![0.0, 0.0],
            &[vec![1.0, 1.0], vec![1.0, 1.0]],
            2,
        )
        .unwrap();
        let r = frechet_gaussian_distance(&s, &s).unwrap();
        assert!(r.value.abs() <= 1e-8);
        assert!(r.param_f64("jitter_real").unwrap() > 0.0);
        assert!(r.warnings.iter().any(|w| w.starts_with("jitter")));
    }

    #[test]
    fn zero_covariances_need_no_jitter() {
        let a = diag(vec![0.0, 0.0], 0.0);
        let b = diag(vec![3.0, 4.0], 0.0);
        let r = frechet_gaussian_distance(&a, &b).unwrap();
        assert_eq!(r.value, 25.0);
        assert_eq!(r.param_f64("jitter_real"), Some(0.0));
    }
}
