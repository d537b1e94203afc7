use super::adam::{adam_step, AdamConfig, AdamState};
use super::rng::standard_normal;
use crate::error::{Error, Result};
use crate::stats::ActivationSet;

/// Standard deviations are never sampled below this.
pub const SIGMA_FLOOR: f64 = 1e-12;

/// Diagonal Gaussian sampler N(mu, diag(exp(log_sigma)²)).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyGenerator {
    pub mu: Vec<f64>,
    pub log_sigma: Vec<f64>,
    pub seed: u64,
}

impl ToyGenerator {
    pub fn new(mu: Vec<f64>, log_sigma: Vec<f64>, seed: u64) -> Result<Self> {
        if mu.is_empty() || mu.len() != log_sigma.len() {
            return Err(Error::Dim(mu.len(), log_sigma.len()));
        }
        if mu.iter().chain(&log_sigma).any(|v| !v.is_finite()) {
            return Err(Error::Validation("generator parameters must be finite".into()));
        }
        Ok(Self { mu, log_sigma, seed })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|l| l.exp().max(SIGMA_FLOOR)).collect()
    }
}

/// Column means and standard deviations (divisor N−1).
fn moment_targets(data: &ActivationSet) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = data.n_samples();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let d = data.dim();
    let mut mean = vec![0.0; d];
    for row in data.rows() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0; d];
    for row in data.rows() {
        for ((v, x), m) in var.iter_mut().zip(row).zip(&mean) {
            *v += (x - m) * (x - m);
        }
    }
    let sd = var.into_iter().map(|v| (v / (n - 1) as f64).sqrt()).collect();
    Ok((mean, sd))
}

/// L(μ, s) = ‖μ − μ_data‖² + ‖exp(s) − σ_data‖², and its gradient with
/// respect to (μ, s) laid out as [μ..., s...].
fn loss_and_grad(theta: &[f64], target_mu: &[f64], target_sd: &[f64]) -> (f64, Vec<f64>) {
    let d = target_mu.len();
    let (mu, ls) = theta.split_at(d);
    let mut loss = 0.0;
    let mut grad = vec![0.0; 2 * d];
    for j in 0..d {
        let dm = mu[j] - target_mu[j];
        let sigma = ls[j].exp();
        let ds = sigma - target_sd[j];
        loss += dm * dm + ds * ds;
        grad[j] = 2.0 * dm;
        grad[d + j] = 2.0 * ds * sigma;
    }
    (loss, grad)
}

/// Continues fitting `init` to the moments of `data` for `steps` full-batch
/// Adam steps. The loss history holds the loss before each step.
pub fn fit_toy_generator_from(
    init: &ToyGenerator,
    data: &ActivationSet,
    steps: usize,
    config: &AdamConfig,
) -> Result<(ToyGenerator, Vec<f64>)> {
    if steps == 0 {
        return Err(Error::Validation("steps must be at least 1".into()));
    }
    if init.dim() != data.dim() {
        return Err(Error::Dim(init.dim(), data.dim()));
    }
    let (target_mu, target_sd) = moment_targets(data)?;
    let mut theta = init.mu.clone();
    theta.extend_from_slice(&init.log_sigma);
    let mut state = AdamState::new(theta);
    let mut history = Vec::with_capacity(steps);
    for _ in 0..steps {
        let (loss, grad) = loss_and_grad(&state.theta, &target_mu, &target_sd);
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("toy loss diverged to {loss}")));
        }
        history.push(loss);
        state = adam_step(&state, &grad, config)?;
    }
    let d = init.dim();
    let gen = ToyGenerator::new(state.theta[..d].to_vec(), state.theta[d..].to_vec(), init.seed)?;
    Ok((gen, history))
}

/// Fits a generator initialised at mu = 0, sigma = 1.
pub fn fit_toy_generator(
    data: &ActivationSet,
    steps: usize,
    config: &AdamConfig,
    seed: u64,
) -> Result<(ToyGenerator, Vec<f64>)> {
    let d = data.dim();
    let init = ToyGenerator::new(vec![0.0; d], vec![0.0; d], seed)?;
    fit_toy_generator_from(&init, data, steps, config)
}

/// `n` draws from the generator. Entry (i, j) uses normal number `i·d + j`
/// of the stream keyed by `seed`, so output depends only on
/// (parameters, n, seed).
pub fn sample_toy(gen: &ToyGenerator, n: usize, seed: u64) -> Result<ActivationSet> {
    if n == 0 {
        return Err(Error::Validation("sample count must be at least 1".into()));
    }
    let d = gen.dim();
    let sigma = gen.sigma();
    let mut data = Vec::with_capacity(n * d);
    for i in 0..n {
        for (j, (mu, sd)) in gen.mu.iter().zip(&sigma).enumerate() {
            data.push(mu + sd * standard_normal(seed, (i * d + j) as u64));
        }
    }
    ActivationSet::new(data, n, d, "toy", "generated")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn known_gaussian() -> ActivationSet {
        let g = ToyGenerator::new(vec![0.2, -0.1], vec![1.2f64.ln(), 0.9f64.ln()], 0).unwrap();
        sample_toy(&g, 2000, 11).unwrap()
    }

    #[test]
    fn fit_reduces_loss_a_hundredfold() {
        let (_, hist) = fit_toy_generator(&known_gaussian(), 500, &AdamConfig::default(), 1).unwrap();
        assert_eq!(hist.len(), 500);
        assert!(hist.iter().all(|l| l.is_finite()));
        assert!(hist[499] < 0.01 * hist[0], "{} vs {}", hist[499], hist[0]);
    }

    #[test]
    fn zero_steps_rejected() {
        assert!(matches!(
            fit_toy_generator(&known_gaussian(), 0, &AdamConfig::default(), 1),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn optimum_is_a_fixed_point() {
        let data = known_gaussian();
        let (mu, sd) = moment_targets(&data).unwrap();
        let init = ToyGenerator::new(mu, sd.iter().map(|s| s.ln()).collect(), 0).unwrap();
        let (fitted, hist) = fit_toy_generator_from(&init, &data, 100, &AdamConfig::default()).unwrap();
        assert!(hist[0] < 1e-20);
        for (a, b) in fitted.mu.iter().chain(&fitted.log_sigma).zip(init.mu.iter().chain(&init.log_sigma)) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn zero_variance_data_is_a_valid_target() {
        let data = ActivationSet::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        let (gen, hist) = fit_toy_generator(&data, 200, &AdamConfig::with_alpha(0.05).unwrap(), 0).unwrap();
        assert!(hist.iter().all(|l| l.is_finite()));
        assert!(hist[199] < hist[0]);
        assert!(gen.log_sigma.iter().all(|l| *l < 0.0));
    }

    #[test]
    fn collapsed_sigma_reproduces_mean() {
        let g = ToyGenerator::new(vec![3.0, -1.0], vec![-1e3, -1e3], 0).unwrap();
        let s = sample_toy(&g, 50, 9).unwrap();
        for row in s.rows() {
            assert!((row[0] - 3.0).abs() < 1e-9 && (row[1] + 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let g = ToyGenerator::new(vec![0.0; 3], vec![0.0; 3], 0).unwrap();
        assert_eq!(sample_toy(&g, 100, 5).unwrap(), sample_toy(&g, 100, 5).unwrap());
        assert_ne!(sample_toy(&g, 100, 5).unwrap(), sample_toy(&g, 100, 6).unwrap());
        assert!(sample_toy(&g, 0, 5).is_err());
    }

    #[test]
    fn fitted_sampler_mean_within_clt_bound() {
        let data = known_gaussian();
        let (gen, _) = fit_toy_generator(&data, 3000, &AdamConfig::with_alpha(0.01).unwrap(), 0).unwrap();
        let n = 10_000;
        let s = sample_toy(&gen, n, 123).unwrap();
        let sigma = gen.sigma();
        for j in 0..2 {
            let mean = s.column(j).sum::<f64>() / n as f64;
            assert!((mean - gen.mu[j]).abs() < 4.0 * sigma[j] / (n as f64).sqrt());
        }
    }
}
