use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn new(alpha: f64, beta1: f64, beta2: f64, eps: f64) -> Result<Self> {
        let cfg = Self { alpha, beta1, beta2, eps };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_alpha(alpha: f64) -> Result<Self> {
        Self::new(alpha, 0.9, 0.999, 1e-8)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.alpha.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.eps.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Validation(format!("invalid Adam configuration {self:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub theta: Vec<f64>,
}

impl AdamState {
    pub fn new(theta: Vec<f64>) -> Self {
        let n = theta.len();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            theta,
        }
    }
}

/// One Adam update. The step counter is advanced before bias correction,
/// and ε is added outside the square root:
///
/// ```text
/// m ← β₁m + (1−β₁)g        v ← β₂v + (1−β₂)g²
/// m̂ = m / (1−β₁ᵗ)          v̂ = v / (1−β₂ᵗ)
/// θ ← θ − α m̂ / (√v̂ + ε)
/// ```
pub fn adam_step(state: &AdamState, grad: &[f64], config: &AdamConfig) -> Result<AdamState> {
    config.validate()?;
    if grad.len() != state.theta.len() {
        return Err(Error::Dim(grad.len(), state.theta.len()));
    }
    if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numerical(format!("gradient component {i} is {}", grad[i])));
    }
    let t = state.t + 1;
    let bc1 = 1.0 - config.beta1.powf(t as f64);
    let bc2 = 1.0 - config.beta2.powf(t as f64);
    let mut next = AdamState {
        m: Vec::with_capacity(grad.len()),
        v: Vec::with_capacity(grad.len()),
        t,
        theta: Vec::with_capacity(grad.len()),
    };
    for (((&g, &m), &v), &theta) in grad.iter().zip(&state.m).zip(&state.v).zip(&state.theta) {
        let m = config.beta1 * m + (1.0 - config.beta1) * g;
        let v = config.beta2 * v + (1.0 - config.beta2) * g * g;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        next.m.push(m);
        next.v.push(v);
        next.theta.push(theta - config.alpha * m_hat / (v_hat.sqrt() + config.eps));
    }
    Ok(next)
}
