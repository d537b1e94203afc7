use super::adam::AdamConfig;
use super::generator::{fit_toy_generator_from, sample_toy, ToyGenerator};
use crate::error::Result;
use crate::lfid::{lfid_score, quality_gate, GateDecision, SelectionSpec};
use crate::monitor::{MonitorConfig, MonitorState};
use crate::stats::ActivationSet;

/// Settings for the toy train → sample → score → monitor loop.
#[derive(Debug, Clone)]
pub struct DemoConfig {
    pub seed: u64,
    pub max_epochs: u64,
    pub steps_per_epoch: usize,
    pub n_real: usize,
    pub n_gen: usize,
    pub real_mean: Vec<f64>,
    pub real_sd: Vec<f64>,
    /// Initial generator mean offset from the real mean, in real-sd units.
    pub init_offset_sd: Vec<f64>,
    pub adam: AdamConfig,
    pub monitor: MonitorConfig,
    pub spec: SelectionSpec,
}

impl Default for DemoConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_epochs: 50,
            steps_per_epoch: 25,
            n_real: 1000,
            n_gen: 1000,
            real_mean: vec![1.0, -0.5],
            real_sd: vec![0.8, 1.5],
            init_offset_sd: vec![4.0, -4.0],
            adam: AdamConfig {
                alpha: 0.05,
                ..AdamConfig::default()
            },
            monitor: MonitorConfig::default(),
            spec: SelectionSpec::All,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DemoOutcome {
    pub real: ActivationSet,
    pub initial_lfid: f64,
    pub initial_gate: GateDecision,
    pub final_lfid: f64,
    pub final_gate: GateDecision,
    /// (epoch, LFID) for every epoch run; epoch 0 is the untrained generator.
    pub curve: Vec<(u64, f64)>,
    pub monitor: MonitorState,
    pub generator: ToyGenerator,
    pub last_sample: ActivationSet,
    pub loss_history: Vec<f64>,
}

// Stream keys derived from the run seed so real and generated draws never
// share counters.
fn real_key(seed: u64) -> u64 {
    seed ^ 0x5EA1_DA7A
}

fn gen_key(seed: u64, epoch: u64) -> u64 {
    seed.wrapping_mul(0x1_0000_0001).wrapping_add(epoch).wrapping_add(0x6E4E_0000)
}

/// Runs the full monitoring loop on a toy problem: a real set drawn from a
/// known Gaussian, a generator started several standard deviations away,
/// and per-epoch LFID scoring until the monitor stops or `max_epochs` pass.
pub fn run_toy_pipeline(cfg: &DemoConfig) -> Result<DemoOutcome> {
    let real_gen = ToyGenerator::new(
        cfg.real_mean.clone(),
        cfg.real_sd.iter().map(|s| s.ln()).collect(),
        cfg.seed,
    )?;
    let real = sample_toy(&real_gen, cfg.n_real, real_key(cfg.seed))?.with_tags("toy", "real");

    let init_mu = cfg
        .real_mean
        .iter()
        .zip(&cfg.real_sd)
        .zip(&cfg.init_offset_sd)
        .map(|((m, s), k)| m + k * s)
        .collect();
    let mut generator = ToyGenerator::new(init_mu, vec![0.0; cfg.real_mean.len()], cfg.seed)?;

    let mut sample = sample_toy(&generator, cfg.n_gen, gen_key(cfg.seed, 0))?;
    let initial_lfid = lfid_score(&real, &sample, cfg.spec)?.value;
    let initial_gate = quality_gate(initial_lfid, &cfg.monitor.gate)?;

    let mut curve = vec![(0, initial_lfid)];
    let mut monitor = MonitorState::new();
    let mut loss_history = Vec::new();
    let mut lfid = initial_lfid;
    for epoch in 1..=cfg.max_epochs {
        let (next, losses) = fit_toy_generator_from(&generator, &real, cfg.steps_per_epoch, &cfg.adam)?;
        generator = next;
        loss_history.extend(losses);
        sample = sample_toy(&generator, cfg.n_gen, gen_key(cfg.seed, epoch))?;
        lfid = lfid_score(&real, &sample, cfg.spec)?.value;
        curve.push((epoch, lfid));
        monitor = monitor.update(&cfg.monitor, epoch, lfid)?;
        if monitor.stopped {
            break;
        }
    }

    Ok(DemoOutcome {
        real,
        initial_lfid,
        initial_gate,
        final_lfid: lfid,
        final_gate: quality_gate(lfid, &cfg.monitor.gate)?,
        curve,
        monitor,
        generator,
        last_sample: sample,
        loss_history,
    })
}
