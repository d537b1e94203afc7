//! A trainable stand-in for a generative model: a diagonal Gaussian whose
//! mean and log standard deviation are fitted to data with Adam, plus the
//! end-to-end pipeline that trains it under LFID monitoring.

mod adam;
mod demo;
mod generator;
pub mod rng;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use demo::{run_toy_pipeline, DemoConfig, DemoOutcome};
pub use generator::{fit_toy_generator, fit_toy_generator_from, sample_toy, ToyGenerator, SIGMA_FLOOR};
