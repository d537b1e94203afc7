//! Activation sets, their on-disk formats, and Gaussian summaries.

mod actb;
mod activation;
mod summary;

pub use actb::{load_activations, save_activations, ACTB_MAGIC, ACTB_VERSION};
pub use activation::ActivationSet;
pub use summary::{summarize, GaussianSummary};
