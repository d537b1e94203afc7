//! Evaluation engine for generative models operating on extracted feature
//! activations.
//!
//! The engine consumes activation matrices (one feature vector per image)
//! and computes the Fréchet distance between their Gaussian fits, both at
//! full dimension (FID) and on a variance-ranked subset of the feature
//! columns (LFID). Companion metrics cover the Inception Score, KL and JS
//! divergences, the 1-D Wasserstein distance, MMD and the discrete Fréchet
//! distance between polygonal curves.
//!
//! On top of the metrics sit the training-loop utilities: a quality gate,
//! an early-stopping monitor driven by consecutive LFID changes, a grid
//! search with a keep-if-improved rule, and a closed-form toy generator
//! trained with Adam so the whole loop can run without a neural network.

pub mod cli;
pub mod error;
pub mod lfid;
pub mod metrics;
pub mod monitor;
pub mod plot;
pub mod report;
pub mod stats;
pub mod toy;
pub mod tune;

pub use error::{Error, Result};
pub use lfid::{
    lfid_score, quality_gate, rank_features, select_dims, FeatureRanking, GateConfig,
    GateDecision, SelectionSpec,
};
pub use metrics::{MetricReport, ParamValue};
pub use stats::{load_activations, save_activations, summarize, ActivationSet, GaussianSummary};
