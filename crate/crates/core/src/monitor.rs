//! LFID-driven early stopping.
//!
//! Training stops once `|LFID_i − LFID_{i−1}| < ε` has held for `patience`
//! consecutive recorded epochs, counting only epochs `>= min_epochs`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lfid::GateConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorConfig {
    pub epsilon: f64,
    pub patience: u32,
    pub min_epochs: u64,
    pub gate: GateConfig,
}

impl MonitorConfig {
    pub fn new(epsilon: f64, patience: u32, min_epochs: u64, gate: GateConfig) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Validation(format!("epsilon must be positive, got {epsilon}")));
        }
        if patience < 1 {
            return Err(Error::Validation("patience must be at least 1".into()));
        }
        if min_epochs < 2 {
            return Err(Error::Validation("min_epochs must be at least 2".into()));
        }
        Ok(Self {
            epsilon,
            patience,
            min_epochs,
            gate,
        })
    }
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            patience: 1,
            min_epochs: 2,
            gate: GateConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonitorState {
    pub history: Vec<(u64, f64)>,
    pub stopped: bool,
    pub stop_epoch: Option<u64>,
    pub qualifying_streak: u32,
}

impl MonitorState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last(&self) -> Option<(u64, f64)> {
        self.history.last().copied()
    }

    /// Records `lfid` for `epoch` and returns the successor state.
    pub fn update(&self, config: &MonitorConfig, epoch: u64, lfid: f64) -> Result<MonitorState> {
        if self.stopped {
            return Err(Error::State(self.stop_epoch.unwrap_or_default()));
        }
        if !(lfid.is_finite() && lfid >= 0.0) {
            return Err(Error::Validation(format!("LFID must be finite and non-negative, got {lfid}")));
        }
        if let Some((last, _)) = self.last() {
            if epoch <= last {
                return Err(Error::Sequence { epoch, last });
            }
        }

        let mut next = self.clone();
        let qualifies = epoch >= config.min_epochs
            && self
                .last()
                .is_some_and(|(_, prev)| (lfid - prev).abs() < config.epsilon);
        next.qualifying_streak = if qualifies { self.qualifying_streak + 1 } else { 0 };
        next.history.push((epoch, lfid));
        if next.qualifying_streak >= config.patience {
            next.stopped = true;
            next.stop_epoch = Some(epoch);
        }
        Ok(next)
    }
}

/// Parses one `epoch,lfid` line as read by the CLI monitor.
pub fn parse_epoch_line(line: &str) -> Result<(u64, f64)> {
    let (e, v) = line
        .split_once(',')
        .ok_or_else(|| Error::Format(format!("expected `epoch,lfid`, got {line:?}")))?;
    let epoch = e
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad epoch {:?}", e.trim())))?;
    let value = v
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad LFID value {:?}", v.trim())))?;
    Ok((epoch, value))
}
