use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the Gumbel temperature evolves during training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TauSchedule {
    /// `max(tau_min, tau0 * tau_decay^epoch)`.
    #[default]
    Epoch,
    /// `max(tau_min, exp(-0.001 * iteration))`, counted over optimizer steps.
    Iteration,
}

impl FromStr for TauSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "epoch" => Ok(TauSchedule::Epoch),
            "iteration" | "iter" => Ok(TauSchedule::Iteration),
            other => Err(Error::Config(format!("unknown tau schedule '{other}'"))),
        }
    }
}

impl fmt::Display for TauSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TauSchedule::Epoch => "epoch",
            TauSchedule::Iteration => "iteration",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lambda_l2: f64,
    pub batch_size: usize,
    pub dropout_rate: f64,
    pub tau0: f64,
    pub tau_min: f64,
    pub tau_decay: f64,
    pub tau_schedule: TauSchedule,
    pub max_epochs: usize,
    /// Epochs without a validation NDCG improvement before stopping.
    pub patience: usize,
    pub dim: usize,
    /// Cutoff of the per-epoch validation metrics.
    pub eval_k: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.001,
            lambda_l2: 1e-4,
            batch_size: 2048,
            dropout_rate: 0.4,
            tau0: 0.7,
            tau_min: 0.01,
            tau_decay: 0.995,
            tau_schedule: TauSchedule::Epoch,
            max_epochs: 1000,
            patience: 20,
            dim: 512,
            eval_k: 20,
            seed: 2022,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(self.lambda_l2 >= 0.0 && self.lambda_l2.is_finite()) {
            return bad("lambda_l2 must be finite and >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must lie in [0, 1)");
        }
        if !(self.tau_min > 0.0 && self.tau0 >= self.tau_min && self.tau0.is_finite()) {
            return bad("temperatures must satisfy tau0 >= tau_min > 0");
        }
        if !(self.tau_decay > 0.0 && self.tau_decay <= 1.0) {
            return bad("tau_decay must lie in (0, 1]");
        }
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.eval_k == 0 {
            return bad("eval_k must be positive");
        }
        Ok(())
    }

    /// Temperature for an epoch under the per-epoch schedule.
    pub fn temperature(&self, epoch: usize) -> f64 {
        temperature(epoch, self)
    }
}

pub fn temperature(epoch: usize, cfg: &TrainConfig) -> f64 {
    let e = i32::try_from(epoch).unwrap_or(i32::MAX);
    (cfg.tau0 * cfg.tau_decay.powi(e)).max(cfg.tau_min)
}

/// Per-iteration alternative `exp(-0.001 * iter)`, floored at `tau_min` so it
/// never reaches zero.
pub fn iteration_temperature(iteration: u64, tau_min: f64) -> f64 {
    (-0.001 * iteration as f64).exp().max(tau_min)
}
