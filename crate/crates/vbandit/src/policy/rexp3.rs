//! Exp3 restarted on a fixed batch schedule.

use rand::RngCore;

use super::exp3::{batch_size, exp3_gamma, Exp3State};
use super::{Policy, PolicyError};

/// Tuning inputs for [`Rexp3`].
///
/// With no overrides the batch size is `ceil((K ln K)^(1/3) (T/V_T)^(2/3))`
/// and gamma is `min(1, sqrt(K ln K / ((e-1) batch)))`. When the batch does
/// not divide the horizon the final batch simply truncates at `T`; gamma is
/// still tuned for the full batch size.
#[derive(Debug, Clone, PartialEq)]
pub struct Rexp3Config {
    pub horizon: usize,
    pub arms: usize,
    /// Variation budget the tuning assumes as prior knowledge. Unused when
    /// both overrides are set.
    pub budget: f64,
    pub batch_size: Option<usize>,
    pub gamma: Option<f64>,
}

impl Rexp3Config {
    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.arms < 2 {
            return Err(PolicyError::InvalidConfig(format!(
                "need at least 2 arms, got {}",
                self.arms
            )));
        }
        if self.horizon < 1 {
            return Err(PolicyError::InvalidConfig(
                "horizon must be at least 1".into(),
            ));
        }
        if let Some(batch) = self.batch_size {
            if batch < 1 {
                return Err(PolicyError::InvalidConfig(
                    "batch size must be at least 1".into(),
                ));
            }
        } else if !(self.budget > 0.0 && self.budget.is_finite()) {
            return Err(PolicyError::InvalidConfig(format!(
                "budget must be a positive real to derive the batch size, got {}",
                self.budget
            )));
        }
        if let Some(gamma) = self.gamma {
            if !(gamma > 0.0 && gamma <= 1.0) {
                return Err(PolicyError::InvalidConfig(format!(
                    "gamma must lie in (0, 1], got {gamma}"
                )));
            }
        }
        Ok(())
    }

    pub fn resolved_batch_size(&self) -> usize {
        self.batch_size
            .unwrap_or_else(|| batch_size(self.horizon, self.arms, self.budget))
    }

    pub fn resolved_gamma(&self) -> f64 {
        self.gamma
            .unwrap_or_else(|| exp3_gamma(self.arms, self.resolved_batch_size()))
    }
}

/// The restarted-Exp3 policy: weights reset to one at every epoch `t` with
/// `(t - 1) mod batch == 0`, discarding everything learned in the previous
/// batch.
#[derive(Debug)]
pub struct Rexp3 {
    batch: usize,
    horizon: usize,
    gamma: f64,
    state: Exp3State,
    next_epoch: usize,
    selected: Option<usize>,
}

impl Rexp3 {
    pub fn new(config: Rexp3Config) -> Result<Self, PolicyError> {
        config.validate()?;
        let batch = config.resolved_batch_size();
        let gamma = config.resolved_gamma();
        Ok(Self {
            batch,
            horizon: config.horizon,
            gamma,
            state: Exp3State::new(config.arms, gamma)?,
            next_epoch: 1,
            selected: None,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Selection probabilities for the current weights.
    pub fn probabilities(&self) -> Vec<f64> {
        self.state.probabilities()
    }

    /// The distribution the pending select drew from, until observed.
    pub fn last_select_probabilities(&self) -> Option<&[f64]> {
        self.state.cached_probabilities()
    }
}

impl Policy for Rexp3 {
    fn select_arm(&mut self, epoch: usize, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        if epoch != self.next_epoch || self.selected.is_some() {
            return Err(PolicyError::OutOfOrderEpoch {
                expected: self.next_epoch,
                got: epoch,
            });
        }
        if epoch > self.horizon {
            return Err(PolicyError::InvalidConfig(format!(
                "epoch {epoch} beyond configured horizon {}",
                self.horizon
            )));
        }
        if (epoch - 1).is_multiple_of(self.batch) {
            self.state.reset();
        }
        let arm = self.state.select(rng);
        self.selected = Some(arm);
        Ok(arm)
    }

    fn observe(&mut self, epoch: usize, arm: usize, reward: f64) -> Result<(), PolicyError> {
        if epoch != self.next_epoch {
            return Err(PolicyError::OutOfOrderEpoch {
                expected: self.next_epoch,
                got: epoch,
            });
        }
        let selected = self.selected.ok_or(PolicyError::UpdateBeforeSelect)?;
        if selected != arm {
            return Err(PolicyError::ObservedArmMismatch {
                selected,
                observed: arm,
            });
        }
        self.state.update(arm, reward)?;
        self.selected = None;
        self.next_epoch += 1;
        Ok(())
    }

    fn reset(&mut self) {
        self.state.reset();
        self.next_epoch = 1;
        self.selected = None;
    }
}
