//! Sequential decision policies behind one non-anticipating interface.

mod exp3;
mod rexp3;
mod uniform;

pub use exp3::{batch_size, exp3_gamma, Exp3State};
pub use rexp3::{Rexp3, Rexp3Config};
pub use uniform::UniformRandom;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("invalid policy config: {0}")]
    InvalidConfig(String),
    #[error("update before select: no cached probabilities for this step")]
    UpdateBeforeSelect,
    #[error("out-of-order epoch: expected {expected}, got {got}")]
    OutOfOrderEpoch { expected: usize, got: usize },
    #[error("observed arm {observed} does not match selected arm {selected}")]
    ObservedArmMismatch { selected: usize, observed: usize },
    #[error("arm index {arm} out of range 1..={arms}")]
    ArmOutOfRange { arm: usize, arms: usize },
    #[error("reward {0} outside [0, 1]")]
    RewardOutOfRange(f64),
}

/// A non-anticipating bandit policy.
///
/// The driver presents epochs in order `t = 1..=T`, calling `select_arm`
/// then `observe` with the realized reward of the selected arm. Arm indices
/// and epochs are 1-based. A policy may only use past observations and the
/// supplied randomness.
pub trait Policy {
    fn select_arm(&mut self, epoch: usize, rng: &mut dyn RngCore) -> Result<usize, PolicyError>;

    fn observe(&mut self, epoch: usize, arm: usize, reward: f64) -> Result<(), PolicyError>;

    /// Returns the policy to its initial state.
    fn reset(&mut self);
}

/// Policy families exposed to experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Exp3 restarted every `batch_size` epochs with the tuned batch/gamma.
    Rexp3,
    /// Plain Exp3 over the whole horizon (a single batch). There is no
    /// guarantee for its regret against the dynamic oracle; it serves as
    /// the no-restart comparison.
    Exp3Norestart,
    /// Uniform arm choice every epoch; sanity baseline.
    UniformRandom,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Rexp3 => "rexp3",
            PolicyKind::Exp3Norestart => "exp3_norestart",
            PolicyKind::UniformRandom => "uniform_random",
        }
    }
}

/// A policy choice plus optional tuning overrides, resolvable against a
/// concrete `(horizon, arms, budget)` triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    #[serde(default)]
    pub batch_size: Option<usize>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            batch_size: None,
            gamma: None,
        }
    }

    /// Resolves the effective tuning parameters without building the policy.
    pub fn resolve(
        &self,
        horizon: usize,
        arms: usize,
        budget: f64,
    ) -> Result<PolicyTuning, PolicyError> {
        match self.kind {
            PolicyKind::Rexp3 => {
                let config = Rexp3Config {
                    horizon,
                    arms,
                    budget,
                    batch_size: self.batch_size,
                    gamma: self.gamma,
                };
                config.validate()?;
                Ok(PolicyTuning {
                    kind: self.kind,
                    batch_size: Some(config.resolved_batch_size()),
                    gamma: Some(config.resolved_gamma()),
                })
            }
            PolicyKind::Exp3Norestart => {
                if self.batch_size.is_some() {
                    return Err(PolicyError::InvalidConfig(
                        "exp3_norestart does not take a batch_size override; its batch is the horizon".into(),
                    ));
                }
                let config = Rexp3Config {
                    horizon,
                    arms,
                    budget,
                    batch_size: Some(horizon),
                    gamma: self.gamma,
                };
                config.validate()?;
                Ok(PolicyTuning {
                    kind: self.kind,
                    batch_size: Some(config.resolved_batch_size()),
                    gamma: Some(config.resolved_gamma()),
                })
            }
            PolicyKind::UniformRandom => {
                if self.batch_size.is_some() || self.gamma.is_some() {
                    return Err(PolicyError::InvalidConfig(
                        "uniform_random takes no tuning overrides".into(),
                    ));
                }
                if arms < 2 {
                    return Err(PolicyError::InvalidConfig(format!(
                        "need at least 2 arms, got {arms}"
                    )));
                }
                Ok(PolicyTuning {
                    kind: self.kind,
                    batch_size: None,
                    gamma: None,
                })
            }
        }
    }

    /// Builds a policy object for one episode.
    pub fn build(
        &self,
        horizon: usize,
        arms: usize,
        budget: f64,
    ) -> Result<Box<dyn Policy>, PolicyError> {
        let tuning = self.resolve(horizon, arms, budget)?;
        make_policy(horizon, arms, &tuning)
    }
}

/// Fully resolved tuning parameters, recorded into output files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyTuning {
    pub kind: PolicyKind,
    pub batch_size: Option<usize>,
    pub gamma: Option<f64>,
}

/// Instantiates a policy from resolved tuning.
pub fn make_policy(
    horizon: usize,
    arms: usize,
    tuning: &PolicyTuning,
) -> Result<Box<dyn Policy>, PolicyError> {
    match tuning.kind {
        PolicyKind::Rexp3 | PolicyKind::Exp3Norestart => {
            let batch = tuning
                .batch_size
                .ok_or_else(|| PolicyError::InvalidConfig("missing resolved batch size".into()))?;
            let gamma = tuning
                .gamma
                .ok_or_else(|| PolicyError::InvalidConfig("missing resolved gamma".into()))?;
            Ok(Box::new(Rexp3::new(Rexp3Config {
                horizon,
                arms,
                // The budget only enters through the resolved tuning.
                budget: 1.0,
                batch_size: Some(batch),
                gamma: Some(gamma),
            })?))
        }
        PolicyKind::UniformRandom => Ok(Box::new(UniformRandom::new(arms)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive;

    #[test]
    fn rexp3_defaults_resolve_to_tuned_values() {
        let spec = PolicySpec::new(PolicyKind::Rexp3);
        let tuning = spec.resolve(5000, 2, 3.0).unwrap();
        assert_eq!(tuning.batch_size, Some(157));
        let gamma = tuning.gamma.unwrap();
        assert!((gamma - 0.0716853984).abs() < 1e-9, "gamma = {gamma}");
    }

    #[test]
    fn exp3_norestart_is_rexp3_with_horizon_batch() {
        let spec = PolicySpec::new(PolicyKind::Exp3Norestart);
        let tuning = spec.resolve(5000, 2, 3.0).unwrap();
        assert_eq!(tuning.batch_size, Some(5000));
        assert!(tuning.gamma.unwrap() < 1.0);
    }

    #[test]
    fn overrides_are_validated() {
        let mut spec = PolicySpec::new(PolicyKind::UniformRandom);
        spec.gamma = Some(0.5);
        assert!(spec.resolve(100, 2, 1.0).is_err());

        let mut spec = PolicySpec::new(PolicyKind::Exp3Norestart);
        spec.batch_size = Some(10);
        assert!(spec.resolve(100, 2, 1.0).is_err());

        let mut spec = PolicySpec::new(PolicyKind::Rexp3);
        spec.gamma = Some(1.5);
        assert!(spec.resolve(100, 2, 1.0).is_err());
    }

    #[test]
    fn uniform_policy_mean_reward_is_arm_average() {
        // On any instance the expected per-epoch reward of uniform_random is
        // the arm average; with means {1, 0} that is 1/2.
        let spec = PolicySpec::new(PolicyKind::UniformRandom);
        let mut policy = spec.build(10_000, 2, 1.0).unwrap();
        let mut rng = derive(21, 0);
        let mut ones = 0usize;
        for t in 1..=10_000 {
            let arm = policy.select_arm(t, &mut rng).unwrap();
            let reward = if arm == 1 { 1.0 } else { 0.0 };
            ones += (arm == 1) as usize;
            policy.observe(t, arm, reward).unwrap();
        }
        let freq = ones as f64 / 10_000.0;
        // 5 sigma of a fair coin over 1e4 trials is 0.025.
        assert!((freq - 0.5).abs() < 0.025, "arm-1 frequency {freq}");
    }
}
