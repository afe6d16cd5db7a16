//! Uniform-random baseline.

use rand::RngCore;

use super::{Policy, PolicyError};
use crate::sim::draw_unit;

/// Picks an arm uniformly at random every epoch, ignoring feedback.
/// Consumes one uniform variate per selection like every other policy.
#[derive(Debug, Clone)]
pub struct UniformRandom {
    arms: usize,
}

impl UniformRandom {
    pub fn new(arms: usize) -> Result<Self, PolicyError> {
        if arms < 2 {
            return Err(PolicyError::InvalidConfig(format!(
                "need at least 2 arms, got {arms}"
            )));
        }
        Ok(Self { arms })
    }
}

impl Policy for UniformRandom {
    fn select_arm(&mut self, _epoch: usize, rng: &mut dyn RngCore) -> Result<usize, PolicyError> {
        let u = draw_unit(rng);
        Ok(((u * self.arms as f64) as usize).min(self.arms - 1) + 1)
    }

    fn observe(&mut self, _epoch: usize, arm: usize, reward: f64) -> Result<(), PolicyError> {
        if arm < 1 || arm > self.arms {
            return Err(PolicyError::ArmOutOfRange {
                arm,
                arms: self.arms,
            });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(PolicyError::RewardOutOfRange(reward));
        }
        Ok(())
    }

    fn reset(&mut self) {}
}
