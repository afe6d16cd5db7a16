//! One policy-versus-instance episode.

use crate::env::{BanditInstance, OraclePoint};
use crate::policy::Policy;

use super::stream::{draw_unit, RandomStream};
use super::SimError;

/// Full trajectory of a single episode.
///
/// Two cumulative regret trajectories are tracked. The mean-gap regret sums
/// the known per-epoch gaps `mu*_t - mu_t^{chosen}` conditionally on the
/// policy's actions; it is non-negative and non-decreasing by construction.
/// The realized regret sums reward-realization differences
/// `X_t^{oracle arm} - X_t^{chosen}`, which is noisy and can be negative
/// pointwise but has the same expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Arm pulled at each epoch, 1-based.
    pub chosen_arms: Vec<u32>,
    /// Realized Bernoulli reward of the pulled arm, in {0, 1}.
    pub realized_rewards: Vec<f64>,
    /// Running sum of the pulled arm's expected reward.
    pub cum_policy_mean_reward: Vec<f64>,
    /// Running sum of the per-epoch best expected reward.
    pub cum_oracle_mean_reward: Vec<f64>,
    /// Running sum of `mu*_t - mu_t^{chosen}`.
    pub cum_regret_mean_gap: Vec<f64>,
    /// Running sum of realized oracle-minus-policy reward differences.
    pub cum_regret_realized: Vec<f64>,
}

impl EpisodeResult {
    pub fn horizon(&self) -> usize {
        self.chosen_arms.len()
    }

    pub fn final_regret_mean_gap(&self) -> f64 {
        *self.cum_regret_mean_gap.last().expect("non-empty episode")
    }

    pub fn final_regret_realized(&self) -> f64 {
        *self.cum_regret_realized.last().expect("non-empty episode")
    }
}

/// Runs one episode: for `t = 1..=T`, select, sample the pulled arm's
/// reward, sample the oracle arm's reward (for the realized-regret
/// trajectory), observe.
///
/// The policy must be freshly reset and the stream exclusive to this
/// episode. Each epoch consumes exactly three uniform variates (selection,
/// pulled-arm reward, oracle-arm reward) regardless of the policy, so runs
/// with different policies stay stream-comparable. When the policy pulls
/// the oracle arm the epoch has a single physical realization, which is
/// reused and the third variate discarded.
pub fn run_episode(
    instance: &BanditInstance,
    policy: &mut dyn Policy,
    stream: &mut RandomStream,
) -> Result<EpisodeResult, SimError> {
    let oracle = instance.path().oracle_path();
    run_episode_with_oracle(instance, &oracle, policy, stream)
}

/// [`run_episode`] with a precomputed oracle path, so replications sharing
/// one instance do not recompute it.
pub(super) fn run_episode_with_oracle(
    instance: &BanditInstance,
    oracle: &[OraclePoint],
    policy: &mut dyn Policy,
    stream: &mut RandomStream,
) -> Result<EpisodeResult, SimError> {
    let horizon = instance.horizon();
    debug_assert_eq!(oracle.len(), horizon);
    let mut result = EpisodeResult {
        chosen_arms: Vec::with_capacity(horizon),
        realized_rewards: Vec::with_capacity(horizon),
        cum_policy_mean_reward: Vec::with_capacity(horizon),
        cum_oracle_mean_reward: Vec::with_capacity(horizon),
        cum_regret_mean_gap: Vec::with_capacity(horizon),
        cum_regret_realized: Vec::with_capacity(horizon),
    };
    let mut cum_policy = 0.0;
    let mut cum_oracle = 0.0;
    let mut cum_gap = 0.0;
    let mut cum_realized = 0.0;

    for t in 1..=horizon {
        let arm = policy.select_arm(t, stream)?;
        let reward = instance.sample_reward(arm, t, stream)?;
        let best = oracle[t - 1];
        let oracle_reward = {
            let u = draw_unit(stream);
            if best.arm == arm {
                reward
            } else if u < instance.path().mean(best.arm, t) {
                1.0
            } else {
                0.0
            }
        };
        policy.observe(t, arm, reward)?;

        let mu_chosen = instance.path().mean(arm, t);
        cum_policy += mu_chosen;
        cum_oracle += best.mean;
        cum_gap += best.mean - mu_chosen;
        cum_realized += oracle_reward - reward;

        result.chosen_arms.push(arm as u32);
        result.realized_rewards.push(reward);
        result.cum_policy_mean_reward.push(cum_policy);
        result.cum_oracle_mean_reward.push(cum_oracle);
        result.cum_regret_mean_gap.push(cum_gap);
        result.cum_regret_realized.push(cum_realized);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{BanditInstance, Generator, MeanRewardPath};
    use crate::policy::{PolicyError, PolicyKind, PolicySpec, UniformRandom};
    use crate::sim::derive;
    use rand::RngCore;

    fn two_arm_instance(mu1: f64, mu2: f64, horizon: usize) -> BanditInstance {
        let path =
            MeanRewardPath::from_fn(2, horizon, |k, _| if k == 1 { mu1 } else { mu2 }).unwrap();
        BanditInstance::from_path(path, 0.0, Generator::Custom, 0).unwrap()
    }

    /// Test stub that always plays the dynamic oracle's arm.
    struct OracleFollower(Vec<usize>);
    impl crate::policy::Policy for OracleFollower {
        fn select_arm(
            &mut self,
            epoch: usize,
            rng: &mut dyn RngCore,
        ) -> Result<usize, PolicyError> {
            let _ = super::draw_unit(rng);
            Ok(self.0[epoch - 1])
        }
        fn observe(&mut self, _: usize, _: usize, _: f64) -> Result<(), PolicyError> {
            Ok(())
        }
        fn reset(&mut self) {}
    }

    #[test]
    fn uniform_on_degenerate_means_halves_the_oracle() {
        // mu = (1, 0): uniform play loses 1/2 per epoch in expectation, so
        // the final mean-gap regret over 1e4 epochs is 5000 +- 250 (5 sigma
        // of a Binomial(1e4, 1/2)).
        let instance = two_arm_instance(1.0, 0.0, 10_000);
        let mut policy = UniformRandom::new(2).unwrap();
        let mut stream = derive(100, 0);
        let result = run_episode(&instance, &mut policy, &mut stream).unwrap();
        let regret = result.final_regret_mean_gap();
        assert!((regret - 5000.0).abs() <= 250.0, "regret {regret}");
    }

    #[test]
    fn oracle_follower_has_zero_regret() {
        let instance = BanditInstance::sinusoidal(500, 3.0).unwrap();
        let arms = instance
            .path()
            .oracle_path()
            .iter()
            .map(|o| o.arm)
            .collect();
        let mut policy = OracleFollower(arms);
        let mut stream = derive(7, 0);
        let result = run_episode(&instance, &mut policy, &mut stream).unwrap();
        assert!(result.cum_regret_mean_gap.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn equal_means_have_zero_regret_for_every_policy() {
        let instance = two_arm_instance(0.5, 0.5, 300);
        for kind in [PolicyKind::Rexp3, PolicyKind::UniformRandom] {
            let mut policy = PolicySpec::new(kind).build(300, 2, 1.0).unwrap();
            let mut stream = derive(8, 0);
            let result = run_episode(&instance, policy.as_mut(), &mut stream).unwrap();
            assert!(
                result.cum_regret_mean_gap.iter().all(|&r| r == 0.0),
                "{kind:?}"
            );
        }
    }

    #[test]
    fn mean_gap_regret_is_monotone_and_consistent() {
        let instance = BanditInstance::sinusoidal(2000, 3.0).unwrap();
        let mut policy = PolicySpec::new(PolicyKind::Rexp3)
            .build(2000, 2, 3.0)
            .unwrap();
        let mut stream = derive(9, 0);
        let r = run_episode(&instance, policy.as_mut(), &mut stream).unwrap();
        let mut prev = 0.0;
        for t in 0..2000 {
            let gap = r.cum_regret_mean_gap[t];
            assert!(gap >= prev, "regret decreased at epoch {}", t + 1);
            prev = gap;
            // The identity regret = oracle - policy holds up to accumulated
            // floating-point summation error.
            let diff = r.cum_oracle_mean_reward[t] - r.cum_policy_mean_reward[t];
            assert!(
                (gap - diff).abs() < 1e-9,
                "epoch {}: {gap} vs {diff}",
                t + 1
            );
        }
        // Sandwich: 0 <= regret <= T * max_t (mu*_t - min_k mu_t^k).
        let path = instance.path();
        let worst_gap = (1..=2000)
            .map(|t| {
                let mx = path.oracle_path()[t - 1].mean;
                let mn = (1..=2)
                    .map(|k| path.mean(k, t))
                    .fold(f64::INFINITY, f64::min);
                mx - mn
            })
            .fold(0.0, f64::max);
        assert!(r.final_regret_mean_gap() >= 0.0);
        assert!(r.final_regret_mean_gap() <= 2000.0 * worst_gap);
    }

    #[test]
    fn identical_streams_reproduce_the_episode() {
        let instance = BanditInstance::sinusoidal(800, 3.0).unwrap();
        let run = |seed| {
            let mut policy = PolicySpec::new(PolicyKind::Rexp3)
                .build(800, 2, 3.0)
                .unwrap();
            let mut stream = derive(seed, 4);
            run_episode(&instance, policy.as_mut(), &mut stream).unwrap()
        };
        assert_eq!(run(55), run(55));
        assert_ne!(run(55).chosen_arms, run(56).chosen_arms);
    }
}
