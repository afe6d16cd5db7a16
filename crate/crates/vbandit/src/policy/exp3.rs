//! The Exp3 exponential-weights subroutine.

use rand::RngCore;

use super::PolicyError;
use crate::sim::draw_unit;

/// Tuned batch size `ceil((K ln K)^(1/3) (T / V_T)^(2/3))`, capped at `T`.
pub fn batch_size(horizon: usize, arms: usize, budget: f64) -> usize {
    assert!(arms >= 2, "need at least 2 arms");
    assert!(horizon >= 1, "horizon must be at least 1");
    assert!(budget > 0.0, "budget must be positive");
    let raw = (arms as f64 * (arms as f64).ln()).powf(1.0 / 3.0)
        * (horizon as f64 / budget).powf(2.0 / 3.0);
    if raw >= horizon as f64 {
        horizon
    } else {
        (raw.ceil() as usize).min(horizon).max(1)
    }
}

/// Tuned exploration rate `min(1, sqrt(K ln K / ((e - 1) batch)))`.
pub fn exp3_gamma(arms: usize, batch: usize) -> f64 {
    assert!(arms >= 2, "need at least 2 arms");
    assert!(batch >= 1, "batch size must be at least 1");
    let k = arms as f64;
    (k * k.ln() / ((std::f64::consts::E - 1.0) * batch as f64))
        .sqrt()
        .min(1.0)
}

/// Exponential weights with uniform exploration.
///
/// Selection mixes the weight-proportional distribution with uniform
/// exploration at rate `gamma`, and updates boost the chosen arm's weight by
/// the importance-weighted reward estimate `reward / p`.
///
/// Weights are stored as log-weights and re-centered after every update
/// (one raw weight can grow by a factor of e per step, overflowing doubles
/// within a single long batch); re-centering leaves the selection
/// probabilities unchanged.
#[derive(Debug, Clone)]
pub struct Exp3State {
    log_weights: Vec<f64>,
    gamma: f64,
    probs: Vec<f64>,
    probs_valid: bool,
}

impl Exp3State {
    pub fn new(arms: usize, gamma: f64) -> Result<Self, PolicyError> {
        if arms < 2 {
            return Err(PolicyError::InvalidConfig(format!(
                "need at least 2 arms, got {arms}"
            )));
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(PolicyError::InvalidConfig(format!(
                "gamma must lie in (0, 1], got {gamma}"
            )));
        }
        Ok(Self {
            log_weights: vec![0.0; arms],
            gamma,
            probs: vec![0.0; arms],
            probs_valid: false,
        })
    }

    pub fn arms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Resets all weights to one (log-weights to zero).
    pub fn reset(&mut self) {
        self.log_weights.fill(0.0);
        self.probs_valid = false;
    }

    /// Selection probabilities for the current weights.
    pub fn probabilities(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.log_weights.len()];
        self.fill_probs_into(&mut probs);
        probs
    }

    fn fill_probs_into(&self, probs: &mut [f64]) {
        // Stable softmax: with the max log-weight subtracted, the largest
        // term is exactly 1 and the sum is at least 1.
        let max_lw = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (p, &lw) in probs.iter_mut().zip(&self.log_weights) {
            let e = (lw - max_lw).exp();
            *p = e;
            sum += e;
        }
        let k_inv = 1.0 / self.log_weights.len() as f64;
        for p in probs.iter_mut() {
            let w = *p / sum;
            // Same mixing as (1 - gamma) w + gamma / K, arranged so equal
            // weights give exactly 1/K.
            *p = w + self.gamma * (k_inv - w);
        }
    }

    /// Draws an arm (1-based) by inverse CDF in ascending arm order,
    /// consuming exactly one uniform variate. Caches the probabilities the
    /// draw used; `update` divides by the cached value.
    pub fn select(&mut self, rng: &mut dyn RngCore) -> usize {
        let mut probs = std::mem::take(&mut self.probs);
        self.fill_probs_into(&mut probs);
        self.probs = probs;
        self.probs_valid = true;
        let u = draw_unit(rng);
        let mut cum = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            cum += p;
            if u < cum {
                return i + 1;
            }
        }
        self.probs.len()
    }

    /// Importance-weighted update for the selected arm's realized reward.
    ///
    /// Requires the probabilities cached by the matching `select`; the
    /// chosen arm's log-weight grows by `gamma * (reward / p) / K`, which is
    /// at most 1 since `p >= gamma / K`.
    pub fn update(&mut self, chosen: usize, reward: f64) -> Result<(), PolicyError> {
        if !self.probs_valid {
            return Err(PolicyError::UpdateBeforeSelect);
        }
        let arms = self.log_weights.len();
        if chosen < 1 || chosen > arms {
            return Err(PolicyError::ArmOutOfRange { arm: chosen, arms });
        }
        if !(0.0..=1.0).contains(&reward) {
            return Err(PolicyError::RewardOutOfRange(reward));
        }
        let p = self.probs[chosen - 1];
        let estimate = reward / p;
        self.log_weights[chosen - 1] += self.gamma * estimate / arms as f64;
        let max_lw = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        for lw in &mut self.log_weights {
            *lw -= max_lw;
        }
        self.probs_valid = false;
        Ok(())
    }

    /// The probabilities cached by the last `select`, if still valid.
    pub fn cached_probabilities(&self) -> Option<&[f64]> {
        self.probs_valid.then_some(self.probs.as_slice())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::derive;
    use proptest::prelude::*;

    #[test]
    fn batch_size_matches_frozen_values() {
        // Frozen from direct evaluation of the ceiling formula.
        assert_eq!(batch_size(5000, 2, 3.0), 157);
        assert_eq!(batch_size(64, 2, 1.0), 18);
        assert_eq!(batch_size(2000, 2, 3.0), 86);
        // Cap at the horizon.
        assert_eq!(batch_size(1, 2, 0.5), 1);
    }

    #[test]
    fn gamma_matches_frozen_values() {
        // Frozen from direct evaluation with ln 2 = 0.693147...
        assert!((exp3_gamma(2, 157) - 0.0716853984).abs() < 1e-9);
        assert!((exp3_gamma(2, 1) - 0.8982154680).abs() < 1e-9);
        // Small enough batches clamp to 1.
        assert_eq!(exp3_gamma(4, 1), 1.0);
    }

    #[test]
    fn equal_weights_give_exactly_uniform_probabilities() {
        for arms in [2usize, 3, 5] {
            let state = Exp3State::new(arms, 0.3).unwrap();
            let probs = state.probabilities();
            let k_inv = 1.0 / arms as f64;
            for &p in &probs {
                assert_eq!(p, k_inv, "arms = {arms}");
            }
        }
    }

    #[test]
    fn gamma_one_ignores_weights() {
        let mut state = Exp3State::new(2, 1.0).unwrap();
        let mut rng = derive(1, 0);
        for _ in 0..10 {
            let arm = state.select(&mut rng);
            state.update(arm, 1.0).unwrap();
        }
        // Pure exploration: p = 1/K no matter how lopsided the weights are.
        for p in state.probabilities() {
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn hand_evaluated_mixing() {
        // K = 2, log-weights (ln 3, 0), gamma = 0.1:
        // softmax = (0.75, 0.25), p = (0.725, 0.275).
        let mut state = Exp3State::new(2, 0.1).unwrap();
        state.log_weights[0] = 3.0f64.ln();
        let probs = state.probabilities();
        assert!((probs[0] - 0.725).abs() < 1e-15);
        assert!((probs[1] - 0.275).abs() < 1e-15);
    }

    #[test]
    fn zero_reward_leaves_weights_unchanged() {
        let mut state = Exp3State::new(3, 0.2).unwrap();
        let mut rng = derive(2, 0);
        let before = state.log_weights.clone();
        let arm = state.select(&mut rng);
        state.update(arm, 0.0).unwrap();
        assert_eq!(state.log_weights, before);
    }

    #[test]
    fn hand_evaluated_update() {
        // Equal weights, gamma = 0.1, chosen arm rewarded 1: p = 0.5,
        // estimate = 2, log-weight increment 0.1 * 2 / 2 = 0.1, so the
        // weight ratio becomes e^0.1.
        let mut state = Exp3State::new(2, 0.1).unwrap();
        let mut rng = derive(3, 0);
        let arm = state.select(&mut rng);
        assert_eq!(state.cached_probabilities().unwrap(), &[0.5, 0.5]);
        state.update(arm, 1.0).unwrap();
        let ratio = (state.log_weights[arm - 1] - state.log_weights[arm % 2]).exp();
        assert!((ratio - 0.1f64.exp()).abs() < 1e-15, "ratio {ratio}");
    }

    #[test]
    fn update_requires_prior_select() {
        let mut state = Exp3State::new(2, 0.5).unwrap();
        assert!(matches!(
            state.update(1, 0.5),
            Err(PolicyError::UpdateBeforeSelect)
        ));
        let mut rng = derive(4, 0);
        let arm = state.select(&mut rng);
        state.update(arm, 0.5).unwrap();
        assert!(matches!(
            state.update(arm, 0.5),
            Err(PolicyError::UpdateBeforeSelect)
        ));
    }

    #[test]
    fn update_validates_inputs() {
        let mut state = Exp3State::new(2, 0.5).unwrap();
        let mut rng = derive(5, 0);
        state.select(&mut rng);
        assert!(matches!(
            state.update(3, 0.5),
            Err(PolicyError::ArmOutOfRange { .. })
        ));
        assert!(matches!(
            state.update(1, 1.5),
            Err(PolicyError::RewardOutOfRange(_))
        ));
    }

    // Importance-weighted estimates stay bounded: the per-step log-weight
    // increment gamma * (reward/p) / K never exceeds 1, and re-centering
    // keeps every log-weight finite over long runs.
    #[test]
    fn log_weights_stay_finite_and_increments_bounded() {
        let mut state = Exp3State::new(2, 0.05).unwrap();
        let mut rng = derive(6, 0);
        for step in 0..200_000 {
            let before = state.log_weights.clone();
            let arm = state.select(&mut rng);
            let reward = if arm == 1 { 1.0 } else { 0.0 };
            let p = state.cached_probabilities().unwrap()[arm - 1];
            state.update(arm, reward).unwrap();
            let increment = state.gamma * (reward / p) / 2.0;
            assert!(
                increment <= 1.0 + 1e-12,
                "step {step}: increment {increment}"
            );
            assert!(state.log_weights.iter().all(|lw| lw.is_finite()));
            let _ = before;
        }
    }

    // Unbiasedness of the importance-weighted estimator: with probabilities
    // held fixed, the Monte Carlo mean of reward/p restricted to one arm
    // matches that arm's true mean.
    #[test]
    fn importance_weighted_estimator_is_unbiased() {
        let mut state = Exp3State::new(2, 0.2).unwrap();
        state.log_weights[0] = 2.0f64.ln(); // tilt so p != 1/2
        let probs = state.probabilities();
        let mus = [0.7, 0.3];
        let target_arm = 1usize;
        let p = probs[target_arm - 1];
        let mut rng = derive(7, 0);
        let n = 100_000usize;
        let mut sum = 0.0;
        for _ in 0..n {
            let arm = state.select(&mut rng);
            let reward = if draw_unit(&mut rng) < mus[arm - 1] {
                1.0
            } else {
                0.0
            };
            if arm == target_arm {
                sum += reward / p;
            }
            // No update: probabilities stay fixed.
            state.probs_valid = false;
        }
        let mean = sum / n as f64;
        let mu = mus[target_arm - 1];
        // Var(estimate) = mu/p - mu^2 per round.
        let se = ((mu / p - mu * mu) / n as f64).sqrt();
        assert!(
            (mean - mu).abs() <= 5.0 * se,
            "mean {mean} vs mu {mu} (se {se})"
        );
    }

    proptest! {
        // Simplex invariants after arbitrary select/update sequences:
        // probabilities sum to one and respect the exploration floor.
        #[test]
        fn probabilities_stay_on_simplex(
            arms in 2usize..6,
            steps in 0usize..200,
            seed in any::<u64>(),
        ) {
            let gamma = exp3_gamma(arms, 50);
            let mut state = Exp3State::new(arms, gamma).unwrap();
            let mut rng = derive(seed, 2);
            for _ in 0..steps {
                let arm = state.select(&mut rng);
                let reward = draw_unit(&mut rng);
                state.update(arm, reward).unwrap();
            }
            let probs = state.probabilities();
            let sum: f64 = probs.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-12, "sum = {}", sum);
            let floor = gamma / arms as f64 - 1e-12;
            for &p in &probs {
                prop_assert!(p >= floor, "p = {} below floor {}", p, floor);
            }
        }
    }
}
