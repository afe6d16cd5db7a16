//! Mean-reward path constructions.

use rand::RngCore;

use super::path::MeanRewardPath;
use super::EnvError;
use crate::sim::draw_unit;

/// `sin(pi * x)` with exact range reduction in units of pi.
///
/// Working in half-turn units keeps the constructions' symmetry exact in
/// floating point: integer `x` maps to exactly 0, half-integer `x` to
/// exactly +/-1. Plain `sin(PI * x)` misses those points by an ulp of the
/// argument, which is enough to break the antiphase ties the generators
/// rely on.
fn sin_pi(x: f64) -> f64 {
    let mut r = x % 2.0;
    if r < 0.0 {
        r += 2.0;
    }
    if r <= 0.5 {
        (std::f64::consts::PI * r).sin()
    } else if r <= 1.0 {
        (std::f64::consts::PI * (1.0 - r)).sin()
    } else if r <= 1.5 {
        -(std::f64::consts::PI * (r - 1.0)).sin()
    } else {
        -(std::f64::consts::PI * (2.0 - r)).sin()
    }
}

/// Two antiphase sinusoids spreading the budget over the whole horizon:
/// `mu_1(t) = 1/2 + 1/2 sin(V_T pi t / T)` and `mu_2(t) = 1 - mu_1(t)`.
pub(crate) fn sinusoidal_path(horizon: usize, budget: f64) -> Result<MeanRewardPath, EnvError> {
    let t_f = horizon as f64;
    let mut means = Vec::with_capacity(2 * horizon);
    for t in 1..=horizon {
        // Phase in half-turn units: V_T * t / T.
        let mu1 = 0.5 + 0.5 * sin_pi(budget * t as f64 / t_f);
        let mu1 = mu1.clamp(0.0, 1.0);
        means.push(mu1);
        means.push(1.0 - mu1);
    }
    MeanRewardPath::new(2, horizon, means)
}

/// The same variation compressed into the first third of the horizon:
/// `mu_1(t) = 1/2 + 1/2 sin(3 V_T pi t / T + pi/2)` while `3t < T`, then 0;
/// `mu_2(t) = 1 - mu_1(t)` throughout (so 1 after the sweep).
pub(crate) fn compressed_path(horizon: usize, budget: f64) -> Result<MeanRewardPath, EnvError> {
    if horizon < 3 {
        return Err(EnvError::InvalidPath(
            "compressed instance needs a horizon of at least 3".into(),
        ));
    }
    let t_f = horizon as f64;
    let mut means = Vec::with_capacity(2 * horizon);
    for t in 1..=horizon {
        // "t < T/3" evaluated in exact integer arithmetic.
        let mu1 = if 3 * t < horizon {
            let v = 0.5 + 0.5 * sin_pi(3.0 * budget * t as f64 / t_f + 0.5);
            v.clamp(0.0, 1.0)
        } else {
            0.0
        };
        means.push(mu1);
        means.push(1.0 - mu1);
    }
    MeanRewardPath::new(2, horizon, means)
}

/// Batch layout and gap size of the randomized worst-case family.
///
/// The horizon splits into `ceil(T / batch)` batches of `batch` epochs
/// (the last possibly shorter); within each batch one uniformly drawn arm
/// pays `1/2 + epsilon`, the rest pay `1/2`.
pub(crate) struct WorstCaseLayout {
    pub batch: usize,
    pub epsilon: f64,
}

impl WorstCaseLayout {
    pub fn new(horizon: usize, arms: usize, budget: f64, batch_override: Option<usize>) -> Self {
        let batch = batch_override.unwrap_or_else(|| {
            let raw = (arms as f64).powf(1.0 / 3.0) * (horizon as f64 / budget).powf(2.0 / 3.0);
            raw.ceil() as usize
        });
        let batch = batch.max(1);
        let epsilon = (budget * batch as f64 / horizon as f64).min(0.25);
        Self { batch, epsilon }
    }
}

pub(crate) fn worst_case_path(
    horizon: usize,
    arms: usize,
    layout: &WorstCaseLayout,
    rng: &mut dyn RngCore,
) -> Result<MeanRewardPath, EnvError> {
    let num_batches = horizon.div_ceil(layout.batch);
    let mut means = Vec::with_capacity(arms * horizon);
    for j in 0..num_batches {
        let good = {
            let u = draw_unit(rng);
            ((u * arms as f64) as usize).min(arms - 1)
        };
        let start = j * layout.batch + 1;
        let end = ((j + 1) * layout.batch).min(horizon);
        for _t in start..=end {
            for k in 0..arms {
                means.push(if k == good { 0.5 + layout.epsilon } else { 0.5 });
            }
        }
    }
    MeanRewardPath::new(arms, horizon, means)
}
