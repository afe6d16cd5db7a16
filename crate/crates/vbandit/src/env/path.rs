//! The mean-reward matrix and its derived quantities.

use std::fmt::Write as _;

use super::{EnvError, BUDGET_TOLERANCE};

/// Expected rewards for `K` arms over `T` epochs, all entries in [0, 1].
///
/// Stored epoch-major; `mean(arm, epoch)` takes 1-based indices.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRewardPath {
    means: Vec<f64>,
    num_arms: usize,
    horizon: usize,
}

/// Per-epoch maximum expected reward and the arm attaining it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePoint {
    pub mean: f64,
    /// 1-based; ties break to the lowest arm index.
    pub arm: usize,
}

impl MeanRewardPath {
    /// Builds a path from epoch-major means (`means[(t-1)*K + (k-1)]`).
    pub fn new(num_arms: usize, horizon: usize, means: Vec<f64>) -> Result<Self, EnvError> {
        if num_arms < 2 {
            return Err(EnvError::InvalidPath(format!(
                "need at least 2 arms, got {num_arms}"
            )));
        }
        if horizon < 1 {
            return Err(EnvError::InvalidPath("horizon must be at least 1".into()));
        }
        if means.len() != num_arms * horizon {
            return Err(EnvError::InvalidPath(format!(
                "means length {} does not match K*T = {}",
                means.len(),
                num_arms * horizon
            )));
        }
        if let Some(bad) = means.iter().find(|m| !(0.0..=1.0).contains(*m)) {
            return Err(EnvError::InvalidPath(format!("mean {bad} outside [0, 1]")));
        }
        Ok(Self {
            means,
            num_arms,
            horizon,
        })
    }

    /// Builds a path by evaluating `f(arm, epoch)` with 1-based indices.
    pub fn from_fn(
        num_arms: usize,
        horizon: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, EnvError> {
        let mut means = Vec::with_capacity(num_arms * horizon);
        for t in 1..=horizon {
            for k in 1..=num_arms {
                means.push(f(k, t));
            }
        }
        Self::new(num_arms, horizon, means)
    }

    pub fn num_arms(&self) -> usize {
        self.num_arms
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Expected reward of `arm` at `epoch`, both 1-based.
    #[inline]
    pub fn mean(&self, arm: usize, epoch: usize) -> f64 {
        assert!(
            arm >= 1 && arm <= self.num_arms,
            "arm {arm} out of range 1..={}",
            self.num_arms
        );
        assert!(
            epoch >= 1 && epoch <= self.horizon,
            "epoch {epoch} out of range 1..={}",
            self.horizon
        );
        self.means[(epoch - 1) * self.num_arms + (arm - 1)]
    }

    /// All arm means at one epoch (1-based), in arm order.
    #[inline]
    pub fn epoch_means(&self, epoch: usize) -> &[f64] {
        assert!(
            epoch >= 1 && epoch <= self.horizon,
            "epoch {epoch} out of range 1..={}",
            self.horizon
        );
        let start = (epoch - 1) * self.num_arms;
        &self.means[start..start + self.num_arms]
    }

    /// Total variation `sum_{t=1}^{T-1} max_k |mu[k][t] - mu[k][t+1]|`.
    ///
    /// Zero when `T = 1`.
    pub fn total_variation(&self) -> f64 {
        let mut tv = 0.0;
        for t in 1..self.horizon {
            let cur = self.epoch_means(t);
            let next = self.epoch_means(t + 1);
            let step = cur
                .iter()
                .zip(next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            tv += step;
        }
        tv
    }

    /// Whether the path fits within `budget`, up to [`BUDGET_TOLERANCE`].
    pub fn check_budget(&self, budget: f64) -> bool {
        self.total_variation() <= budget + BUDGET_TOLERANCE
    }

    /// The dynamic oracle: per-epoch best mean and the arm attaining it.
    pub fn oracle_path(&self) -> Vec<OraclePoint> {
        (1..=self.horizon)
            .map(|t| {
                let means = self.epoch_means(t);
                let mut best = OraclePoint {
                    mean: means[0],
                    arm: 1,
                };
                for (i, &m) in means.iter().enumerate().skip(1) {
                    if m > best.mean {
                        best = OraclePoint {
                            mean: m,
                            arm: i + 1,
                        };
                    }
                }
                best
            })
            .collect()
    }

    /// CSV serialization: header `t,mu_1,...,mu_K`, one row per epoch,
    /// 17 significant digits so values round-trip bit-exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for k in 1..=self.num_arms {
            let _ = write!(out, ",mu_{k}");
        }
        out.push('\n');
        for t in 1..=self.horizon {
            let _ = write!(out, "{t}");
            for &m in self.epoch_means(t) {
                let _ = write!(out, ",{m:.16e}");
            }
            out.push('\n');
        }
        out
    }
}
