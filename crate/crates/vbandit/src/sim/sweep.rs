//! Grid execution over horizons or budgets.

use super::replicate::{replicate, RegretCurve, ReplicationPlan};
use super::SimError;

/// One executed grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub horizon: usize,
    pub budget: f64,
    pub curve: RegretCurve,
}

/// Replicates every plan in grid order. A failed point aborts the sweep
/// with an error naming the point.
pub fn sweep(plans: &[ReplicationPlan]) -> Result<Vec<SweepPoint>, SimError> {
    if plans.is_empty() {
        return Err(SimError::EmptyGrid);
    }
    plans
        .iter()
        .enumerate()
        .map(|(index, plan)| {
            let curve = replicate(plan).map_err(|source| SimError::GridPointFailed {
                index,
                horizon: plan.horizon,
                budget: plan.budget,
                source: Box::new(source),
            })?;
            Ok(SweepPoint {
                horizon: plan.horizon,
                budget: plan.budget,
                curve,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{PolicyKind, PolicySpec};
    use crate::sim::{Estimator, InstanceSpec};

    fn plan(horizon: usize, budget: f64) -> ReplicationPlan {
        ReplicationPlan {
            instance: InstanceSpec::Sinusoidal,
            horizon,
            budget,
            policy: PolicySpec::new(PolicyKind::Rexp3),
            replications: 16,
            master_seed: 11,
            estimator: Estimator::MeanGap,
            record_trajectory: false,
            trajectory_stride: None,
        }
    }

    #[test]
    fn empty_grid_is_an_error() {
        assert!(matches!(sweep(&[]), Err(SimError::EmptyGrid)));
    }

    #[test]
    fn results_follow_grid_order() {
        let plans = vec![plan(200, 3.0), plan(400, 3.0), plan(800, 3.0)];
        let points = sweep(&plans).unwrap();
        let horizons: Vec<usize> = points.iter().map(|p| p.horizon).collect();
        assert_eq!(horizons, vec![200, 400, 800]);
    }

    #[test]
    fn failures_name_the_grid_point() {
        // Second point has an invalid budget.
        let mut bad = plan(400, 3.0);
        bad.budget = -1.0;
        let plans = vec![plan(200, 3.0), bad];
        match sweep(&plans) {
            Err(SimError::GridPointFailed { index, horizon, .. }) => {
                assert_eq!(index, 1);
                assert_eq!(horizon, 400);
            }
            other => panic!("expected GridPointFailed, got {other:?}"),
        }
    }
}
