//! Simulation library for multi-armed bandits with non-stationary rewards
//! under a variation budget.
//!
//! The environment fixes a matrix of expected rewards `mu[k][t]` whose total
//! variation over the horizon may not exceed a budget `V_T`; rewards are
//! Bernoulli draws around those means. Policies are measured by cumulative
//! regret against the dynamic oracle, which plays the best arm of every
//! epoch. The headline policy is Rexp3, which restarts Exp3 every
//! `ceil((K ln K)^(1/3) (T/V_T)^(2/3))` epochs; its regret grows like
//! `(K V_T)^(1/3) T^(2/3)`, and the [`analysis`] module fits exactly that
//! growth exponent from simulation output.
//!
//! - [`env`]: mean-reward paths, budget checks, instance generators,
//!   Bernoulli sampling.
//! - [`policy`]: Exp3, the Rexp3 restart wrapper, and baselines behind one
//!   sequential interface.
//! - [`sim`]: episodes, deterministic parallel replication keyed by
//!   `(master_seed, replication_index)`, grid sweeps.
//! - [`analysis`]: log-log slope fits and the theoretical regret envelopes.

pub mod analysis;
pub mod env;
pub mod policy;
pub mod sim;

pub use analysis::{
    loglog_slope, slope_of_slopes, stage_two_slope_table, AnalysisError, BoundEnvelope, SlopeFit,
    SlopeRow,
};
pub use env::{BanditInstance, BudgetSpec, EnvError, Generator, MeanRewardPath, WorstCaseConfig};
pub use policy::{Policy, PolicyError, PolicyKind, PolicySpec, PolicyTuning};
pub use sim::{
    derive, replicate, run_episode, sweep, EpisodeResult, Estimator, InstanceSpec, RandomStream,
    RegretCurve, ReplicationPlan, SimError, SweepPoint,
};
