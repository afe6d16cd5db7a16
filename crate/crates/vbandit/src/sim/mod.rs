//! Episode execution, deterministic parallel replication, and grid sweeps.

mod episode;
mod replicate;
mod stream;
mod sweep;

pub use episode::{run_episode, EpisodeResult};
pub use replicate::{replicate, Estimator, InstanceSpec, RegretCurve, ReplicationPlan};
pub use stream::{derive, draw_unit, RandomStream};
pub use sweep::{sweep, SweepPoint};

use thiserror::Error;

use crate::env::EnvError;
use crate::policy::PolicyError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("invalid replication plan: {0}")]
    InvalidPlan(String),
    #[error("sweep called with an empty grid")]
    EmptyGrid,
    #[error("sweep failed at grid point {index} (T = {horizon}, V_T = {budget}): {source}")]
    GridPointFailed {
        index: usize,
        horizon: usize,
        budget: f64,
        #[source]
        source: Box<SimError>,
    },
}
