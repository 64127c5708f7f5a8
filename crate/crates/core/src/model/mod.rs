//! Jobs, rewards, service distributions, observable states and matchings.

mod instance;
mod reward;
mod service;
mod state;

pub(crate) use instance::shifted_expectation;
pub use instance::{expected_completion_reward, greedy_index, Instance, Job};
pub use reward::RewardFn;
pub use service::{ServiceDist, PMF_SUM_TOLERANCE};
pub use state::{
    all_matchings, feasible_matchings, residual_dist, JobStatus, Matching, ProcessorStatus, State,
    Xyz,
};
