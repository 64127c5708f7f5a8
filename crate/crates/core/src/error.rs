use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchedError {
    #[error("invalid reward function: {0}")]
    InvalidReward(String),

    #[error("invalid service distribution: {0}")]
    InvalidService(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("inconsistent state: {0}")]
    InvalidState(String),

    #[error("infeasible action at slot {t}: {reason}")]
    InfeasibleAction { t: u32, reason: String },

    #[error("job {0} is already done")]
    JobDone(usize),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state space too large: {dimension} reached {count} (cap {cap})")]
    StateSpaceTooLarge {
        dimension: &'static str,
        count: u64,
        cap: u64,
    },

    #[error("policy has no decision for state at slot {t}: {detail}")]
    PolicyLookup { t: u32, detail: String },

    #[error("bound violated: {0}")]
    BoundViolated(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = SchedError> = std::result::Result<T, E>;
