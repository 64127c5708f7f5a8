use serde::{Deserialize, Serialize};

use super::{RewardFn, ServiceDist};
use crate::error::{Result, SchedError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub reward: RewardFn,
    pub service: ServiceDist,
}

impl Job {
    pub fn new(reward: RewardFn, service: ServiceDist) -> Self {
        Job { reward, service }
    }

    /// `E[w(t + σ)]`: the reward locked in by starting this job at slot `t`.
    ///
    /// The sum stops at the reward horizon, beyond which every term is zero,
    /// so the geometric case is exact.
    pub fn expected_completion_reward(&self, t: u32) -> f64 {
        shifted_expectation(&self.reward, &self.service, t)
    }

    /// Expected reward rate of starting the job at `t`: `E[w(t + σ)] / E[σ]`.
    pub fn greedy_index(&self, t: u32) -> f64 {
        self.expected_completion_reward(t) / self.service.mean()
    }
}

/// `J` jobs, `N` identical unit-rate processors and a horizon after which
/// every reward is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceDoc", into = "InstanceDoc")]
pub struct Instance {
    jobs: Vec<Job>,
    n_processors: usize,
    horizon: u32,
}

#[derive(Serialize, Deserialize)]
struct InstanceDoc {
    n_processors: usize,
    horizon: u32,
    jobs: Vec<Job>,
}

impl TryFrom<InstanceDoc> for Instance {
    type Error = SchedError;

    fn try_from(doc: InstanceDoc) -> Result<Self> {
        Instance::new(doc.jobs, doc.n_processors, doc.horizon)
    }
}

impl From<Instance> for InstanceDoc {
    fn from(i: Instance) -> Self {
        InstanceDoc {
            n_processors: i.n_processors,
            horizon: i.horizon,
            jobs: i.jobs,
        }
    }
}

impl Instance {
    pub fn new(jobs: Vec<Job>, n_processors: usize, horizon: u32) -> Result<Self> {
        if jobs.is_empty() {
            return Err(SchedError::InvalidInstance("need at least one job".into()));
        }
        if n_processors == 0 {
            return Err(SchedError::InvalidInstance("need at least one processor".into()));
        }
        if horizon == 0 {
            return Err(SchedError::InvalidInstance("horizon must be >= 1".into()));
        }
        for (j, job) in jobs.iter().enumerate() {
            job.reward.validate()?;
            job.service.validate()?;
            if job.reward.horizon() > horizon {
                return Err(SchedError::InvalidInstance(format!(
                    "job {j} reward horizon {} exceeds instance horizon {horizon}",
                    job.reward.horizon()
                )));
            }
        }
        Ok(Instance {
            jobs,
            n_processors,
            horizon,
        })
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, j: usize) -> &Job {
        &self.jobs[j]
    }

    pub fn n_jobs(&self) -> usize {
        self.jobs.len()
    }

    pub fn n_processors(&self) -> usize {
        self.n_processors
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// True when every job has the same service distribution.
    pub fn is_iid(&self) -> bool {
        self.jobs.windows(2).all(|w| w[0].service == w[1].service)
    }

    pub fn all_deterministic(&self) -> bool {
        self.jobs
            .iter()
            .all(|j| matches!(j.service, ServiceDist::Deterministic { .. }))
    }

    /// The instance without job `j`; `None` if it was the only job.
    pub fn without_job(&self, j: usize) -> Option<Instance> {
        if self.jobs.len() <= 1 || j >= self.jobs.len() {
            return None;
        }
        let mut jobs = self.jobs.clone();
        jobs.remove(j);
        Some(Instance { jobs, ..self.clone() })
    }

    /// Every reward dilated in time by `factor`; the horizon grows to match.
    pub fn stretched(&self, factor: u32) -> Instance {
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job::new(j.reward.stretched(factor), j.service.clone()))
            .collect();
        Instance {
            jobs,
            n_processors: self.n_processors,
            horizon: factor * (self.horizon + 1) - 1,
        }
    }

    /// Every reward multiplied by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Instance {
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job::new(j.reward.scaled(factor), j.service.clone()))
            .collect();
        Instance {
            jobs,
            ..self.clone()
        }
    }

    /// Jobs reordered so that new job `i` is old job `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Instance {
        assert_eq!(perm.len(), self.jobs.len());
        let jobs = perm.iter().map(|&j| self.jobs[j].clone()).collect();
        Instance {
            jobs,
            ..self.clone()
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| SchedError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("instance always serializes")
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

/// `E[w(t + σ)]` for any reward/service pairing.
pub(crate) fn shifted_expectation(reward: &RewardFn, service: &ServiceDist, t: u32) -> f64 {
    let h = reward.horizon();
    if t >= h {
        return 0.0;
    }
    let span = h - t;
    match service {
        ServiceDist::Geometric { p } => {
            let q = 1.0 - p;
            let mut prob = *p;
            let mut acc = 0.0;
            for s in 1..=span {
                acc += prob * reward.eval(t + s);
                prob *= q;
            }
            acc
        }
        ServiceDist::Deterministic { duration } => {
            if *duration <= span {
                reward.eval(t + duration)
            } else {
                0.0
            }
        }
        ServiceDist::Empirical { pmf } => pmf
            .iter()
            .enumerate()
            .take(span as usize)
            .map(|(i, pr)| pr * reward.eval(t + i as u32 + 1))
            .sum(),
    }
}

/// Free-function form of [`Job::expected_completion_reward`].
pub fn expected_completion_reward(job: &Job, t: u32) -> f64 {
    job.expected_completion_reward(t)
}

/// Free-function form of [`Job::greedy_index`].
pub fn greedy_index(job: &Job, t: u32) -> f64 {
    job.greedy_index(t)
}
