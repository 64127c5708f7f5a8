use itertools::Itertools;

use super::{Instance, ServiceDist};
use crate::error::{Result, SchedError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JobStatus {
    Waiting,
    InService { processor: usize, start_slot: u32 },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProcessorStatus {
    Free,
    Busy { job: usize },
}

/// Observable system state at the beginning of slot `t`.
///
/// Realized service times never appear here; only completion flags, start
/// slots and processor occupancy do.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State {
    t: u32,
    jobs: Vec<JobStatus>,
    processors: Vec<ProcessorStatus>,
}

/// The `(x, y, z)` encoding: completion flags, start slots, processor occupancy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Xyz {
    /// `true` while the job has not completed.
    pub x: Vec<bool>,
    /// Start slot of an in-service job, `None` otherwise.
    pub y: Vec<Option<u32>>,
    /// Job occupying each processor, `None` when free.
    pub z: Vec<Option<usize>>,
}

impl State {
    /// Builds a state and checks the job/processor cross-references.
    pub fn new(t: u32, jobs: Vec<JobStatus>, processors: Vec<ProcessorStatus>) -> Result<Self> {
        let s = State { t, jobs, processors };
        s.check_consistency()?;
        Ok(s)
    }

    pub fn initial(instance: &Instance) -> Self {
        State {
            t: 0,
            jobs: vec![JobStatus::Waiting; instance.n_jobs()],
            processors: vec![ProcessorStatus::Free; instance.n_processors()],
        }
    }

    fn check_consistency(&self) -> Result<()> {
        let bad = |m: String| Err(SchedError::InvalidState(m));
        for (j, st) in self.jobs.iter().enumerate() {
            if let JobStatus::InService { processor, start_slot } = *st {
                if start_slot >= self.t {
                    return bad(format!(
                        "job {j} started at {start_slot}, not before slot {}",
                        self.t
                    ));
                }
                match self.processors.get(processor) {
                    Some(ProcessorStatus::Busy { job }) if *job == j => {}
                    _ => return bad(format!("job {j} claims processor {processor}, which disagrees")),
                }
            }
        }
        for (n, st) in self.processors.iter().enumerate() {
            if let ProcessorStatus::Busy { job } = *st {
                match self.jobs.get(job) {
                    Some(JobStatus::InService { processor, .. }) if *processor == n => {}
                    _ => return bad(format!("processor {n} claims job {job}, which disagrees")),
                }
            }
        }
        Ok(())
    }

    /// Consistency plus agreement with the instance dimensions.
    pub fn validate_for(&self, instance: &Instance) -> Result<()> {
        if self.jobs.len() != instance.n_jobs() {
            return Err(SchedError::InvalidState(format!(
                "state has {} jobs, instance has {}",
                self.jobs.len(),
                instance.n_jobs()
            )));
        }
        if self.processors.len() != instance.n_processors() {
            return Err(SchedError::InvalidState(format!(
                "state has {} processors, instance has {}",
                self.processors.len(),
                instance.n_processors()
            )));
        }
        self.check_consistency()
    }

    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn job_status(&self, j: usize) -> JobStatus {
        self.jobs[j]
    }

    pub fn job_statuses(&self) -> &[JobStatus] {
        &self.jobs
    }

    pub fn processor_statuses(&self) -> &[ProcessorStatus] {
        &self.processors
    }

    pub fn waiting_jobs(&self) -> impl Iterator<Item = usize> + '_ {
        self.jobs
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, JobStatus::Waiting))
            .map(|(j, _)| j)
    }

    pub fn free_processors(&self) -> impl Iterator<Item = usize> + '_ {
        self.processors
            .iter()
            .enumerate()
            .filter(|(_, s)| matches!(s, ProcessorStatus::Free))
            .map(|(n, _)| n)
    }

    pub fn all_done(&self) -> bool {
        self.jobs.iter().all(|s| matches!(s, JobStatus::Done))
    }

    /// Elapsed service of an in-service job.
    pub fn age(&self, j: usize) -> Option<u32> {
        match self.jobs[j] {
            JobStatus::InService { start_slot, .. } => Some(self.t - start_slot),
            _ => None,
        }
    }

    pub fn to_xyz(&self) -> Xyz {
        let x = self.jobs.iter().map(|s| !matches!(s, JobStatus::Done)).collect();
        let y = self
            .jobs
            .iter()
            .map(|s| match s {
                JobStatus::InService { start_slot, .. } => Some(*start_slot),
                _ => None,
            })
            .collect();
        let z = self
            .processors
            .iter()
            .map(|s| match s {
                ProcessorStatus::Busy { job } => Some(*job),
                ProcessorStatus::Free => None,
            })
            .collect();
        Xyz { x, y, z }
    }

    pub fn from_xyz(t: u32, xyz: &Xyz) -> Result<Self> {
        if xyz.x.len() != xyz.y.len() {
            return Err(SchedError::InvalidState("x and y lengths differ".into()));
        }
        let mut jobs = Vec::with_capacity(xyz.x.len());
        for (j, (&alive, &start)) in xyz.x.iter().zip(&xyz.y).enumerate() {
            let status = match (alive, start) {
                (false, _) => JobStatus::Done,
                (true, None) => JobStatus::Waiting,
                (true, Some(start_slot)) => {
                    let processor = xyz.z.iter().position(|z| *z == Some(j)).ok_or_else(|| {
                        SchedError::InvalidState(format!("job {j} started but no processor holds it"))
                    })?;
                    JobStatus::InService { processor, start_slot }
                }
            };
            jobs.push(status);
        }
        let processors = xyz
            .z
            .iter()
            .map(|z| match z {
                Some(job) => ProcessorStatus::Busy { job: *job },
                None => ProcessorStatus::Free,
            })
            .collect();
        State::new(t, jobs, processors)
    }

    /// Starts the matched jobs at the current slot; `t` is unchanged.
    pub(crate) fn with_started(&self, action: &Matching) -> State {
        let mut next = self.clone();
        for &(j, n) in action.pairs() {
            next.jobs[j] = JobStatus::InService {
                processor: n,
                start_slot: self.t,
            };
            next.processors[n] = ProcessorStatus::Busy { job: j };
        }
        next
    }

    /// Marks `j` done and frees its processor.
    pub(crate) fn complete(&mut self, j: usize) {
        if let JobStatus::InService { processor, .. } = self.jobs[j] {
            self.processors[processor] = ProcessorStatus::Free;
        }
        self.jobs[j] = JobStatus::Done;
    }

    pub(crate) fn advance(&mut self) {
        self.t += 1;
    }

    /// Raw constructor for internally generated states known to be consistent.
    pub(crate) fn from_parts(t: u32, jobs: Vec<JobStatus>, processors: Vec<ProcessorStatus>) -> Self {
        let s = State { t, jobs, processors };
        debug_assert!(s.check_consistency().is_ok(), "{s:?}");
        s
    }
}

/// A set of (job, processor) pairs started in the current slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn empty() -> Self {
        Matching::default()
    }

    pub fn new(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Matching { pairs }
    }

    /// Assigns `jobs` (in ascending id order) to the free processors of `state`
    /// in ascending processor index.
    pub fn canonical(jobs: &[usize], state: &State) -> Self {
        let mut jobs = jobs.to_vec();
        jobs.sort_unstable();
        let pairs = jobs.into_iter().zip(state.free_processors()).collect();
        Matching { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn jobs(&self) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Every job waiting, every processor free, each used at most once.
    pub fn check_feasible(&self, state: &State) -> Result<()> {
        let fail = |reason: String| {
            Err(SchedError::InfeasibleAction {
                t: state.t(),
                reason,
            })
        };
        let mut seen_jobs = Vec::with_capacity(self.pairs.len());
        let mut seen_procs = Vec::with_capacity(self.pairs.len());
        for &(j, n) in &self.pairs {
            match state.jobs.get(j) {
                Some(JobStatus::Waiting) => {}
                Some(other) => return fail(format!("job {j} is not waiting ({other:?})")),
                None => return fail(format!("job {j} does not exist")),
            }
            match state.processors.get(n) {
                Some(ProcessorStatus::Free) => {}
                Some(other) => return fail(format!("processor {n} is not free ({other:?})")),
                None => return fail(format!("processor {n} does not exist")),
            }
            if seen_jobs.contains(&j) {
                return fail(format!("job {j} matched twice"));
            }
            if seen_procs.contains(&n) {
                return fail(format!("processor {n} matched twice"));
            }
            seen_jobs.push(j);
            seen_procs.push(n);
        }
        Ok(())
    }

    /// True when the matching starts `min(K, F)` jobs.
    pub fn is_non_idling(&self, state: &State) -> bool {
        let k = state.waiting_jobs().count();
        let f = state.free_processors().count();
        self.len() == k.min(f)
    }
}

/// Non-idling matchings of `state`: every subset of exactly `min(K, F)` waiting
/// jobs, in lexicographic order, each assigned canonically to free processors.
pub fn feasible_matchings(state: &State, instance: &Instance) -> Result<Vec<Matching>> {
    state.validate_for(instance)?;
    let waiting: Vec<usize> = state.waiting_jobs().collect();
    let size = waiting.len().min(state.free_processors().count());
    Ok(waiting
        .into_iter()
        .combinations(size)
        .map(|jobs| Matching::canonical(&jobs, state))
        .collect())
}

/// Every feasible matching including idling ones (all sizes `0..=min(K, F)`).
pub fn all_matchings(state: &State, instance: &Instance) -> Result<Vec<Matching>> {
    state.validate_for(instance)?;
    let waiting: Vec<usize> = state.waiting_jobs().collect();
    let max = waiting.len().min(state.free_processors().count());
    Ok((0..=max)
        .flat_map(|size| waiting.iter().copied().combinations(size))
        .map(|jobs| Matching::canonical(&jobs, state))
        .collect())
}

/// Distribution of the remaining service of job `j` given the observable state.
pub fn residual_dist(state: &State, instance: &Instance, j: usize) -> Result<ServiceDist> {
    let service = &instance.job(j).service;
    match state.job_status(j) {
        JobStatus::Waiting => Ok(service.clone()),
        JobStatus::InService { start_slot, .. } => service.residual(state.t() - start_slot),
        JobStatus::Done => Err(SchedError::JobDone(j)),
    }
}
