use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::error::{Result, SchedError};
use crate::model::{Instance, JobStatus, Matching, ProcessorStatus, State};
use crate::policy::Policy;

pub(crate) const WAITING: u16 = 0;
pub(crate) const DONE: u16 = 1;
/// In-service codes are `IN_SERVICE + age`; untracked ages are stored as 0.
pub(crate) const IN_SERVICE: u16 = 2;

/// Status of one job inside a [`CanonicalStateKey`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyStatus {
    Waiting,
    Done,
    /// `age` is `None` when the job's service is memoryless and its age is not tracked.
    InService { age: Option<u32> },
}

/// Slot plus per-job status, with processor identities and (for memoryless
/// service) elapsed ages dropped. States sharing a key share a value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalStateKey {
    t: u32,
    codes: Box<[u16]>,
    tracked: Box<[bool]>,
}

impl CanonicalStateKey {
    pub fn t(&self) -> u32 {
        self.t
    }

    pub fn statuses(&self) -> impl Iterator<Item = KeyStatus> + '_ {
        self.codes.iter().zip(self.tracked.iter()).map(|(&c, &tr)| match c {
            WAITING => KeyStatus::Waiting,
            DONE => KeyStatus::Done,
            _ if tr => KeyStatus::InService {
                age: Some(u32::from(c - IN_SERVICE)),
            },
            _ => KeyStatus::InService { age: None },
        })
    }
}

impl fmt::Display for CanonicalStateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for s in self.statuses() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            match s {
                KeyStatus::Waiting => f.write_str("W")?,
                KeyStatus::Done => f.write_str("D")?,
                KeyStatus::InService { age: None } => f.write_str("S")?,
                KeyStatus::InService { age: Some(a) } => write!(f, "S{a}")?,
            }
        }
        Ok(())
    }
}

/// Per-job key layout shared by the solver, the evaluator and lookups.
#[derive(Debug, Clone)]
pub(crate) struct KeyCodec {
    /// Whether the job's age is part of the key.
    pub tracked: Box<[bool]>,
}

impl KeyCodec {
    pub fn new(instance: &Instance, track_memoryless_ages: bool) -> Self {
        let tracked = instance
            .jobs()
            .iter()
            .map(|j| track_memoryless_ages || !j.service.is_memoryless())
            .collect();
        KeyCodec { tracked }
    }

    pub fn in_service_code(&self, j: usize, age: u32) -> u16 {
        if self.tracked[j] {
            IN_SERVICE + age as u16
        } else {
            IN_SERVICE
        }
    }

    pub fn encode(&self, state: &State) -> Box<[u16]> {
        (0..state.job_statuses().len())
            .map(|j| match state.job_status(j) {
                JobStatus::Waiting => WAITING,
                JobStatus::Done => DONE,
                JobStatus::InService { start_slot, .. } => self.in_service_code(j, state.t() - start_slot),
            })
            .collect()
    }

    /// A concrete state carrying the key. In-service jobs sit on processors in
    /// ascending job order; an untracked age is presented as 1 (start slot `t - 1`).
    pub fn representative(&self, t: u32, codes: &[u16], n_processors: usize) -> State {
        let mut jobs = Vec::with_capacity(codes.len());
        let mut processors = vec![ProcessorStatus::Free; n_processors];
        let mut next_proc = 0;
        for (j, &c) in codes.iter().enumerate() {
            jobs.push(match c {
                WAITING => JobStatus::Waiting,
                DONE => JobStatus::Done,
                _ => {
                    let age = if self.tracked[j] { u32::from(c - IN_SERVICE) } else { 1 };
                    let processor = next_proc;
                    next_proc += 1;
                    processors[processor] = ProcessorStatus::Busy { job: j };
                    JobStatus::InService {
                        processor,
                        start_slot: t.saturating_sub(age.max(1)),
                    }
                }
            });
        }
        State::from_parts(t, jobs, processors)
    }

    pub fn key(&self, t: u32, codes: &[u16]) -> CanonicalStateKey {
        CanonicalStateKey {
            t,
            codes: codes.into(),
            tracked: self.tracked.clone(),
        }
    }
}

/// All states reachable at one slot, with their values and chosen actions.
#[derive(Debug, Default)]
pub(crate) struct Layer {
    pub index: HashMap<Box<[u16]>, usize>,
    pub keys: Vec<Box<[u16]>>,
    /// Candidate actions (job bitmasks) of state `i` are `actions[offsets[i]..offsets[i + 1]]`.
    pub actions: Vec<u64>,
    pub offsets: Vec<usize>,
    pub values: Vec<f64>,
    pub chosen: Vec<u64>,
}

impl Layer {
    pub fn new() -> Self {
        Layer {
            offsets: vec![0],
            ..Default::default()
        }
    }

    /// Returns the index of `codes`, inserting it if new.
    pub fn intern(&mut self, codes: Box<[u16]>) -> usize {
        if let Some(&i) = self.index.get(&codes) {
            return i;
        }
        let i = self.keys.len();
        self.index.insert(codes.clone(), i);
        self.keys.push(codes);
        i
    }

    pub fn candidates(&self, i: usize) -> &[u64] {
        &self.actions[self.offsets[i]..self.offsets[i + 1]]
    }
}

pub(crate) fn mask_jobs(mask: u64) -> impl Iterator<Item = usize> {
    (0..64).filter(move |j| mask >> j & 1 == 1)
}

/// Value and decision for every reachable canonical state.
///
/// Built by [`crate::dp::solve_optimal`] (optimal argmax actions) or by
/// [`crate::dp::evaluate_policy_table`] (the evaluated policy's actions).
/// Terminal states (no waiting job, or `t >= horizon`) carry value 0 and the
/// empty action.
#[derive(Debug)]
pub struct PolicyTable {
    pub(crate) codec: KeyCodec,
    pub(crate) layers: Vec<Layer>,
    pub(crate) n_processors: usize,
    pub(crate) evaluations: u64,
}

impl PolicyTable {
    /// `J_0` at the all-waiting initial state.
    pub fn initial_value(&self) -> f64 {
        self.layers[0].values[0]
    }

    pub fn n_states(&self) -> usize {
        self.layers.iter().map(|l| l.keys.len()).sum()
    }

    /// Number of (state, action) pairs evaluated while building the table.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    fn locate(&self, state: &State) -> Option<(usize, usize)> {
        let layer = self.layers.get(state.t() as usize)?;
        if state.job_statuses().len() != self.codec.tracked.len() {
            return None;
        }
        let codes = self.codec.encode(state);
        layer.index.get(&codes).map(|&i| (state.t() as usize, i))
    }

    pub fn key_of(&self, state: &State) -> CanonicalStateKey {
        self.codec.key(state.t(), &self.codec.encode(state))
    }

    pub fn value(&self, state: &State) -> Option<f64> {
        self.locate(state).map(|(t, i)| self.layers[t].values[i])
    }

    /// Job ids of the stored action for `state`.
    pub fn action_jobs(&self, state: &State) -> Option<Vec<usize>> {
        self.locate(state)
            .map(|(t, i)| mask_jobs(self.layers[t].chosen[i]).collect())
    }

    /// Every entry, ordered by slot then key.
    pub fn entries(&self) -> Vec<(CanonicalStateKey, Vec<usize>, f64)> {
        let mut out = Vec::with_capacity(self.n_states());
        for (t, layer) in self.layers.iter().enumerate() {
            let mut order: Vec<usize> = (0..layer.keys.len()).collect();
            order.sort_by(|&a, &b| layer.keys[a].cmp(&layer.keys[b]));
            for i in order {
                out.push((
                    self.codec.key(t as u32, &layer.keys[i]),
                    mask_jobs(layer.chosen[i]).collect(),
                    layer.values[i],
                ));
            }
        }
        out
    }

    /// CSV audit dump with columns `t,jobs,action,value`.
    ///
    /// `jobs` lists one token per job: `W` waiting, `D` done, `S` in service
    /// (memoryless, age untracked) or `S<age>`. `action` lists the started job
    /// ids separated by spaces. Rows are ordered by slot, then key.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,jobs,action,value")?;
        for (key, action, value) in self.entries() {
            let action: Vec<String> = action.iter().map(|j| j.to_string()).collect();
            writeln!(w, "{},{},{},{}", key.t(), key, action.join(" "), value)?;
        }
        Ok(())
    }
}

impl Policy for PolicyTable {
    fn decide(&self, state: &State, _instance: &Instance) -> Result<Matching> {
        if state.processor_statuses().len() != self.n_processors {
            return Err(SchedError::PolicyLookup {
                t: state.t(),
                detail: "processor count differs from the solved instance".into(),
            });
        }
        match self.action_jobs(state) {
            Some(jobs) => Ok(Matching::canonical(&jobs, state)),
            None => Err(SchedError::PolicyLookup {
                t: state.t(),
                detail: format!("state [{}] is not in the table", self.key_of(state)),
            }),
        }
    }
}
